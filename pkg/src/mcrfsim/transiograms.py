"""Experimental transiogram estimation from point samples.

A transiogram entry p_ij(h) is the probability of finding class j at lag h
given class i at the tail of the lag vector.  Estimation here is
omnidirectional: every ordered pair of distinct sample points contributes
one transition count to the lag bin containing its separation distance,
and probabilities are obtained by normalizing counts over the head class
within each (tail, bin) slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError
from .grid import SampleSet, class_proportions


@dataclass(frozen=True)
class LagBinSpec:
    """Uniform lag bins for omnidirectional estimation.

    Bin k (1-based) is centered at k * width and spans the half-open
    interval [(k - 0.5) * width, (k + 0.5) * width).  Lag zero is not
    estimated; separations below half a bin width are discarded.
    """

    width: float
    n_bins: int

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bin width must be positive")
        if self.n_bins < 1:
            raise ValueError("need at least one lag bin")

    @property
    def centers(self) -> np.ndarray:
        return np.arange(1, self.n_bins + 1, dtype=np.float64) * self.width

    @property
    def edges(self) -> np.ndarray:
        """Shared bin edges; edge k is (k + 0.5) * width, k = 0 .. n_bins."""
        return (np.arange(self.n_bins + 1, dtype=np.float64) + 0.5) * self.width

    @property
    def max_lag(self) -> float:
        return float(self.edges[-1])


@dataclass
class ExperimentalTransiogramMatrix:
    """Binned transition counts and probabilities for every class pair.

    ``prob[i, j, k]`` is the estimated p_ij at lag ``lags[k]``; entries where
    the tail class has no pairs in the bin are NaN (missing), and every
    defined tail row sums to 1 within each bin by construction.
    """

    n_classes: int
    lags: np.ndarray
    bin_width: float
    counts: np.ndarray
    prob: np.ndarray
    proportions: np.ndarray
    pixel_size: float = 1.0

    @property
    def n_bins(self) -> int:
        return self.lags.shape[0]

    def tail_totals(self) -> np.ndarray:
        """Pairs per (tail class, bin), shape (n_classes, n_bins)."""
        return self.counts.sum(axis=1)

    def defined(self) -> np.ndarray:
        """Boolean mask of non-missing probability entries."""
        return ~np.isnan(self.prob)

    def defined_bins(self, tail: int, head: int) -> np.ndarray:
        """Indices of bins where entry (tail, head) is defined."""
        return np.nonzero(self.defined()[tail, head])[0]


def estimate_experimental(samples: SampleSet, bins: LagBinSpec,
                          pixel_size: float = 1.0) -> ExperimentalTransiogramMatrix:
    """Estimate the full transiogram matrix from a point sample set.

    Separation distances are divided by ``pixel_size`` so lag bins can be
    expressed in pixel units regardless of the ground coordinate system.
    Every ordered pair (a, b), a != b, adds one count to
    counts[class_a, class_b, bin(h_ab)]; because both orderings of each
    point pair are counted, the count array is symmetric in its class axes.
    """
    if len(samples) == 0:
        raise EmptyInputError("cannot estimate transiograms from an empty sample set")
    if pixel_size <= 0:
        raise ValueError("pixel_size must be positive")

    n = samples.n_classes
    dx = samples.x[:, None] - samples.x[None, :]
    dy = samples.y[:, None] - samples.y[None, :]
    h = np.sqrt(dx * dx + dy * dy) / pixel_size

    # searchsorted against the shared edge grid reproduces the half-open
    # interval test [(k-0.5)w, (k+0.5)w) exactly, boundary floats included.
    k = np.searchsorted(bins.edges, h, side="right")
    a, b = np.nonzero((k >= 1) & (k <= bins.n_bins)
                      & ~np.eye(len(samples), dtype=bool))

    counts = np.zeros((n, n, bins.n_bins), dtype=np.int64)
    np.add.at(counts,
              (samples.classes[a], samples.classes[b], k[a, b] - 1), 1)

    totals = counts.sum(axis=1, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        prob = counts / totals[:, None, :]
    prob[np.broadcast_to((totals == 0)[:, None, :], prob.shape)] = np.nan

    return ExperimentalTransiogramMatrix(
        n_classes=n, lags=bins.centers, bin_width=bins.width,
        counts=counts, prob=prob,
        proportions=class_proportions(samples), pixel_size=pixel_size)


def reversibility_residual(t: ExperimentalTransiogramMatrix,
                           proportions=None) -> float:
    """Largest deviation from the reversibility relation p_ij h p_i = p_ji h p_j.

    Uses the sample proportions stored on the matrix unless an explicit
    vector is given.  Entries where either direction is missing are skipped;
    returns NaN when nothing is defined.
    """
    p = t.proportions if proportions is None else np.asarray(proportions)
    fwd = t.prob * p[:, None, None]
    bwd = np.swapaxes(t.prob, 0, 1) * p[None, :, None]
    resid = np.abs(fwd - bwd)
    if np.all(np.isnan(resid)):
        return math.nan
    return float(np.nanmax(resid))
