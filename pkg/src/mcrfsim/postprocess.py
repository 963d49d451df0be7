"""Ensemble summaries: occurrence probabilities, optimal maps, accuracy.

All functions are pure; nothing here mutates a realization.  NODATA cells
are carried through untouched and never enter any denominator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DataError, EmptyInputError
from .grid import NODATA, Raster, SampleSet, snap_to_cell

POLICY_ALL = "all_cells"
POLICY_EXCLUDE_SAMPLES = "exclude_samples"
_POLICIES = (POLICY_ALL, POLICY_EXCLUDE_SAMPLES)

#: 4-connected structuring element for patch counting.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class Ensemble:
    """A set of simulated realizations sharing geometry and conditioning."""

    realizations: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.realizations:
            raise EmptyInputError("ensemble needs at least one realization")
        first = self.realizations[0]
        for r in self.realizations[1:]:
            if not first.same_geometry(r):
                raise DataError("ensemble realizations must share geometry")

    @property
    def n_real(self):
        return len(self.realizations)

    @property
    def geometry(self) -> Raster:
        return self.realizations[0]


@dataclass
class ProbabilityCube:
    """Per-class occurrence frequencies q_k over the grid.

    ``q`` has shape (n_classes, nrows, ncols); over data cells each column
    of class values sums to 1 and every entry is a multiple of 1/n_real.
    """

    q: np.ndarray
    n_real: int
    geometry: Raster

    @property
    def n_classes(self):
        return self.q.shape[0]

    @property
    def data_mask(self):
        return self.geometry.data_mask


def occurrence_probability(ens: Ensemble, n_classes: int | None = None
                           ) -> ProbabilityCube:
    """Count how often each class occurs at each cell across an ensemble."""
    if n_classes is None:
        n_classes = max(int(r.labels.max()) for r in ens.realizations) + 1
    stack = np.stack([r.labels for r in ens.realizations])
    q = np.empty((n_classes,) + stack.shape[1:], dtype=np.float64)
    for k in range(n_classes):
        q[k] = (stack == k).mean(axis=0)
    q[:, ~ens.geometry.data_mask] = 0.0
    return ProbabilityCube(q=q, n_real=ens.n_real, geometry=ens.geometry)


def optimal_map(cube: ProbabilityCube) -> Raster:
    """Most frequent class per cell; exact ties go to the smallest class id."""
    labels = np.argmax(cube.q, axis=0).astype(np.int32)
    labels[~cube.data_mask] = NODATA
    g = cube.geometry
    return g.copy_with(labels)


@dataclass
class AccuracyReport:
    """Correct-cell percentages, overall and conditioned on reference class."""

    overall: float
    per_class: np.ndarray
    class_counts: np.ndarray
    denominator_policy: str
    n_evaluated: int

    def row(self):
        """Overall followed by per-class values, for tabular export."""
        return [self.overall] + list(self.per_class)


def _sample_cell_mask(raster: Raster, samples: SampleSet):
    mask = np.zeros((raster.nrows, raster.ncols), dtype=bool)
    for x, y in zip(samples.x, samples.y):
        row, col = snap_to_cell(raster, x, y)
        mask[row, col] = True
    return mask


def accuracy(map_: Raster, reference: Raster, samples: SampleSet | None,
             policy: str = POLICY_EXCLUDE_SAMPLES) -> AccuracyReport:
    """Score a labeled map against a reference.

    Per-class values are reference-conditioned: of the evaluated cells whose
    reference class is k, the percentage the map got right.  The
    ``exclude_samples`` policy removes conditioning cells, which are correct
    by construction, from every denominator.
    """
    if policy not in _POLICIES:
        raise ValueError(f"policy must be one of {_POLICIES}")
    if not map_.same_geometry(reference):
        raise DataError("map and reference geometries differ")
    mask = map_.data_mask & reference.data_mask
    if policy == POLICY_EXCLUDE_SAMPLES:
        if samples is None:
            raise ValueError("exclude_samples policy needs the sample set")
        mask &= ~_sample_cell_mask(reference, samples)
    n_classes = int(max(map_.labels.max(), reference.labels.max())) + 1

    ref = reference.labels[mask]
    got = map_.labels[mask]
    correct = ref == got
    per_class = np.full(n_classes, np.nan)
    counts = np.zeros(n_classes, dtype=np.int64)
    for k in range(n_classes):
        sel = ref == k
        counts[k] = sel.sum()
        if counts[k]:
            per_class[k] = 100.0 * correct[sel].mean()
    overall = 100.0 * correct.mean() if ref.size else float("nan")
    return AccuracyReport(overall=overall, per_class=per_class,
                          class_counts=counts, denominator_policy=policy,
                          n_evaluated=int(ref.size))


def raster_proportions(raster: Raster, n_classes: int) -> np.ndarray:
    """Class shares over data cells, as percentages summing to 100."""
    data = raster.labels[raster.data_mask]
    if data.size == 0:
        raise EmptyInputError("raster has no data cells")
    counts = np.bincount(data, minlength=n_classes)
    return 100.0 * counts / counts.sum()


@dataclass
class ProportionReport:
    """Named rows of class percentages; each row sums to 100."""

    n_classes: int
    rows: list

    def get(self, name):
        for label, vec in self.rows:
            if label == name:
                return vec
        raise KeyError(name)


def proportion_report(subject, reference: Raster,
                      samples: SampleSet) -> ProportionReport:
    """Tabulate class percentages for reference, samples, and a result.

    ``subject`` is an Ensemble (row = mean over realizations) or a single
    labeled Raster.
    """
    n_classes = samples.n_classes
    rows = [("reference", raster_proportions(reference, n_classes))]
    counts = np.bincount(samples.classes, minlength=n_classes)
    rows.append(("samples", 100.0 * counts / counts.sum()))
    if isinstance(subject, Ensemble):
        per = np.stack([raster_proportions(r, n_classes)
                        for r in subject.realizations])
        rows.append(("realizations", per.mean(axis=0)))
    elif isinstance(subject, Raster):
        rows.append(("map", raster_proportions(subject, n_classes)))
    else:
        raise TypeError("subject must be an Ensemble or a Raster")
    return ProportionReport(n_classes=n_classes, rows=rows)


def patch_count(raster: Raster) -> int:
    """Number of 4-connected single-class patches over the data cells."""
    total = 0
    labels = raster.labels
    for k in np.unique(labels[raster.data_mask]):
        _, n = ndimage.label(labels == k, structure=_CROSS)
        total += int(n)
    return total
