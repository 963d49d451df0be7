"""Scikit-learn style facade over the full simulation pipeline.

:class:`MCRFSimulator` packs estimation, model fitting and sequential
simulation behind the familiar ``fit`` / ``predict`` surface so the whole
pipeline can be driven from a couple of lines, cloned, and grid-searched
like any other estimator.  Samples go in as an ``(n, 2)`` coordinate array
plus a class vector; predictions come out as rasters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .demo import class_roles, fit_models
from .engine import simulate_ensemble
from .errors import ConfigError, DataError
from .grid import Raster, SampleSet
from .io import canonical_method
from .models import ValidationReport, validate_model_set
from .postprocess import (
    Ensemble,
    ProbabilityCube,
    accuracy,
    occurrence_probability,
    optimal_map,
)
from .transiograms import LagBinSpec, estimate_experimental

__all__ = ["MCRFSimulator"]


class MCRFSimulator(BaseEstimator):
    """Conditional categorical field simulator with an estimator interface.

    Parameters
    ----------
    method : str
        Joint modeling method: "linear", "mathematical" (alias "math")
        or "mixed".
    radius : float
        Search radius for the quadrantal neighborhood, in ground units.
    n_realizations : int
        Ensemble size used by :meth:`predict`, :meth:`predict_proba`
        and (by default) :meth:`simulate`.
    bin_width, n_bins : float, int
        Lag binning for transiogram estimation.
    pixel_size : float
        Minimum resolvable separation passed to the estimator.
    minor_threshold : float
        Marginal proportion below which a class is treated as minor by
        the mixed method.
    random_state : int
        Base seed for ensembles; realization r derives its own stream
        from (random_state, r), so runs are reproducible and
        thread-count invariant.
    threads : int
        Worker threads for ensemble runs.

    Attributes set by :meth:`fit` carry the trailing underscore:
    ``samples_``, ``transiograms_``, ``models_``, ``classes_``,
    ``n_classes_``, ``marginals_``, ``roles_``.
    """

    def __init__(self, method="mathematical", radius=10.0,
                 n_realizations=20, bin_width=4.0, n_bins=25,
                 pixel_size=1.0, minor_threshold=0.05,
                 random_state=0, threads=1):
        self.method = method
        self.radius = radius
        self.n_realizations = n_realizations
        self.bin_width = bin_width
        self.n_bins = n_bins
        self.pixel_size = pixel_size
        self.minor_threshold = minor_threshold
        self.random_state = random_state
        self.threads = threads

    # -- fitting -------------------------------------------------------

    def fit(self, X, y):
        """Estimate transiograms from point samples and build the model set.

        ``X`` is an (n, 2) array of ground coordinates, ``y`` the integer
        class id per point.  Class ids must cover 0 .. K-1 contiguously in
        the sense that K is taken as ``max(y) + 1``.  The fitted model set
        is constraint-checked out to twice the search radius; an invalid
        set raises :class:`DataError` rather than fitting silently.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != 2:
            raise DataError(
                f"X must have shape (n_samples, 2), got {X.shape}")
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(
                f"y must be one class id per row of X, got shape {y.shape}")
        if y.size == 0:
            raise DataError("cannot fit on an empty sample set")
        if not np.issubdtype(y.dtype, np.integer):
            rounded = np.rint(np.asarray(y, dtype=np.float64))
            if not np.array_equal(rounded, np.asarray(y, dtype=np.float64)):
                raise DataError("y must contain integer class ids")
            y = rounded.astype(np.int64)
        if y.min() < 0:
            raise DataError("class ids must be nonnegative")

        if self.radius <= 0:
            raise ConfigError("radius must be positive")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        method = canonical_method(self.method)

        n_classes = int(y.max()) + 1
        samples = SampleSet(x=X[:, 0], y=X[:, 1], classes=y,
                            n_classes=n_classes)
        exp = estimate_experimental(
            samples, LagBinSpec(float(self.bin_width), int(self.n_bins)),
            pixel_size=float(self.pixel_size))

        self.samples_ = samples
        self.transiograms_ = exp
        self.models_ = fit_models(exp, method, radius=float(self.radius))
        self.classes_ = np.arange(n_classes, dtype=np.int64)
        self.n_classes_ = n_classes
        self.marginals_ = exp.proportions.copy()
        self.roles_ = class_roles(exp.proportions, self.minor_threshold)
        return self

    def _check_fitted(self):
        if not hasattr(self, "models_"):
            raise NotFittedError(
                "this MCRFSimulator instance is not fitted yet; "
                "call fit(X, y) first")

    def _template(self, template) -> Raster:
        """Accept a Raster or an (nrows, ncols) shape as the simulation grid."""
        if isinstance(template, Raster):
            return template
        try:
            nrows, ncols = (int(v) for v in template)
        except (TypeError, ValueError):
            raise DataError(
                "template must be a Raster or an (nrows, ncols) pair")
        return Raster.domain(nrows, ncols, cell_size=float(self.pixel_size))

    # -- prediction ----------------------------------------------------

    def simulate(self, template, n_realizations=None, seed=None,
                 ) -> Ensemble:
        """Run a conditional ensemble on ``template``.

        ``template`` is a :class:`Raster` whose NODATA pattern defines the
        simulation domain, or an (nrows, ncols) pair for a full rectangle
        at ``pixel_size`` resolution.  ``n_realizations`` and ``seed``
        default to the constructor settings.
        """
        self._check_fitted()
        target = self._template(template)
        n_real = self.n_realizations if n_realizations is None \
            else int(n_realizations)
        base_seed = self.random_state if seed is None else int(seed)
        return simulate_ensemble(target, self.samples_, self.models_,
                                 float(self.radius), n_real,
                                 int(base_seed), threads=int(self.threads))

    def predict_proba(self, template) -> ProbabilityCube:
        """Class occurrence probabilities from a fresh ensemble.

        Deterministic for a given fitted state and ``random_state``; the
        ensemble is rerun on each call, so hold on to the cube when the
        optimal map is wanted too.
        """
        ens = self.simulate(template)
        return occurrence_probability(ens, self.n_classes_)

    def predict(self, template) -> Raster:
        """Optimal prediction map: per-cell argmax of :meth:`predict_proba`."""
        return optimal_map(self.predict_proba(template))

    def score(self, reference: Raster, policy="exclude_samples") -> float:
        """Overall accuracy of :meth:`predict` against a reference raster.

        The reference doubles as the simulation template, so its NODATA
        pattern is honored.  Returns a fraction in [0, 1]; conditioning
        cells are excluded by default.
        """
        self._check_fitted()
        if not isinstance(reference, Raster):
            raise DataError("score expects a reference Raster")
        predicted = self.predict(reference)
        report = accuracy(predicted, reference, self.samples_, policy=policy)
        return float(report.overall) / 100.0

    # -- inspection ----------------------------------------------------

    def validation_report(self, lag_max=None, step=0.25
                          ) -> ValidationReport:
        """Re-run the constraint sweep on the fitted model set."""
        self._check_fitted()
        if lag_max is None:
            lag_max = 2.0 * float(self.radius)
        return validate_model_set(self.models_, float(lag_max), step=step)
