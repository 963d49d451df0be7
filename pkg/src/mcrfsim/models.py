"""Continuous-lag transiogram models and the joint modeling methods.

Experimental transiograms are defined only at lag-bin centers; simulation
needs transition probabilities at arbitrary lags, jointly constrained so
every tail row of the matrix sums to one and stays nonnegative.  Three
ways to get there are provided:

* linear interpolation of the experimental points, with an analytic
  origin knot and one row entry left as the "rest" complement,
* mathematical curve families (exponential, Gaussian, spherical, and
  gamma-composite variants with a peak), fitted per entry, again closing
  each row with a rest complement,
* a mixed method that keeps interpolation wherever both classes have
  reliable experimental curves and switches to mathematical models for
  entries involving minor classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, EmptyInputError, UnreliableEntriesError
from .grid import check_proportions
from .transiograms import ExperimentalTransiogramMatrix

EXPONENTIAL_AUTO = "ExponentialAuto"
EXPONENTIAL_CROSS = "ExponentialCross"
GAUSSIAN_CROSS = "GaussianCross"
SPHERICAL_CROSS = "SphericalCross"
GAMMA_EXPONENTIAL = "GammaExponential"
GAMMA_GAUSSIAN = "GammaGaussian"
GAMMA_SPHERICAL = "GammaSpherical"
INTERPOLATED = "Interpolated"
REST = "Rest"

BASIC_KINDS = frozenset({EXPONENTIAL_AUTO, EXPONENTIAL_CROSS,
                         GAUSSIAN_CROSS, SPHERICAL_CROSS})
GAMMA_KINDS = frozenset({GAMMA_EXPONENTIAL, GAMMA_GAUSSIAN, GAMMA_SPHERICAL})
PARAMETRIC_KINDS = BASIC_KINDS | GAMMA_KINDS
ALL_KINDS = PARAMETRIC_KINDS | {INTERPOLATED, REST}

METHOD_LINEAR = "linear"
METHOD_MATHEMATICAL = "mathematical"
METHOD_MIXED = "mixed"
METHODS = (METHOD_LINEAR, METHOD_MATHEMATICAL, METHOD_MIXED)

#: Constraint tolerances for validated model sets.
SUM_TOL = 1e-9
NEG_TOL = -1e-9


@dataclass(frozen=True)
class ModelDescriptor:
    """One transiogram model entry.

    Parametric kinds use ``sill`` (c), ``range`` (d) and, for the gamma
    composites, ``alpha``, ``theta`` and ``weight``.  ``sill=None`` marks a
    template whose sill is resolved to the head-class proportion when the
    model set is assembled.  ``Interpolated`` carries only ``knots``, a
    strictly increasing sequence of (lag, value) pairs starting with the
    analytic origin knot at lag 0.  ``Rest`` carries nothing; its value is
    one minus the rest of its row.
    """

    kind: str
    sill: float | None = None
    range: float | None = None
    alpha: float | None = None
    theta: float | None = None
    weight: float | None = None
    knots: tuple | None = None

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == REST:
            self._forbid("sill", "range", "alpha", "theta", "weight", "knots")
            return
        if self.kind == INTERPOLATED:
            self._forbid("sill", "range", "alpha", "theta", "weight")
            self._check_knots()
            return
        self._forbid("knots")
        if self.range is None or self.range <= 0:
            raise ValueError(f"{self.kind} requires a positive range")
        if self.sill is not None and not 0 < self.sill < 1:
            raise ValueError(f"sill must be in (0, 1), got {self.sill}")
        if self.kind in GAMMA_KINDS:
            if self.alpha is None or self.alpha <= 1:
                raise ValueError(f"{self.kind} requires alpha > 1")
            if self.theta is None or self.theta <= 0:
                raise ValueError(f"{self.kind} requires theta > 0")
            if self.weight is None or self.weight < 0:
                raise ValueError(f"{self.kind} requires weight >= 0")
        else:
            self._forbid("alpha", "theta", "weight")

    def _forbid(self, *names):
        for name in names:
            if getattr(self, name) is not None:
                raise ValueError(f"{self.kind} does not take {name!r}")

    def _check_knots(self):
        if not self.knots:
            raise ConfigError("Interpolated model requires at least one knot")
        knots = tuple((float(lag), float(val)) for lag, val in self.knots)
        object.__setattr__(self, "knots", knots)
        lags = [lag for lag, _ in knots]
        if lags[0] != 0.0:
            raise ValueError("Interpolated knots must start with the origin "
                             "knot at lag 0")
        if any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError("Interpolated knot lags must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for _, v in knots):
            raise ValueError("Interpolated knot values must lie in [0, 1]")

    @property
    def origin_value(self):
        """Model value at lag 0."""
        if self.kind == EXPONENTIAL_AUTO:
            return 1.0
        if self.kind == INTERPOLATED:
            return self.knots[0][1]
        if self.kind == REST:
            raise ConfigError("Rest has no standalone origin value")
        return 0.0

    def resolved(self, default_sill):
        """Copy with the sill filled in when the template left it open."""
        if self.kind in (INTERPOLATED, REST) or self.sill is not None:
            return self
        if not 0 < default_sill < 1:
            raise ConfigError(f"default sill {default_sill} outside (0, 1); "
                              "set an explicit sill for this entry")
        return replace(self, sill=float(default_sill))


def _lag_array(h):
    arr = np.asarray(h, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("lag must be nonnegative")
    return arr


def _match_shape(out, h):
    if np.isscalar(h) or np.ndim(h) == 0:
        return float(out)
    return out


def _require_sill(descr):
    if descr.sill is None:
        raise ConfigError(f"{descr.kind} entry has an unresolved sill")


def eval_basic(descr: ModelDescriptor, h):
    """Evaluate an exponential, Gaussian or spherical transiogram model.

    The auto form starts at 1 and decays toward its sill c; the cross forms
    start at 0 and rise toward c, the spherical one reaching it exactly at
    the range d.
    """
    if descr.kind not in BASIC_KINDS:
        raise ValueError(f"eval_basic cannot handle kind {descr.kind!r}")
    _require_sill(descr)
    u = _lag_array(h) / descr.range
    c = descr.sill
    if descr.kind == EXPONENTIAL_AUTO:
        out = 1.0 - (1.0 - c) * (1.0 - np.exp(-3.0 * u))
    elif descr.kind == EXPONENTIAL_CROSS:
        out = c * (1.0 - np.exp(-3.0 * u))
    elif descr.kind == GAUSSIAN_CROSS:
        out = c * (1.0 - np.exp(-((3.0 * u) ** 2)))
    else:
        out = np.where(u < 1.0, c * (1.5 * u - 0.5 * u ** 3), c)
    return _match_shape(out, h)


def gamma_pdf(x, alpha, theta):
    """Gamma probability density x^(a-1) e^(-x/t) / (Gamma(a) t^a)."""
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("gamma density argument must be nonnegative")
    out = np.zeros(arr.shape)
    pos = arr > 0
    lg = math.lgamma(alpha)
    with np.errstate(divide="ignore"):
        out[pos] = np.exp((alpha - 1.0) * np.log(arr[pos]) - arr[pos] / theta
                          - lg - alpha * math.log(theta))
    if np.any(~pos):
        if alpha > 1:
            at_zero = 0.0
        elif alpha == 1:
            at_zero = 1.0 / theta
        else:
            at_zero = np.inf
        out[~pos] = at_zero
    return _match_shape(out, x)


def eval_gamma_composite(descr: ModelDescriptor, h):
    """Evaluate a gamma-composite cross model.

    The curve is the matching basic cross shape plus a weighted gamma
    density in the scaled lag h/d, the whole bracket multiplied by the
    sill.  With alpha > 1 the density vanishes at the origin and produces
    the peak these models exist for; weight 0 reduces to the basic shape.
    """
    if descr.kind not in GAMMA_KINDS:
        raise ValueError(f"eval_gamma_composite cannot handle {descr.kind!r}")
    _require_sill(descr)
    u = _lag_array(h) / descr.range
    bump = descr.weight * gamma_pdf(u, descr.alpha, descr.theta)
    if descr.kind == GAMMA_EXPONENTIAL:
        base = 1.0 - np.exp(-3.0 * u)
    elif descr.kind == GAMMA_GAUSSIAN:
        base = 1.0 - np.exp(-((3.0 * u) ** 2))
    else:
        base = np.where(u < 1.0, 1.5 * u - 0.5 * u ** 3, 1.0)
    out = descr.sill * (base + bump)
    return _match_shape(out, h)


def interpolate_empirical(knots, h):
    """Piecewise-linear transiogram through (lag, value) knots.

    Values hold flat beyond the last knot; together with per-row shared
    knot lags this keeps interpolated rows summing to one at every lag.
    """
    if not knots:
        raise ConfigError("cannot interpolate an empty knot list")
    lags = np.asarray([k[0] for k in knots], dtype=np.float64)
    vals = np.asarray([k[1] for k in knots], dtype=np.float64)
    if np.any(np.diff(lags) <= 0):
        raise ValueError("knot lags must be strictly increasing")
    out = np.interp(_lag_array(h), lags, vals)
    return _match_shape(out, h)


def evaluate_descriptor(descr: ModelDescriptor, h):
    """Evaluate any standalone model kind (everything except Rest)."""
    if descr.kind in BASIC_KINDS:
        return eval_basic(descr, h)
    if descr.kind in GAMMA_KINDS:
        return eval_gamma_composite(descr, h)
    if descr.kind == INTERPOLATED:
        return interpolate_empirical(descr.knots, h)
    raise ConfigError("Rest entries evaluate only inside a model set row")


@dataclass
class TransiogramModelSet:
    """Complete n x n matrix of transiogram models, one Rest entry per row."""

    n_classes: int
    entries: list
    rest_heads: np.ndarray
    marginals: np.ndarray
    method: str = METHOD_MATHEMATICAL
    validated_lag_max: float | None = None

    def __post_init__(self):
        n = self.n_classes
        self.rest_heads = np.asarray(self.rest_heads, dtype=np.int64)
        self.marginals = check_proportions(self.marginals, n)
        if self.rest_heads.shape != (n,):
            raise ConfigError("rest_heads must give one head class per row")
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ConfigError("entries must form an n x n matrix")
        for i, row in enumerate(self.entries):
            rests = [j for j, e in enumerate(row) if e.kind == REST]
            if rests != [int(self.rest_heads[i])]:
                raise ConfigError(
                    f"row {i} must have exactly one Rest entry at head "
                    f"{int(self.rest_heads[i])}, found {rests}")

    def entry(self, tail, head) -> ModelDescriptor:
        return self.entries[tail][head]


def eval_rest(model_set: TransiogramModelSet, row: int, h):
    """Row-closing complement: one minus the sum of the other row entries."""
    hs = _lag_array(h)
    total = np.zeros(hs.shape)
    rest = int(model_set.rest_heads[row])
    for j in range(model_set.n_classes):
        if j == rest:
            continue
        total += evaluate_descriptor(model_set.entry(row, j), hs)
    return _match_shape(1.0 - total, h)


def evaluate_matrix_raw(model_set: TransiogramModelSet, h) -> np.ndarray:
    """Transition matrices at lag(s) h with no clamping, shape (..., n, n).

    Raw values are what constraint validation must see; simulation uses
    :func:`evaluate_matrix` instead.
    """
    hs = np.atleast_1d(_lag_array(h))
    n = model_set.n_classes
    out = np.empty((hs.shape[0], n, n))
    for i in range(n):
        rest = int(model_set.rest_heads[i])
        acc = np.zeros(hs.shape[0])
        for j in range(n):
            if j == rest:
                continue
            out[:, i, j] = evaluate_descriptor(model_set.entry(i, j), hs)
            acc += out[:, i, j]
        out[:, i, rest] = 1.0 - acc
    if np.isscalar(h) or np.ndim(h) == 0:
        return out[0]
    return out


def evaluate_matrix(model_set: TransiogramModelSet, h) -> np.ndarray:
    """Row-stochastic transition matrices at lag(s) h.

    Tolerance-level negatives from Rest entries are clamped to zero and the
    row renormalized, keeping downstream probability math legal.  Sets that
    fail validation outright should be fixed, not evaluated.
    """
    raw = evaluate_matrix_raw(model_set, h)
    clipped = np.clip(raw, 0.0, None)
    sums = clipped.sum(axis=-1, keepdims=True)
    if np.any(sums <= 0):
        raise ConfigError("model set row sums vanished; validate the set")
    return clipped / sums


@dataclass
class ValidationReport:
    """Constraint-sweep outcome for a candidate model set."""

    valid: bool
    lag_max: float
    step: float
    row_sum_err: np.ndarray
    max_row_sum_err: float
    worst_sum_row: int
    worst_sum_lag: float
    min_value: float
    min_tail: int
    min_head: int
    min_lag: float
    max_value: float

    def summary(self) -> str:
        state = "valid" if self.valid else "INVALID"
        return (f"{state}: swept lags [0, {self.lag_max:g}] at step "
                f"{self.step:g}; worst row-sum deviation "
                f"{self.max_row_sum_err:.3e} (row {self.worst_sum_row} at lag "
                f"{self.worst_sum_lag:g}); minimum entry {self.min_value:.3e} "
                f"(p[{self.min_tail},{self.min_head}] at lag {self.min_lag:g})")


def validate_model_set(model_set: TransiogramModelSet, lag_max: float,
                       step: float = 0.25) -> ValidationReport:
    """Sweep the constraint conditions over a lag grid.

    Every row must sum to one and every entry must be nonnegative, both
    within 1e-9, at all swept lags.  On success the set's
    ``validated_lag_max`` is stamped.
    """
    if lag_max <= 0:
        raise ValueError("lag_max must be positive")
    if not 0 < step <= 0.25:
        raise ValueError("validation step must be in (0, 0.25]")
    k = math.ceil(lag_max / step)
    hs = np.linspace(0.0, k * step, k + 1)
    raw = evaluate_matrix_raw(model_set, hs)

    sum_err = np.abs(raw.sum(axis=2) - 1.0)
    row_err = sum_err.max(axis=0)
    worst_flat = int(np.argmax(sum_err))
    worst_h, worst_row = np.unravel_index(worst_flat, sum_err.shape)

    min_flat = int(np.argmin(raw))
    min_h, min_i, min_j = np.unravel_index(min_flat, raw.shape)
    min_value = float(raw[min_h, min_i, min_j])

    valid = bool(min_value >= NEG_TOL and row_err.max() <= SUM_TOL)
    if valid:
        model_set.validated_lag_max = float(hs[-1])
    return ValidationReport(
        valid=valid, lag_max=float(hs[-1]), step=step,
        row_sum_err=row_err, max_row_sum_err=float(row_err.max()),
        worst_sum_row=int(worst_row), worst_sum_lag=float(hs[worst_h]),
        min_value=min_value, min_tail=int(min_i), min_head=int(min_j),
        min_lag=float(hs[min_h]), max_value=float(raw.max()))


def _interpolated_from_exp(exp: ExperimentalTransiogramMatrix, tail, head):
    bins = exp.defined_bins(tail, head)
    if bins.size == 0:
        return None
    origin = 1.0 if tail == head else 0.0
    knots = ((0.0, origin),) + tuple(
        (float(exp.lags[k]), float(exp.prob[tail, head, k])) for k in bins)
    return ModelDescriptor(kind=INTERPOLATED, knots=knots)


def _check_entry_position(descr: ModelDescriptor, tail, head):
    if descr.kind == EXPONENTIAL_AUTO and tail != head:
        raise ConfigError(f"entry ({tail}, {head}): auto model on an "
                          "off-diagonal entry")
    if descr.kind in (PARAMETRIC_KINDS - {EXPONENTIAL_AUTO}) and tail == head:
        raise ConfigError(f"entry ({tail}, {head}): cross model on a "
                          "diagonal entry")
    if descr.kind == INTERPOLATED:
        want = 1.0 if tail == head else 0.0
        if descr.origin_value != want:
            raise ConfigError(f"entry ({tail}, {head}): interpolated origin "
                              f"must be {want}")


def _normalize_roles(roles, n):
    if roles is None:
        raise ConfigError("the mixed method requires class roles")
    if len(roles) != n:
        raise ConfigError(f"expected {n} class roles, got {len(roles)}")
    out = []
    for r in roles:
        out.append(r.role if hasattr(r, "role") else str(r))
    return out


def build_model_set(exp: ExperimentalTransiogramMatrix | None, method: str,
                    descriptors=None, marginals=None, rest_heads=None,
                    roles=None) -> TransiogramModelSet:
    """Assemble a jointly constrained model set by one of the three methods.

    ``descriptors`` maps (tail, head) to a ModelDescriptor; templates with
    ``sill=None`` get the head-class marginal as their sill.  ``rest_heads``
    picks the complement entry per row (default: the largest-marginal
    class, for every row).  ``roles`` (per class, "major" / "moderate" /
    "minor") is consulted by the mixed method: entries whose tail or head
    is minor use mathematical models, everything else is interpolated.
    """
    method = str(method).lower()
    if method not in METHODS:
        raise ConfigError(f"unknown joint modeling method {method!r}")
    if marginals is None:
        if exp is None:
            raise ConfigError("need either experimental transiograms or "
                              "explicit marginals")
        marginals = exp.proportions
    n = len(marginals)
    marginals = check_proportions(marginals, n)
    if exp is not None and exp.n_classes != n:
        raise ConfigError("marginals length does not match the experimental "
                          "transiogram matrix")
    if exp is None and method != METHOD_MATHEMATICAL:
        raise ConfigError(f"the {method} method requires experimental "
                          "transiograms")

    if rest_heads is None:
        rest_heads = np.full(n, int(np.argmax(marginals)), dtype=np.int64)
    elif np.isscalar(rest_heads):
        rest_heads = np.full(n, int(rest_heads), dtype=np.int64)
    else:
        rest_heads = np.asarray(rest_heads, dtype=np.int64)
    if rest_heads.shape != (n,) or rest_heads.min() < 0 or rest_heads.max() >= n:
        raise ConfigError("rest_heads must be valid class ids, one per row")

    descriptors = dict(descriptors or {})
    for (i, j) in descriptors:
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"descriptor entry ({i}, {j}) out of range")
        if j == rest_heads[i]:
            raise ConfigError(f"entry ({i}, {j}) is the row's Rest slot; "
                              "it cannot take a descriptor")

    if method == METHOD_MIXED:
        role_list = _normalize_roles(roles, n)
        minor = [r == "minor" for r in role_list]
    else:
        minor = [False] * n

    def wants_math(i, j):
        if method == METHOD_MATHEMATICAL:
            return True
        if method == METHOD_MIXED:
            return minor[i] or minor[j]
        return False

    unreliable = []
    missing = []
    entries = []
    for i in range(n):
        row = []
        for j in range(n):
            if j == rest_heads[i]:
                row.append(ModelDescriptor(kind=REST))
                continue
            if wants_math(i, j):
                descr = descriptors.get((i, j))
                if descr is None:
                    missing.append((i, j))
                    continue
                descr = descr.resolved(marginals[j])
                _check_entry_position(descr, i, j)
                row.append(descr)
            else:
                descr = _interpolated_from_exp(exp, i, j)
                if descr is None:
                    unreliable.append((i, j))
                    continue
                row.append(descr)
        entries.append(row)

    if missing:
        raise ConfigError("missing model descriptors for entries: "
                          + ", ".join(map(str, missing)))
    if unreliable:
        raise UnreliableEntriesError(unreliable)

    return TransiogramModelSet(n_classes=n, entries=entries,
                               rest_heads=rest_heads, marginals=marginals,
                               method=method)


def fit_rmse(entry_model: ModelDescriptor, knots, low_lag_cutoff: float):
    """Root-mean-square misfit of a model against experimental knots.

    Returns (rmse over all knots, rmse over knots with lag <= cutoff); the
    second is NaN when no knot falls below the cutoff.  Low-lag misfit is
    reported separately because short-range structure dominates the
    simulation behavior.
    """
    if not knots:
        raise EmptyInputError("cannot score a model against zero knots")
    lags = np.asarray([k[0] for k in knots], dtype=np.float64)
    vals = np.asarray([k[1] for k in knots], dtype=np.float64)
    pred = np.atleast_1d(evaluate_descriptor(entry_model, lags))
    sq = (pred - vals) ** 2
    rmse_all = float(np.sqrt(sq.mean()))
    low = lags <= low_lag_cutoff
    rmse_low = float(np.sqrt(sq[low].mean())) if low.any() else math.nan
    return rmse_all, rmse_low


@dataclass
class ModelTable:
    """Pre-tabulated row-stochastic transition matrices on a uniform lag grid.

    ``values[k]`` is the clamped, renormalized matrix at lag k * step; the
    simulation engine interpolates linearly between rows, which preserves
    both constraints.  The interpolation accuracy target holds from one
    pixel outward, the shortest possible distance between distinct cells;
    below that, lookups still interpolate between exact node values.
    """

    step: float
    lag_max: float
    values: np.ndarray
    marginals: np.ndarray

    def lookup(self, h):
        """Linear interpolation at lag h (clamped to the tabulated span)."""
        pos = min(max(h, 0.0), self.lag_max) / self.step
        i0 = min(int(pos), self.values.shape[0] - 2)
        frac = pos - i0
        return (1.0 - frac) * self.values[i0] + frac * self.values[i0 + 1]


def tabulate_model_set(model_set: TransiogramModelSet, lag_max: float,
                       base_step: float = 0.05, tol: float = 1e-6,
                       max_refinements: int = 6) -> ModelTable:
    """Tabulate a model set for fast lookup, refining until accurate.

    The step starts at ``base_step`` and is halved until the midpoint
    interpolation error drops to ``tol``; sharply peaked gamma entries are
    what occasionally forces a refinement.  The error is measured at lags
    of one pixel and beyond: cell-to-cell lags can never be shorter, and a
    gamma bump with alpha < 2 has unbounded curvature at the origin that
    no uniform step could track.
    """
    if lag_max <= 0:
        raise ValueError("lag_max must be positive")
    step = float(base_step)
    for _ in range(max_refinements + 1):
        k = math.ceil(lag_max / step)
        hs = np.linspace(0.0, k * step, k + 1)
        vals = evaluate_matrix(model_set, hs)
        mids = hs[:-1] + step / 2.0
        direct = evaluate_matrix(model_set, mids)
        gap = np.abs(0.5 * (vals[:-1] + vals[1:]) - direct)
        scope = mids >= 1.0
        err = gap[scope].max() if scope.any() else 0.0
        if err <= tol:
            return ModelTable(step=step, lag_max=float(hs[-1]),
                              values=np.ascontiguousarray(vals),
                              marginals=model_set.marginals.copy())
        step /= 2.0
    raise ConfigError(f"tabulation failed to reach error {tol:g}; "
                      f"residual {err:.2e} at step {step * 2:g}")
