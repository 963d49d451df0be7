"""Random-path sequential simulation with quadrantal neighborhoods.

The local conditional distribution at an unknown cell combines the
transition probabilities to its nearest known neighbor in each of the four
axis-aligned quadrants, under conditional independence of those neighbors
given the cell.  Cells are visited in a seeded random order and every drawn
label immediately joins the conditioning data.

The hot loop is compiled with numba; all randomness (the visiting order and
one uniform variate per cell) is pregenerated from a seeded generator, so a
(inputs, seed) pair maps to exactly one output raster on any platform.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import ConfigError, DataError, EmptyInputError, McrfsimError
from .grid import NODATA, Raster, SampleSet, snap_to_cell
from .models import TransiogramModelSet, evaluate_matrix, tabulate_model_set
from .postprocess import Ensemble

log = logging.getLogger(__name__)

#: Label for cells not yet visited by the simulation path.
UNSIMULATED = -2


@dataclass
class SimulationState:
    """A raster mid-simulation plus the generator driving it.

    The conditioning index is the label grid itself: any cell with a
    nonnegative label (an original sample or an already simulated cell)
    conditions later draws.  Known cells only accumulate; samples are never
    overwritten.
    """

    grid: Raster
    rng: object = None

    @property
    def known_mask(self):
        return self.grid.labels >= 0


@dataclass(frozen=True)
class Neighbor:
    """One conditioning datum: its class, lag to the target, and quadrant."""

    class_id: int
    lag: float
    quadrant: int
    row: int
    col: int


@dataclass(frozen=True)
class Neighborhood:
    """Up to one nearest known cell per quadrant around a target cell.

    ``designated_from`` indexes the minimum-lag entry, the datum treated as
    the transition source; lag ties go to the lowest quadrant index.
    """

    neighbors: tuple
    designated_from: int = -1

    def __len__(self):
        return len(self.neighbors)


def quadrant_of(dx: float, dy: float) -> int:
    """Quadrant index of direction (dx, dy): 0 NE, 1 NW, 2 SW, 3 SE.

    x grows east and y grows north (row 0 is the bottom row), with each
    quadrant taking a 90 degree slice closed at its start angle: east is
    NE, north is NW, west is SW, south is SE.  (0, 0) is not a direction.
    """
    if dx > 0 and dy >= 0:
        return 0
    if dx <= 0 and dy > 0:
        return 1
    if dx < 0 and dy <= 0:
        return 2
    return 3


@lru_cache(maxsize=32)
def _ring_geometry(max_ring: int, radius: float):
    """Precomputed ring-by-ring cell offsets within a search radius.

    Returns (starts, dr, dc, dist, quad) arrays; ring R occupies the slice
    ``starts[R-1]:starts[R]``.  Offsets beyond the Euclidean radius are
    dropped here so the search loops never test the radius again.
    """
    starts = [0]
    drs, dcs, dists, quads = [], [], [], []
    for ring in range(1, max_ring + 1):
        for dr in range(-ring, ring + 1):
            for dc in range(-ring, ring + 1):
                if max(abs(dr), abs(dc)) != ring:
                    continue
                d = math.sqrt(dr * dr + dc * dc)
                if d > radius:
                    continue
                drs.append(dr)
                dcs.append(dc)
                dists.append(d)
                quads.append(quadrant_of(dc, dr))
        starts.append(len(drs))
    return (np.asarray(starts, dtype=np.int64),
            np.asarray(drs, dtype=np.int64),
            np.asarray(dcs, dtype=np.int64),
            np.asarray(dists, dtype=np.float64),
            np.asarray(quads, dtype=np.int64))


def find_neighbors(state: SimulationState, target_cell, radius: float
                   ) -> Neighborhood:
    """Nearest known cell per quadrant within ``radius`` pixel lengths.

    Scans outward over square rings, closing a quadrant once a datum is
    found there and stopping entirely when no unscanned ring can improve
    any quadrant.  Distances are Euclidean center-to-center in pixel
    units; equidistant candidates resolve by (row, col) order.  An empty
    neighborhood is a normal outcome on sparse grids.
    """
    if radius <= 0:
        raise ConfigError("search radius must be positive")
    labels = state.grid.labels
    nrows, ncols = labels.shape
    row, col = target_cell
    starts, odr, odc, odist, oquad = _ring_geometry(int(radius), float(radius))

    q_class = [-1, -1, -1, -1]
    q_dist = [0.0, 0.0, 0.0, 0.0]
    q_row = [0, 0, 0, 0]
    q_col = [0, 0, 0, 0]
    m = 0
    for ring in range(1, starts.shape[0]):
        if m == 4 and all(q_dist[q] < ring for q in range(4)):
            break
        for i in range(starts[ring - 1], starts[ring]):
            rr = row + odr[i]
            cc = col + odc[i]
            if rr < 0 or rr >= nrows or cc < 0 or cc >= ncols:
                continue
            lab = labels[rr, cc]
            if lab < 0:
                continue
            q = oquad[i]
            d = odist[i]
            if q_class[q] < 0:
                m += 1
            elif (d, rr, cc) >= (q_dist[q], q_row[q], q_col[q]):
                continue
            q_class[q] = int(lab)
            q_dist[q] = float(d)
            q_row[q] = int(rr)
            q_col[q] = int(cc)

    entries = []
    designated = -1
    best = math.inf
    for q in range(4):
        if q_class[q] < 0:
            continue
        if q_dist[q] < best:
            best = q_dist[q]
            designated = len(entries)
        entries.append(Neighbor(class_id=q_class[q], lag=q_dist[q],
                                quadrant=q, row=q_row[q], col=q_col[q]))
    return Neighborhood(neighbors=tuple(entries), designated_from=designated)


@dataclass
class ConditionalDistribution:
    """Class probability vector at one cell: entries >= 0, summing to 1."""

    probs: np.ndarray
    used_fallback: bool = False


def _check_lags_covered(neigh: Neighborhood, models: TransiogramModelSet):
    if models.validated_lag_max is None:
        raise ConfigError("model set must pass constraint validation before "
                          "probability evaluation")
    worst = max(nb.lag for nb in neigh.neighbors)
    if models.validated_lag_max + 1e-9 < worst:
        raise ConfigError(
            f"model set validated to lag {models.validated_lag_max:g} but a "
            f"neighbor lies at lag {worst:g}")


def local_cpd(neigh: Neighborhood, models: TransiogramModelSet
              ) -> ConditionalDistribution:
    """Local conditional distribution given a quadrantal neighborhood.

    probs[k] is proportional to p_{l1,k}(h1) times the product over the
    remaining neighbors of p_{k,li}(hi), where l1 is the designated
    nearest datum.  An all-zero numerator vector falls back to the class
    marginals rather than dividing by zero; the empty neighborhood is the
    caller's case (draw from marginals directly).
    """
    if len(neigh) == 0:
        raise EmptyInputError("neighborhood is empty; draw from the marginal "
                              "distribution instead")
    _check_lags_covered(neigh, models)
    l1 = neigh.neighbors[neigh.designated_from]
    probs = evaluate_matrix(models, l1.lag)[l1.class_id, :].copy()
    for idx, nb in enumerate(neigh.neighbors):
        if idx == neigh.designated_from:
            continue
        probs *= evaluate_matrix(models, nb.lag)[:, nb.class_id]
    s = probs.sum()
    if s > 0.0:
        return ConditionalDistribution(probs / s)
    return ConditionalDistribution(models.marginals.copy(), used_fallback=True)


def equivalent_forms(neigh: Neighborhood, models: TransiogramModelSet):
    """The local distribution computed three algebraically equal ways.

    Form A conditions from the designated datum; form B rewrites every
    factor toward the neighbors (p_k times the product of p_{k,li}); form
    C rewrites every factor from the neighbors (p_k^(1-m) times the
    product of p_{li,k}).  The rewrites rely on reversibility, so on a
    reversible model set the three agree to within accumulated rounding;
    disagreement is a practical reversibility check.
    """
    if len(neigh) == 0:
        raise EmptyInputError("neighborhood is empty")
    _check_lags_covered(neigh, models)
    m = len(neigh)
    mats = [evaluate_matrix(models, nb.lag) for nb in neigh.neighbors]
    l1 = neigh.designated_from

    a = mats[l1][neigh.neighbors[l1].class_id, :].copy()
    for idx, nb in enumerate(neigh.neighbors):
        if idx != l1:
            a *= mats[idx][:, nb.class_id]

    b = models.marginals.copy()
    for idx, nb in enumerate(neigh.neighbors):
        b *= mats[idx][:, nb.class_id]

    c = models.marginals ** (1.0 - m)
    for idx, nb in enumerate(neigh.neighbors):
        c *= mats[idx][nb.class_id, :]

    out = []
    for vec in (a, b, c):
        s = vec.sum()
        if s > 0.0:
            out.append(ConditionalDistribution(vec / s))
        else:
            out.append(ConditionalDistribution(models.marginals.copy(),
                                               used_fallback=True))
    return tuple(out)


def pick_class(probs, u: float) -> int:
    """Inverse-CDF pick: smallest k with u < cumulative probability.

    If rounding leaves u at or past the total, the last positive-
    probability class is returned.
    """
    cum = 0.0
    last = 0
    for k in range(len(probs)):
        p = probs[k]
        if p > 0.0:
            last = k
        cum += p
        if u < cum:
            return k
    return last


def draw_class(dist: ConditionalDistribution, rng) -> int:
    """Draw one class label using a single uniform variate from ``rng``."""
    return pick_class(dist.probs, float(rng.random()))


@njit(cache=True, nogil=True)
def _mcss_kernel(labels, order, uniforms, table, step, marginals,
                 starts, odr, odc, odist, oquad):
    """Sequential path over ``order``; labels is filled in place.

    ``table`` holds row-stochastic matrices on a uniform lag grid of
    spacing ``step``; lookups interpolate linearly, matching
    ModelTable.lookup arithmetic exactly.  Returns the counts of
    empty-neighborhood cells and of all-zero-numerator fallbacks.
    """
    nrows, ncols = labels.shape
    n = marginals.shape[0]
    L = table.shape[0]
    n_rings = starts.shape[0] - 1
    probs = np.empty(n, dtype=np.float64)
    q_class = np.empty(4, dtype=np.int64)
    q_dist = np.empty(4, dtype=np.float64)
    q_row = np.empty(4, dtype=np.int64)
    q_col = np.empty(4, dtype=np.int64)
    n_m0 = 0
    n_fallback = 0

    for t in range(order.shape[0]):
        flat = order[t]
        row = flat // ncols
        col = flat - row * ncols

        for q in range(4):
            q_class[q] = -1
            q_dist[q] = 0.0
            q_row[q] = 0
            q_col[q] = 0
        m = 0
        for ring in range(1, n_rings + 1):
            if m == 4:
                done = True
                for q in range(4):
                    if q_dist[q] >= ring:
                        done = False
                        break
                if done:
                    break
            for i in range(starts[ring - 1], starts[ring]):
                rr = row + odr[i]
                cc = col + odc[i]
                if rr < 0 or rr >= nrows or cc < 0 or cc >= ncols:
                    continue
                lab = labels[rr, cc]
                if lab < 0:
                    continue
                q = oquad[i]
                d = odist[i]
                if q_class[q] < 0:
                    m += 1
                elif d > q_dist[q]:
                    continue
                elif d == q_dist[q]:
                    if rr > q_row[q]:
                        continue
                    if rr == q_row[q] and cc > q_col[q]:
                        continue
                q_class[q] = lab
                q_dist[q] = d
                q_row[q] = rr
                q_col[q] = cc

        if m == 0:
            n_m0 += 1
            for k in range(n):
                probs[k] = marginals[k]
        else:
            dq = -1
            best = 0.0
            for q in range(4):
                if q_class[q] >= 0 and (dq < 0 or q_dist[q] < best):
                    dq = q
                    best = q_dist[q]
            pos = q_dist[dq] / step
            i0 = int(pos)
            if i0 > L - 2:
                i0 = L - 2
            frac = pos - i0
            src = q_class[dq]
            for k in range(n):
                probs[k] = ((1.0 - frac) * table[i0, src, k]
                            + frac * table[i0 + 1, src, k])
            for q in range(4):
                if q == dq or q_class[q] < 0:
                    continue
                pos = q_dist[q] / step
                i0 = int(pos)
                if i0 > L - 2:
                    i0 = L - 2
                frac = pos - i0
                head = q_class[q]
                for k in range(n):
                    probs[k] *= ((1.0 - frac) * table[i0, k, head]
                                 + frac * table[i0 + 1, k, head])
            s = 0.0
            for k in range(n):
                s += probs[k]
            if s > 0.0:
                for k in range(n):
                    probs[k] /= s
            else:
                n_fallback += 1
                for k in range(n):
                    probs[k] = marginals[k]

        u = uniforms[t]
        cum = 0.0
        chosen = -1
        last = 0
        for k in range(n):
            p = probs[k]
            if p > 0.0:
                last = k
            cum += p
            if u < cum:
                chosen = k
                break
        if chosen < 0:
            chosen = last
        labels[row, col] = chosen

    return n_m0, n_fallback


@dataclass
class RealizationStats:
    """Run-log numbers for one realization."""

    seed: int
    n_cells: int
    m0_count: int
    fallback_count: int
    wall_time: float

    def logline(self) -> str:
        return (f"seed={self.seed} cells={self.n_cells} "
                f"m0={self.m0_count} fallback={self.fallback_count} "
                f"wall={self.wall_time:.3f}s")


def _check_simulation_inputs(models: TransiogramModelSet, radius: float):
    if radius <= 0:
        raise ConfigError("search radius must be positive")
    if models.validated_lag_max is None:
        raise ConfigError("model set must pass constraint validation before "
                          "simulation")
    need = 2.0 * radius
    if models.validated_lag_max + 1e-9 < need:
        raise ConfigError(
            f"model set validated to lag {models.validated_lag_max:g}; a "
            f"radius of {radius:g} requires validation out to {need:g}")


def _prepare_labels(target: Raster, samples: SampleSet) -> np.ndarray:
    """Label grid with samples written in and the rest UNSIMULATED."""
    base = np.where(target.labels == NODATA, NODATA,
                    UNSIMULATED).astype(np.int32)
    for idx in range(len(samples)):
        try:
            row, col = snap_to_cell(target, samples.x[idx], samples.y[idx])
        except IndexError as exc:
            raise DataError(
                f"sample {idx} at ({samples.x[idx]:g}, {samples.y[idx]:g}) "
                "falls outside the grid") from exc
        c = int(samples.classes[idx])
        cur = int(base[row, col])
        if cur == NODATA:
            raise DataError(f"sample {idx} falls on NODATA cell "
                            f"({row}, {col})")
        if cur >= 0 and cur != c:
            raise DataError(f"conflicting sample classes {cur} and {c} "
                            f"at cell ({row}, {col})")
        base[row, col] = c
    return base


def _simulate_labels(base: np.ndarray, table, radius: float, seed: int):
    """One full path over a prepared label grid; returns (labels, stats)."""
    labels = base.copy()
    flat = np.flatnonzero(labels.ravel() == UNSIMULATED)
    rng = np.random.default_rng(seed)
    order = rng.permutation(flat)
    uniforms = rng.random(order.size)
    starts, odr, odc, odist, oquad = _ring_geometry(int(radius), float(radius))
    t0 = time.perf_counter()
    n_m0, n_fallback = _mcss_kernel(labels, order, uniforms, table.values,
                                    table.step, table.marginals,
                                    starts, odr, odc, odist, oquad)
    wall = time.perf_counter() - t0
    stats = RealizationStats(seed=int(seed), n_cells=int(order.size),
                             m0_count=int(n_m0), fallback_count=int(n_fallback),
                             wall_time=wall)
    return labels, stats


def run_realization(target: Raster, samples: SampleSet,
                    models: TransiogramModelSet, radius: float, seed: int):
    """Simulate one realization, returning (raster, stats).

    ``target`` supplies geometry and the NODATA pattern; any other labels
    it carries are ignored.  The model set must have been validated out to
    twice the search radius.  Identical inputs and seed give a
    bit-identical raster.
    """
    _check_simulation_inputs(models, radius)
    base = _prepare_labels(target, samples)
    table = tabulate_model_set(models, lag_max=radius)
    labels, stats = _simulate_labels(base, table, radius, seed)
    log.info("realization: %s", stats.logline())
    return target.copy_with(labels), stats


def simulate_realization(target: Raster, samples: SampleSet,
                         models: TransiogramModelSet, radius: float,
                         seed: int) -> Raster:
    """Like :func:`run_realization` but returning only the raster."""
    raster, _ = run_realization(target, samples, models, radius, seed)
    return raster


def realization_seed(base_seed: int, r: int) -> int:
    """Derived seed for realization r: pure, documented, collision-safe."""
    return int(np.random.SeedSequence((base_seed, r)).generate_state(1)[0])


def _config_digest(models: TransiogramModelSet, radius: float) -> str:
    entries = []
    for i, row in enumerate(models.entries):
        for j, e in enumerate(row):
            entries.append([i, j, e.kind, e.sill, e.range, e.alpha, e.theta,
                            e.weight,
                            [list(k) for k in e.knots] if e.knots else None])
    payload = {
        "n_classes": models.n_classes,
        "method": models.method,
        "marginals": [float(x) for x in models.marginals],
        "rest_heads": [int(x) for x in models.rest_heads],
        "radius": float(radius),
        "entries": entries,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def simulate_ensemble(target: Raster, samples: SampleSet,
                      models: TransiogramModelSet, radius: float,
                      n_real: int, base_seed: int,
                      threads: int = 1) -> Ensemble:
    """Simulate ``n_real`` independent realizations.

    Realization r is seeded by :func:`realization_seed`, so members are
    reproducible individually and the ensemble is identical whether run
    serially or on a thread pool.  Model tabulation happens once and is
    shared read-only across workers.
    """
    if n_real < 1:
        raise ConfigError("n_real must be at least 1")
    _check_simulation_inputs(models, radius)
    base = _prepare_labels(target, samples)
    table = tabulate_model_set(models, lag_max=radius)
    seeds = [realization_seed(base_seed, r) for r in range(n_real)]

    def one(r):
        return _simulate_labels(base, table, radius, seeds[r])

    results = [None] * n_real
    if threads <= 1:
        for r in range(n_real):
            try:
                results[r] = one(r)
            except Exception as exc:
                _reraise_indexed(r, exc)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(one, r) for r in range(n_real)]
            for r, fut in enumerate(futures):
                try:
                    results[r] = fut.result()
                except Exception as exc:
                    _reraise_indexed(r, exc)

    realizations = []
    stats_list = []
    for r, (labels, stats) in enumerate(results):
        log.info("realization %d: %s", r, stats.logline())
        realizations.append(target.copy_with(labels))
        stats_list.append(asdict(stats))
    meta = {
        "base_seed": int(base_seed),
        "seeds": seeds,
        "radius": float(radius),
        "config_digest": _config_digest(models, radius),
        "stats": stats_list,
    }
    return Ensemble(realizations=realizations, meta=meta)


def _reraise_indexed(r: int, exc: Exception):
    msg = f"realization {r}: {exc}"
    try:
        wrapped = type(exc)(msg)
    except Exception:
        wrapped = McrfsimError(msg)
    raise wrapped from exc
