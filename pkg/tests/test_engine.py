"""Simulation engine tests: search geometry, local probabilities, paths.

The kernel is additionally checked end to end against a pure-Python replay
of the same algorithm built from the public pieces (find_neighbors, table
lookups, pick_class), which must reproduce its output bit for bit.
"""

import numpy as np
import pytest
from scipy import stats as sstats

from mcrfsim.errors import ConfigError, DataError, EmptyInputError
from mcrfsim.grid import NODATA, Raster, SampleSet
from mcrfsim.models import (
    EXPONENTIAL_AUTO,
    INTERPOLATED,
    REST,
    ModelDescriptor,
    TransiogramModelSet,
    evaluate_matrix,
    tabulate_model_set,
    validate_model_set,
)
from mcrfsim.engine import (
    ConditionalDistribution,
    Neighbor,
    Neighborhood,
    SimulationState,
    UNSIMULATED,
    _prepare_labels,
    _simulate_labels,
    draw_class,
    equivalent_forms,
    find_neighbors,
    local_cpd,
    pick_class,
    quadrant_of,
    realization_seed,
    run_realization,
    simulate_ensemble,
    simulate_realization,
)
from oracles import brute_force_cpd, exhaustive_neighbors


def two_class_set(range_b=10.0, validate_to=30.0):
    """Exponential 2-class set; equal ranges make it reversible."""
    e = [
        [ModelDescriptor(EXPONENTIAL_AUTO, sill=0.6, range=10.0),
         ModelDescriptor(REST)],
        [ModelDescriptor(REST),
         ModelDescriptor(EXPONENTIAL_AUTO, sill=0.4, range=range_b)],
    ]
    ms = TransiogramModelSet(n_classes=2, entries=e, rest_heads=[1, 0],
                             marginals=[0.6, 0.4])
    if validate_to:
        rep = validate_model_set(ms, lag_max=validate_to)
        assert rep.valid
    return ms


def const_interp(value):
    return ModelDescriptor(INTERPOLATED, knots=((0.0, value), (1e4, value)))


def constant_two_class(p_stay=0.7, validate_to=50.0):
    e = [
        [const_interp(p_stay), ModelDescriptor(REST)],
        [ModelDescriptor(REST), const_interp(p_stay)],
    ]
    ms = TransiogramModelSet(n_classes=2, entries=e, rest_heads=[1, 0],
                             marginals=[0.5, 0.5])
    rep = validate_model_set(ms, lag_max=validate_to)
    assert rep.valid
    return ms


def reversible_three_class(validate_to=50.0):
    """Constant 3-class chain built from a symmetric joint table."""
    joint = np.array([[0.30, 0.10, 0.10],
                      [0.10, 0.20, 0.05],
                      [0.10, 0.05, 0.10]])
    joint = joint / joint.sum()
    marg = joint.sum(axis=1)
    P = joint / marg[:, None]
    entries = []
    for i in range(3):
        row = [const_interp(P[i, 0]), const_interp(P[i, 1]),
               ModelDescriptor(REST)]
        entries.append(row)
    ms = TransiogramModelSet(n_classes=3, entries=entries,
                             rest_heads=[2, 2, 2], marginals=marg)
    rep = validate_model_set(ms, lag_max=validate_to)
    assert rep.valid
    return ms


def zero_cross_set(validate_to=20.0):
    """2-class set whose 0->1 transition is exactly zero below lag 5."""
    e = [
        [ModelDescriptor(REST),
         ModelDescriptor(INTERPOLATED,
                         knots=((0.0, 0.0), (5.0, 0.0), (10.0, 0.3),
                                (1e4, 0.3)))],
        [ModelDescriptor(REST), const_interp(1.0)],
    ]
    ms = TransiogramModelSet(n_classes=2, entries=e, rest_heads=[0, 0],
                             marginals=[0.5, 0.5])
    rep = validate_model_set(ms, lag_max=validate_to)
    assert rep.valid
    return ms


def state_from(labels):
    labels = np.asarray(labels, dtype=np.int32)
    r = Raster(labels.shape[0], labels.shape[1], 1.0, 0.0, 0.0, labels)
    return SimulationState(grid=r)


def neigh(*entries):
    """Neighborhood from (class, lag, quadrant) triples in quadrant order."""
    nbs = tuple(Neighbor(class_id=c, lag=h, quadrant=q, row=0, col=0)
                for c, h, q in entries)
    designated = 0
    for i, nb in enumerate(nbs):
        if nb.lag < nbs[designated].lag:
            designated = i
    return Neighborhood(neighbors=nbs, designated_from=designated)


class TestQuadrants:
    def test_axis_membership(self):
        assert quadrant_of(1, 0) == 0   # east
        assert quadrant_of(0, 1) == 1   # north
        assert quadrant_of(-1, 0) == 2  # west
        assert quadrant_of(0, -1) == 3  # south

    def test_diagonals(self):
        assert quadrant_of(1, 1) == 0
        assert quadrant_of(-1, 1) == 1
        assert quadrant_of(-1, -1) == 2
        assert quadrant_of(1, -1) == 3


class TestFindNeighbors:
    def test_symmetric_diagonal_cross(self):
        lab = np.full((11, 11), UNSIMULATED)
        for dr, dc, c in ((1, 1, 0), (1, -1, 1), (-1, -1, 2), (-1, 1, 3)):
            lab[5 + dr, 5 + dc] = c
        nb = find_neighbors(state_from(lab), (5, 5), 4.0)
        assert len(nb) == 4
        assert sorted(x.quadrant for x in nb.neighbors) == [0, 1, 2, 3]
        for x in nb.neighbors:
            assert x.lag == pytest.approx(np.sqrt(2.0))

    def test_axis_data_land_in_half_open_quadrants(self):
        lab = np.full((11, 11), UNSIMULATED)
        lab[5, 7] = 0   # east
        lab[7, 5] = 1   # north
        lab[5, 3] = 2   # west
        lab[3, 5] = 3   # south
        nb = find_neighbors(state_from(lab), (5, 5), 4.0)
        by_q = {x.quadrant: x.class_id for x in nb.neighbors}
        assert by_q == {0: 0, 1: 1, 2: 2, 3: 3}

    def test_single_datum_designated(self):
        lab = np.full((9, 9), UNSIMULATED)
        lab[2, 6] = 1
        nb = find_neighbors(state_from(lab), (4, 4), 5.0)
        assert len(nb) == 1
        assert nb.designated_from == 0
        assert nb.neighbors[0].class_id == 1

    def test_nearest_of_two_in_same_quadrant(self):
        lab = np.full((15, 15), UNSIMULATED)
        lab[7, 9] = 0   # lag 2, NE
        lab[7, 12] = 1  # lag 5, NE
        nb = find_neighbors(state_from(lab), (7, 7), 6.0)
        assert len(nb) == 1
        assert nb.neighbors[0].lag == pytest.approx(2.0)
        assert nb.neighbors[0].class_id == 0

    def test_radius_is_euclidean_not_chebyshev(self):
        lab = np.full((11, 11), UNSIMULATED)
        lab[8, 8] = 0   # Chebyshev 3, Euclidean 4.24
        nb = find_neighbors(state_from(lab), (5, 5), 4.0)
        assert len(nb) == 0
        nb = find_neighbors(state_from(lab), (5, 5), 4.5)
        assert len(nb) == 1

    def test_datum_exactly_at_radius_included(self):
        lab = np.full((13, 13), UNSIMULATED)
        lab[6 + 3, 6 + 4] = 2  # 3-4-5 triangle
        nb = find_neighbors(state_from(lab), (6, 6), 5.0)
        assert len(nb) == 1
        assert nb.neighbors[0].lag == 5.0

    def test_empty_neighborhood_is_fine(self):
        lab = np.full((9, 9), UNSIMULATED)
        nb = find_neighbors(state_from(lab), (4, 4), 3.0)
        assert len(nb) == 0
        assert nb.designated_from == -1

    def test_tiny_radius_sees_nothing(self):
        lab = np.full((5, 5), UNSIMULATED)
        lab[2, 3] = 0
        nb = find_neighbors(state_from(lab), (2, 2), 0.8)
        assert len(nb) == 0

    def test_equidistant_tie_resolves_by_row_then_col(self):
        lab = np.full((21, 21), UNSIMULATED)
        lab[11, 12] = 0   # (d, row, col) = (sqrt5, 11, 12)
        lab[12, 11] = 1   # (sqrt5, 12, 11): larger row loses
        nb = find_neighbors(state_from(lab), (10, 10), 4.0)
        assert len(nb) == 1
        assert (nb.neighbors[0].row, nb.neighbors[0].col) == (11, 12)

    def test_later_ring_can_win_a_distance_tie(self):
        # ring-4 corner datum at distance 5 vs ring-5 axis datum at 5:
        # the axis cell has the smaller row and must win the quadrant.
        lab = np.full((21, 21), UNSIMULATED)
        lab[14, 13] = 0
        lab[10, 15] = 1
        nb = find_neighbors(state_from(lab), (10, 10), 6.0)
        assert len(nb) == 1
        assert nb.neighbors[0].class_id == 1
        assert (nb.neighbors[0].row, nb.neighbors[0].col) == (10, 15)

    def test_designated_tie_takes_lowest_quadrant(self):
        lab = np.full((11, 11), UNSIMULATED)
        lab[6, 6] = 1   # NE, sqrt2
        lab[4, 4] = 0   # SW, sqrt2
        nb = find_neighbors(state_from(lab), (5, 5), 3.0)
        assert nb.neighbors[nb.designated_from].quadrant == 0

    def test_nodata_and_unsimulated_are_invisible(self):
        lab = np.full((9, 9), UNSIMULATED)
        lab[4, 5] = NODATA
        lab[4, 6] = 0
        nb = find_neighbors(state_from(lab), (4, 4), 4.0)
        assert len(nb) == 1
        assert nb.neighbors[0].lag == pytest.approx(2.0)

    def test_radius_must_be_positive(self):
        with pytest.raises(ConfigError):
            find_neighbors(state_from(np.full((3, 3), UNSIMULATED)),
                           (1, 1), 0.0)

    def test_agrees_with_exhaustive_scan(self):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            lab = rng.choice(
                np.array([UNSIMULATED, UNSIMULATED, NODATA, 0, 1, 2],
                         dtype=np.int32),
                size=(20, 20),
                p=[0.45, 0.25, 0.06, 0.1, 0.08, 0.06])
            empty = np.argwhere(lab == UNSIMULATED)
            if empty.shape[0] == 0:
                continue
            row, col = empty[rng.integers(empty.shape[0])]
            radius = float(rng.uniform(1.0, 12.0))
            got = find_neighbors(state_from(lab), (int(row), int(col)),
                                 radius)
            want = exhaustive_neighbors(lab, int(row), int(col), radius)
            assert len(got) == len(want)
            for x in got.neighbors:
                assert x.lag <= radius
                cls, d, rr, cc = want[x.quadrant]
                assert (x.class_id, x.lag, x.row, x.col) == (cls, d, rr, cc)
            if len(got):
                lags = [x.lag for x in got.neighbors]
                assert got.neighbors[got.designated_from].lag == min(lags)


class TestLocalCpd:
    def test_single_neighbor_is_matrix_row(self):
        ms = two_class_set()
        for h in (0.5, 1.0, 3.7, 12.0):
            d = local_cpd(neigh((1, h, 0)), ms)
            assert d.probs == pytest.approx(evaluate_matrix(ms, h)[1, :],
                                            abs=1e-12)
            assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_hand_product_four_matching_neighbors(self):
        ms = constant_two_class(0.7)
        d = local_cpd(neigh((0, 1.0, 0), (0, 2.0, 1), (0, 1.5, 2),
                            (0, 2.5, 3)), ms)
        want = 0.7 ** 4 / (0.7 ** 4 + 0.3 ** 4)
        assert d.probs[0] == pytest.approx(want, rel=1e-12)
        assert round(d.probs[0], 4) == 0.9674

    def test_uniform_set_gives_uniform_probs(self):
        entries = [[const_interp(1 / 3), const_interp(1 / 3),
                    ModelDescriptor(REST)] for _ in range(3)]
        ms = TransiogramModelSet(n_classes=3, entries=entries,
                                 rest_heads=[2, 2, 2],
                                 marginals=[1 / 3, 1 / 3, 1 / 3])
        validate_model_set(ms, lag_max=20.0)
        d = local_cpd(neigh((0, 1.0, 0), (2, 3.0, 1), (1, 2.0, 3)), ms)
        assert d.probs == pytest.approx([1 / 3] * 3, abs=1e-12)

    def test_matches_brute_force_oracle(self):
        ms = two_class_set()
        rng = np.random.default_rng(123)

        def tables(i, j, h):
            return evaluate_matrix(ms, h)[i, j]

        for _ in range(60):
            m = int(rng.integers(1, 5))
            quads = rng.permutation(4)[:m]
            quads.sort()
            entries = [(int(rng.integers(0, 2)),
                        float(rng.uniform(0.3, 14.0)), int(q))
                       for q in quads]
            nb = neigh(*entries)
            want = brute_force_cpd([e[0] for e in entries],
                                   [e[1] for e in entries],
                                   tables, None, ms.marginals)
            got = local_cpd(nb, ms)
            assert got.probs == pytest.approx(want, abs=1e-12)

    def test_empty_neighborhood_raises(self):
        ms = two_class_set()
        with pytest.raises(EmptyInputError):
            local_cpd(Neighborhood(neighbors=(), designated_from=-1), ms)

    def test_unvalidated_set_rejected(self):
        ms = two_class_set(validate_to=None)
        with pytest.raises(ConfigError):
            local_cpd(neigh((0, 1.0, 0)), ms)

    def test_lag_beyond_validated_span_rejected(self):
        ms = two_class_set(validate_to=10.0)
        with pytest.raises(ConfigError):
            local_cpd(neigh((0, 11.0, 0)), ms)

    def test_all_zero_numerator_falls_back_to_marginals(self):
        ms = zero_cross_set()
        d = local_cpd(neigh((0, 2.0, 0), (1, 2.4, 2)), ms)
        assert d.used_fallback
        assert d.probs == pytest.approx(ms.marginals)


class TestEquivalentForms:
    def test_agree_on_reversible_exponential_set(self):
        ms = two_class_set()
        rng = np.random.default_rng(31)
        for _ in range(40):
            m = int(rng.integers(1, 5))
            quads = sorted(rng.permutation(4)[:m].tolist())
            nb = neigh(*[(int(rng.integers(0, 2)),
                          float(rng.uniform(0.5, 15.0)), q) for q in quads])
            a, b, c = equivalent_forms(nb, ms)
            assert a.probs == pytest.approx(b.probs, abs=1e-9)
            assert a.probs == pytest.approx(c.probs, abs=1e-9)

    def test_agree_on_reversible_three_class_set(self):
        ms = reversible_three_class()
        rng = np.random.default_rng(32)
        for _ in range(20):
            nb = neigh(*[(int(rng.integers(0, 3)),
                          float(rng.uniform(0.5, 20.0)), q)
                         for q in range(4)])
            a, b, c = equivalent_forms(nb, ms)
            assert a.probs == pytest.approx(b.probs, abs=1e-9)
            assert a.probs == pytest.approx(c.probs, abs=1e-9)

    def test_single_neighbor_collapses(self):
        ms = two_class_set()
        a, b, c = equivalent_forms(neigh((1, 2.5, 2)), ms)
        assert a.probs == pytest.approx(b.probs, abs=1e-12)
        assert a.probs == pytest.approx(c.probs, abs=1e-12)
        assert a.probs == pytest.approx(local_cpd(neigh((1, 2.5, 2)),
                                                  ms).probs, abs=1e-15)

    def test_non_reversible_set_disagrees(self):
        ms = two_class_set(range_b=25.0)
        nb = neigh((0, 2.0, 0), (1, 6.0, 2))
        a, b, c = equivalent_forms(nb, ms)
        spread = max(np.abs(a.probs - b.probs).max(),
                     np.abs(a.probs - c.probs).max())
        assert spread > 1e-6

    def test_local_cpd_equals_first_form(self):
        ms = two_class_set()
        nb = neigh((0, 1.0, 0), (1, 4.0, 1), (0, 2.0, 2))
        a, _, _ = equivalent_forms(nb, ms)
        assert a.probs == pytest.approx(local_cpd(nb, ms).probs, abs=1e-15)


class TestDrawClass:
    def test_certain_class(self):
        d = ConditionalDistribution(np.array([1.0, 0.0, 0.0]))
        rng = np.random.default_rng(0)
        assert all(draw_class(d, rng) == 0 for _ in range(50))

    def test_cdf_boundaries(self):
        probs = np.array([0.5, 0.5])
        assert pick_class(probs, 0.49) == 0
        assert pick_class(probs, 0.51) == 1
        assert pick_class(probs, 0.5) == 1
        assert pick_class(probs, 0.0) == 0

    def test_rounding_shortfall_falls_to_last_positive(self):
        assert pick_class(np.array([0.25, 0.25, 0.0]), 0.9) == 1

    def test_zero_class_skipped_at_its_boundary(self):
        assert pick_class(np.array([0.5, 0.0, 0.5]), 0.5) == 2

    def test_frequencies_within_binomial_bounds(self):
        probs = np.array([0.2, 0.5, 0.3])
        d = ConditionalDistribution(probs)
        rng = np.random.default_rng(2024)
        n = 100_000
        counts = np.zeros(3)
        for _ in range(n):
            counts[draw_class(d, rng)] += 1
        freq = counts / n
        sigma = np.sqrt(probs * (1 - probs) / n)
        assert np.all(np.abs(freq - probs) <= 3 * sigma)


def center_samples(cells, classes, n_classes):
    cells = np.asarray(cells, dtype=float)
    return SampleSet(x=cells[:, 1] + 0.5, y=cells[:, 0] + 0.5,
                     classes=classes, n_classes=n_classes)


def replay_simulation(target, samples, ms, radius, seed):
    """Pure-Python re-run of the sequential path, bit-compatible with the
    compiled kernel: same visiting order, same uniforms, same table
    arithmetic, same tie rules."""
    base = _prepare_labels(target, samples)
    table = tabulate_model_set(ms, lag_max=radius)
    labels = base.copy()
    flat = np.flatnonzero(labels.ravel() == UNSIMULATED)
    rng = np.random.default_rng(seed)
    order = rng.permutation(flat)
    uniforms = rng.random(order.size)
    state = SimulationState(grid=target.copy_with(labels))
    labels = state.grid.labels
    n = ms.n_classes
    n_m0 = 0
    n_fb = 0
    for t in range(order.size):
        row, col = divmod(int(order[t]), target.ncols)
        nb = find_neighbors(state, (row, col), radius)
        if len(nb) == 0:
            n_m0 += 1
            probs = table.marginals.copy()
        else:
            l1 = nb.neighbors[nb.designated_from]
            probs = table.lookup(l1.lag)[l1.class_id, :].copy()
            for i, x in enumerate(nb.neighbors):
                if i == nb.designated_from:
                    continue
                probs *= table.lookup(x.lag)[:, x.class_id]
            s = 0.0
            for k in range(n):
                s += probs[k]
            if s > 0.0:
                for k in range(n):
                    probs[k] = probs[k] / s
            else:
                n_fb += 1
                probs = table.marginals.copy()
        labels[row, col] = pick_class(probs, uniforms[t])
    return labels, n_m0, n_fb


class TestSimulateRealization:
    def test_full_sample_coverage_returns_samples(self):
        target = Raster.domain(4, 4)
        cells = [(r, c) for r in range(4) for c in range(4)]
        classes = [(r + c) % 2 for r, c in cells]
        samples = center_samples(cells, classes, 2)
        ms = two_class_set()
        out = simulate_realization(target, samples, ms, radius=3.0, seed=1)
        want = np.array(classes).reshape(4, 4)
        assert np.array_equal(out.labels, want)

    def test_same_seed_identical_different_seed_not(self):
        target = Raster.domain(24, 24)
        samples = center_samples([(3, 3), (20, 18), (11, 7)], [0, 1, 0], 2)
        ms = two_class_set()
        a = simulate_realization(target, samples, ms, radius=6.0, seed=9)
        b = simulate_realization(target, samples, ms, radius=6.0, seed=9)
        c = simulate_realization(target, samples, ms, radius=6.0, seed=10)
        assert np.array_equal(a.labels, b.labels)
        assert not np.array_equal(a.labels, c.labels)
        for r, cc in ((3, 3), (20, 18), (11, 7)):
            assert a.labels[r, cc] == c.labels[r, cc]

    def test_output_fully_labeled_and_conditioned(self):
        target = Raster.domain(30, 30)
        rng = np.random.default_rng(4)
        cells = [(int(r), int(c)) for r, c in
                 rng.integers(0, 30, size=(20, 2))]
        cells = sorted(set(cells))
        classes = [int(rng.integers(0, 2)) for _ in cells]
        samples = center_samples(cells, classes, 2)
        ms = two_class_set()
        out, st = run_realization(target, samples, ms, radius=8.0, seed=5)
        assert out.labels.min() >= 0
        for (r, c), k in zip(cells, classes):
            assert out.labels[r, c] == k
        assert st.n_cells == 900 - len(cells)
        assert st.wall_time >= 0.0

    def test_conflicting_samples_name_the_cell(self):
        target = Raster.domain(4, 4)
        samples = SampleSet(x=[0.2, 0.7], y=[0.2, 0.3], classes=[0, 1],
                            n_classes=2)
        with pytest.raises(DataError, match=r"\(0, 0\)"):
            simulate_realization(target, samples, two_class_set(),
                                 radius=2.0, seed=0)

    def test_agreeing_duplicate_samples_are_fine(self):
        target = Raster.domain(4, 4)
        samples = SampleSet(x=[0.2, 0.7], y=[0.2, 0.3], classes=[1, 1],
                            n_classes=2)
        out, st = run_realization(target, samples, two_class_set(),
                                  radius=2.0, seed=0)
        assert out.labels[0, 0] == 1
        assert st.n_cells == 15

    def test_sample_outside_grid(self):
        target = Raster.domain(4, 4)
        samples = SampleSet(x=[5.5], y=[1.5], classes=[0], n_classes=2)
        with pytest.raises(DataError, match="outside"):
            simulate_realization(target, samples, two_class_set(),
                                 radius=2.0, seed=0)

    def test_sample_on_nodata_cell(self):
        target = Raster.domain(4, 4)
        target.labels[2, 2] = NODATA
        samples = SampleSet(x=[2.5], y=[2.5], classes=[0], n_classes=2)
        with pytest.raises(DataError, match="NODATA"):
            simulate_realization(target, samples, two_class_set(),
                                 radius=2.0, seed=0)

    def test_nodata_block_preserved_and_skipped(self):
        target = Raster.domain(12, 12)
        target.labels[4:8, 4:8] = NODATA
        samples = center_samples([(0, 0), (11, 11)], [0, 1], 2)
        out, st = run_realization(target, samples, two_class_set(),
                                  radius=5.0, seed=3)
        assert np.all(out.labels[4:8, 4:8] == NODATA)
        mask = out.labels != NODATA
        assert out.labels[mask].min() >= 0
        assert st.n_cells == 144 - 16 - 2

    def test_requires_validation_to_twice_radius(self):
        ms = two_class_set(validate_to=10.0)
        target = Raster.domain(6, 6)
        samples = center_samples([(0, 0)], [0], 2)
        with pytest.raises(ConfigError, match="twice|requires validation"):
            simulate_realization(target, samples, ms, radius=8.0, seed=0)
        simulate_realization(target, samples, ms, radius=5.0, seed=0)

    def test_unvalidated_set_rejected(self):
        ms = two_class_set(validate_to=None)
        target = Raster.domain(4, 4)
        samples = center_samples([(0, 0)], [0], 2)
        with pytest.raises(ConfigError):
            simulate_realization(target, samples, ms, radius=1.5, seed=0)

    def test_nonpositive_radius_rejected(self):
        target = Raster.domain(4, 4)
        samples = center_samples([(0, 0)], [0], 2)
        with pytest.raises(ConfigError):
            simulate_realization(target, samples, two_class_set(),
                                 radius=0.0, seed=0)

    def test_kernel_matches_python_replay(self):
        target = Raster.domain(20, 20)
        rng = np.random.default_rng(8)
        cells = sorted({(int(r), int(c))
                        for r, c in rng.integers(0, 20, size=(12, 2))})
        classes = [int(rng.integers(0, 2)) for _ in cells]
        samples = center_samples(cells, classes, 2)
        ms = two_class_set()
        for seed in (0, 1, 17):
            want, m0, fb = replay_simulation(target, samples, ms, 5.0, seed)
            out, st = run_realization(target, samples, ms, radius=5.0,
                                      seed=seed)
            assert np.array_equal(out.labels, want)
            assert st.m0_count == m0
            assert st.fallback_count == fb

    def test_replay_parity_with_nodata_and_sparse_data(self):
        target = Raster.domain(18, 18)
        target.labels[6:9, 2:12] = NODATA
        samples = center_samples([(0, 17)], [1], 2)
        ms = two_class_set()
        want, m0, fb = replay_simulation(target, samples, ms, 4.0, seed=23)
        out, st = run_realization(target, samples, ms, radius=4.0, seed=23)
        assert np.array_equal(out.labels, want)
        assert st.m0_count == m0 and m0 > 0

    def test_fallback_counter_on_forbidden_transition(self):
        ms = zero_cross_set()
        target = Raster.domain(1, 4)
        samples = center_samples([(0, 0), (0, 3)], [0, 1], 2)
        want, m0, fb = replay_simulation(target, samples, ms, 5.0, seed=2)
        out, st = run_realization(target, samples, ms, radius=5.0, seed=2)
        assert np.array_equal(out.labels, want)
        assert st.fallback_count == fb
        assert fb >= 1

    def test_single_neighbor_draw_distribution(self):
        # one conditioning datum at lag 1: the simulated class frequency
        # must match the model's transition row (chi-square at 1%)
        ms = two_class_set()
        target = Raster.domain(1, 2)
        samples = center_samples([(0, 0)], [0], 2)
        base = _prepare_labels(target, samples)
        table = tabulate_model_set(ms, lag_max=1.5)
        n = 2000
        counts = np.zeros(2)
        for seed in range(n):
            labels, _ = _simulate_labels(base, table, 1.5, seed)
            counts[labels[0, 1]] += 1
        expected = evaluate_matrix(ms, 1.0)[0] * n
        p = sstats.chisquare(counts, f_exp=expected).pvalue
        assert p > 0.01


class TestSimulateEnsemble:
    def test_single_member_matches_realization(self):
        target = Raster.domain(10, 10)
        samples = center_samples([(2, 2), (8, 7)], [0, 1], 2)
        ms = two_class_set()
        ens = simulate_ensemble(target, samples, ms, radius=4.0, n_real=1,
                                base_seed=99)
        solo = simulate_realization(target, samples, ms, radius=4.0,
                                    seed=realization_seed(99, 0))
        assert ens.n_real == 1
        assert np.array_equal(ens.realizations[0].labels, solo.labels)

    def test_members_distinct_but_share_conditioning(self):
        target = Raster.domain(14, 14)
        cells = [(2, 2), (11, 4), (6, 12)]
        samples = center_samples(cells, [0, 1, 0], 2)
        ms = two_class_set()
        ens = simulate_ensemble(target, samples, ms, radius=5.0, n_real=8,
                                base_seed=123)
        for i in range(8):
            for j in range(i + 1, 8):
                a, b = ens.realizations[i], ens.realizations[j]
                assert not np.array_equal(a.labels, b.labels)
                for r, c in cells:
                    assert a.labels[r, c] == b.labels[r, c]

    def test_threaded_equals_serial(self):
        target = Raster.domain(16, 16)
        samples = center_samples([(3, 3), (12, 10)], [0, 1], 2)
        ms = two_class_set()
        serial = simulate_ensemble(target, samples, ms, radius=5.0,
                                   n_real=6, base_seed=7, threads=1)
        pooled = simulate_ensemble(target, samples, ms, radius=5.0,
                                   n_real=6, base_seed=7, threads=4)
        for a, b in zip(serial.realizations, pooled.realizations):
            assert np.array_equal(a.labels, b.labels)
        assert serial.meta["seeds"] == pooled.meta["seeds"]

    def test_seed_derivation_documented_function(self):
        target = Raster.domain(6, 6)
        samples = center_samples([(1, 1)], [0], 2)
        ens = simulate_ensemble(target, samples, two_class_set(),
                                radius=2.5, n_real=4, base_seed=55)
        assert ens.meta["seeds"] == [realization_seed(55, r)
                                     for r in range(4)]
        assert ens.meta["base_seed"] == 55
        assert len(ens.meta["config_digest"]) == 64
        assert len(ens.meta["stats"]) == 4
        assert all(s["n_cells"] == 35 for s in ens.meta["stats"])

    def test_needs_at_least_one_member(self):
        target = Raster.domain(4, 4)
        samples = center_samples([(0, 0)], [0], 2)
        with pytest.raises(ConfigError):
            simulate_ensemble(target, samples, two_class_set(), radius=2.0,
                              n_real=0, base_seed=1)

    def test_failure_reports_realization_index(self, monkeypatch):
        import mcrfsim.engine as eng
        target = Raster.domain(6, 6)
        samples = center_samples([(1, 1)], [0], 2)
        real = eng._simulate_labels

        def boom(base, table, radius, seed, _real=real):
            if seed == realization_seed(5, 2):
                raise DataError("induced failure")
            return _real(base, table, radius, seed)

        monkeypatch.setattr(eng, "_simulate_labels", boom)
        with pytest.raises(DataError, match="realization 2"):
            simulate_ensemble(target, samples, two_class_set(), radius=2.0,
                              n_real=4, base_seed=5, threads=2)
