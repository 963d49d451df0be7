"""Tests for the MCRFSimulator estimator facade."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mcrfsim.errors import ConfigError, DataError
from mcrfsim.estimator import MCRFSimulator
from mcrfsim.grid import NODATA, Raster, generate_blob_reference, random_sample
from mcrfsim.postprocess import ProbabilityCube, optimal_map
from mcrfsim.transiograms import LagBinSpec, estimate_experimental


def small_case():
    ref = generate_blob_reference(24, 24, 3, [0.5, 0.3, 0.2], 9, seed=13)
    samples = random_sample(ref, 60, seed=4)
    return ref, samples


@pytest.fixture(scope="module")
def fitted():
    ref, samples = small_case()
    est = MCRFSimulator(method="mathematical", radius=5.0,
                        n_realizations=4, bin_width=2.0, n_bins=10,
                        random_state=11)
    X = np.column_stack([samples.x, samples.y])
    est.fit(X, samples.classes)
    return ref, samples, est


class TestParams:
    def test_get_params_round_trip(self):
        est = MCRFSimulator(method="mixed", radius=7.5, n_realizations=3,
                            bin_width=1.5, n_bins=8, random_state=42,
                            threads=2)
        params = est.get_params()
        assert params["method"] == "mixed"
        assert params["radius"] == 7.5
        assert params["n_bins"] == 8
        rebuilt = MCRFSimulator(**params)
        assert rebuilt.get_params() == params

    def test_set_params_chains(self):
        est = MCRFSimulator().set_params(radius=3.0, method="linear")
        assert est.radius == 3.0
        assert est.method == "linear"

    def test_clone_preserves_settings(self):
        est = MCRFSimulator(method="math", n_realizations=7)
        dup = clone(est)
        assert dup is not est
        assert dup.get_params() == est.get_params()

    def test_repr_mentions_changed_params(self):
        text = repr(MCRFSimulator(radius=99.0))
        assert "MCRFSimulator" in text
        assert "99.0" in text


class TestFit:
    def test_fit_returns_self_and_stamps_attributes(self, fitted):
        _, samples, est = fitted
        assert est.fit(np.column_stack([samples.x, samples.y]),
                       samples.classes) is est
        assert est.n_classes_ == 3
        assert np.array_equal(est.classes_, np.arange(3))
        assert est.marginals_.shape == (3,)
        assert est.marginals_.sum() == pytest.approx(1.0)
        assert len(est.roles_) == 3
        assert est.models_.method == "mathematical"

    def test_method_alias_canonicalized(self):
        ref, samples = small_case()
        est = MCRFSimulator(method="math", radius=5.0, n_realizations=2,
                            bin_width=2.0, n_bins=10)
        est.fit(np.column_stack([samples.x, samples.y]), samples.classes)
        assert est.method == "math"  # constructor arg untouched
        assert est.models_.method == "mathematical"

    def test_transiograms_match_direct_estimation(self, fitted):
        _, samples, est = fitted
        direct = estimate_experimental(samples, LagBinSpec(2.0, 10),
                                       pixel_size=1.0)
        assert np.array_equal(est.transiograms_.counts, direct.counts)
        assert np.array_equal(est.transiograms_.prob, direct.prob,
                              equal_nan=True)

    def test_fitted_models_pass_validation(self, fitted):
        _, _, est = fitted
        report = est.validation_report()
        assert report.valid
        assert report.lag_max == pytest.approx(10.0)

    def test_bad_shapes_rejected(self):
        est = MCRFSimulator()
        with pytest.raises(DataError, match="n_samples, 2"):
            est.fit(np.zeros((4, 3)), np.zeros(4, dtype=int))
        with pytest.raises(DataError, match="one class id"):
            est.fit(np.zeros((4, 2)), np.zeros(5, dtype=int))
        with pytest.raises(DataError, match="empty"):
            est.fit(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_float_labels_must_be_integral(self):
        est = MCRFSimulator()
        X = np.array([[0.5, 0.5], [1.5, 0.5], [2.5, 0.5]])
        est2 = MCRFSimulator(bin_width=1.0, n_bins=4, radius=2.0,
                             n_realizations=1)
        est2.fit(X, np.array([0.0, 1.0, 0.0]))  # integral floats fine
        with pytest.raises(DataError, match="integer class ids"):
            est.fit(X, np.array([0.0, 0.5, 1.0]))

    def test_negative_labels_rejected(self):
        est = MCRFSimulator()
        X = np.array([[0.5, 0.5], [1.5, 0.5]])
        with pytest.raises(DataError, match="nonnegative"):
            est.fit(X, np.array([0, -1]))

    def test_bad_settings_raise_config_errors(self):
        ref, samples = small_case()
        X = np.column_stack([samples.x, samples.y])
        with pytest.raises(ConfigError, match="radius"):
            MCRFSimulator(radius=0.0).fit(X, samples.classes)
        with pytest.raises(ConfigError, match="n_realizations"):
            MCRFSimulator(n_realizations=0).fit(X, samples.classes)
        with pytest.raises(ConfigError, match="unknown method"):
            MCRFSimulator(method="kriging").fit(X, samples.classes)


class TestPredict:
    def test_unfitted_raises(self):
        est = MCRFSimulator()
        with pytest.raises(NotFittedError):
            est.predict((8, 8))
        with pytest.raises(NotFittedError):
            est.simulate((8, 8))
        with pytest.raises(NotFittedError):
            est.validation_report()

    def test_simulate_returns_ensemble(self, fitted):
        ref, _, est = fitted
        ens = est.simulate(ref)
        assert ens.n_real == 4
        assert ens.realizations[0].labels.shape == (24, 24)
        assert all((r.labels >= 0).all() for r in ens.realizations)

    def test_simulate_overrides(self, fitted):
        ref, _, est = fitted
        ens = est.simulate(ref, n_realizations=2, seed=99)
        assert ens.n_real == 2
        again = est.simulate(ref, n_realizations=2, seed=99)
        for a, b in zip(ens.realizations, again.realizations):
            assert np.array_equal(a.labels, b.labels)

    def test_shape_template(self, fitted):
        # template must still cover the conditioning points
        _, _, est = fitted
        ens = est.simulate((24, 30), n_realizations=1)
        assert ens.realizations[0].labels.shape == (24, 30)

    def test_bad_template_rejected(self, fitted):
        _, _, est = fitted
        with pytest.raises(DataError, match="template"):
            est.simulate("not a grid")

    def test_predict_proba_cube(self, fitted):
        ref, _, est = fitted
        cube = est.predict_proba(ref)
        assert isinstance(cube, ProbabilityCube)
        assert cube.q.shape == (3, 24, 24)
        sums = cube.q.sum(axis=0)
        assert np.allclose(sums[ref.data_mask], 1.0)

    def test_predict_equals_optimal_of_proba(self, fitted):
        ref, _, est = fitted
        predicted = est.predict(ref)
        by_hand = optimal_map(est.predict_proba(ref))
        assert np.array_equal(predicted.labels, by_hand.labels)

    def test_predict_honors_conditioning(self, fitted):
        ref, samples, est = fitted
        predicted = est.predict(ref)
        from mcrfsim.grid import snap_to_cell
        hits = 0
        for i in range(len(samples)):
            r, c = snap_to_cell(ref, samples.x[i], samples.y[i])
            hits += predicted.labels[r, c] == samples.classes[i]
        # every realization honors its conditioning cells, so the mode does
        assert hits == len(samples)

    def test_predict_respects_nodata(self):
        # samples confined to the lower half so the masked row stays empty
        xs, ys = np.meshgrid(np.arange(8) + 0.5, np.arange(5) + 0.5)
        X = np.column_stack([xs.ravel(), ys.ravel()])
        y = (X[:, 0].astype(int) + X[:, 1].astype(int)) % 2
        est = MCRFSimulator(radius=4.0, n_realizations=2, bin_width=1.0,
                            n_bins=6, random_state=3)
        est.fit(X, y)
        template = Raster.domain(10, 10)
        template.labels[9, :] = NODATA
        predicted = est.predict(template)
        assert (predicted.labels[9, :] == NODATA).all()
        assert (predicted.labels[:9, :] >= 0).all()

    def test_score_between_zero_and_one(self, fitted):
        ref, _, est = fitted
        s = est.score(ref)
        assert 0.0 <= s <= 1.0
        # conditioning on 60 of 576 cells should beat chance comfortably
        assert s > 1.0 / 3.0

    def test_score_rejects_non_raster(self, fitted):
        _, _, est = fitted
        with pytest.raises(DataError, match="reference Raster"):
            est.score(np.zeros((4, 4)))


class TestDeterminism:
    def test_same_seed_same_prediction(self):
        ref, samples = small_case()
        X = np.column_stack([samples.x, samples.y])

        def run():
            est = MCRFSimulator(method="linear", radius=5.0,
                                n_realizations=3, bin_width=2.0, n_bins=10,
                                random_state=5)
            est.fit(X, samples.classes)
            return est.predict(ref)

        assert np.array_equal(run().labels, run().labels)

    def test_threads_do_not_change_results(self):
        ref, samples = small_case()
        X = np.column_stack([samples.x, samples.y])
        serial = MCRFSimulator(radius=5.0, n_realizations=3, bin_width=2.0,
                               n_bins=10, random_state=6, threads=1)
        threaded = clone(serial).set_params(threads=3)
        serial.fit(X, samples.classes)
        threaded.fit(X, samples.classes)
        a = serial.simulate(ref)
        b = threaded.simulate(ref)
        for ra, rb in zip(a.realizations, b.realizations):
            assert np.array_equal(ra.labels, rb.labels)

    def test_different_seeds_differ(self, fitted):
        ref, _, est = fitted
        a = est.simulate(ref, seed=1).realizations[0].labels
        b = est.simulate(ref, seed=2).realizations[0].labels
        assert not np.array_equal(a, b)
