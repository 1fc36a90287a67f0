import json

import numpy as np
import pytest

import permchol as pc


class TestMakeModel:
    def test_model1_p4_exact(self):
        expected = np.array(
            [
                [1.0, 0.5, 0.3, 0.0],
                [0.5, 1.0, 0.5, 0.3],
                [0.3, 0.5, 1.0, 0.5],
                [0.0, 0.3, 0.5, 1.0],
            ]
        )
        assert np.array_equal(pc.make_model(pc.ModelSpec(id=1, p=4)), expected)

    def test_model2_same_spectrum_and_fixed_by_seed(self):
        m1 = pc.make_model(pc.ModelSpec(id=1, p=12))
        m2 = pc.make_model(pc.ModelSpec(id=2, p=12, perm_seed=4))
        assert np.abs(
            np.sort(np.linalg.eigvalsh(m1)) - np.sort(np.linalg.eigvalsh(m2))
        ).max() <= 1e-10
        again = pc.make_model(pc.ModelSpec(id=2, p=12, perm_seed=4))
        assert np.array_equal(m2, again)
        other = pc.make_model(pc.ModelSpec(id=2, p=12, perm_seed=5))
        assert not np.array_equal(m2, other)

    def test_model3_block_structure(self):
        om = pc.make_model(pc.ModelSpec(id=3, p=14))
        assert np.all(om[:10, :10][~np.eye(10, dtype=bool)] == 0.5)
        assert np.array_equal(om[10:, 10:], np.eye(4))
        assert np.all(om[:10, 10:] == 0.0)
        with pytest.raises(ValueError):
            pc.ModelSpec(id=3, p=9)

    def test_model4_ar_decay(self):
        om = pc.make_model(pc.ModelSpec(id=4, p=5))
        assert om[0, 4] == 0.5**4
        assert om[2, 3] == 0.5

    def test_model5_inverse_diagonal(self):
        om = pc.make_model(pc.ModelSpec(id=5, p=3))
        assert np.allclose(om, np.diag([1.0 / 3.0, 0.5, 1.0]), atol=1e-15)

    def test_model6_p2_hand_value(self):
        om = pc.make_model(pc.ModelSpec(id=6, p=2))
        assert np.allclose(om, 100.0 * np.array([[1.64, -0.8], [-0.8, 1.0]]), atol=1e-12)

    @pytest.mark.parametrize("mid", range(1, 7))
    def test_all_models_pd(self, mid):
        p = 12 if mid == 3 else 10
        om = pc.make_model(pc.ModelSpec(id=mid, p=p))
        assert np.linalg.eigvalsh(om).min() > 0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            pc.ModelSpec(id=7, p=10)
        with pytest.raises(ValueError):
            pc.ModelSpec(id=1, p=1)


class TestSampleMvn:
    def test_shape_and_determinism(self):
        om = pc.make_model(pc.ModelSpec(id=1, p=6))
        x = pc.sample_mvn(om, 17, 3)
        assert x.shape == (17, 6)
        assert np.array_equal(x, pc.sample_mvn(om, 17, 3))
        assert not np.array_equal(x, pc.sample_mvn(om, 17, 4))

    def test_identity_covariance_lln(self):
        x = pc.sample_mvn(np.eye(2), 10_000, 0)
        s = pc.sample_covariance(x)
        assert np.abs(s - np.eye(2)).max() < 0.1

    def test_consistency_trend(self):
        om = pc.make_model(pc.ModelSpec(id=4, p=6))
        sigma = np.linalg.inv(om)
        dists = []
        for n in (100, 1000, 10_000):
            draws = [
                np.linalg.norm(pc.sample_covariance(pc.sample_mvn(om, n, 100 + k)) - sigma)
                for k in range(10)
            ]
            dists.append(np.mean(draws))
        assert dists[0] > dists[1] > dists[2]

    def test_rejects_non_pd(self):
        with pytest.raises(pc.NotPositiveDefiniteError):
            pc.sample_mvn(np.array([[1.0, 2.0], [2.0, 1.0]]), 5, 0)


@pytest.fixture(scope="module")
def tiny_report():
    cfg = pc.ExperimentConfig(
        model=pc.ModelSpec(id=5, p=6),
        n=30,
        reps=3,
        m=2,
        methods=("m1", "m2", "ave", "bic"),
        seed=7,
    )
    return pc.run_experiment(cfg)


class TestRunExperiment:
    def test_structure(self, tiny_report):
        for meth in ("m1", "m2", "ave", "bic"):
            assert tiny_report.failures[meth] == 0
            for loss in pc.simulation.LOSS_NAMES:
                mean, se = tiny_report.results[meth][loss]
                assert mean is not None
                assert se is not None and se >= 0

    def test_deterministic(self, tiny_report):
        cfg = pc.ExperimentConfig(
            model=pc.ModelSpec(id=5, p=6),
            n=30,
            reps=3,
            m=2,
            methods=("m1", "m2", "ave", "bic"),
            seed=7,
        )
        again = pc.run_experiment(cfg)
        assert json.dumps(again.to_dict()) == json.dumps(tiny_report.to_dict())

    def test_threads_do_not_change_results(self, tiny_report):
        cfg = pc.ExperimentConfig(
            model=pc.ModelSpec(id=5, p=6),
            n=30,
            reps=3,
            m=2,
            methods=("m1", "m2", "ave", "bic"),
            seed=7,
            threads=3,
        )
        threaded = pc.run_experiment(cfg)
        assert json.dumps(threaded.to_dict()) == json.dumps(tiny_report.to_dict())

    def test_single_rep_se_absent(self):
        cfg = pc.ExperimentConfig(
            model=pc.ModelSpec(id=5, p=5),
            n=25,
            reps=1,
            m=2,
            methods=("m1",),
            seed=1,
        )
        rep = pc.run_experiment(cfg)
        mean, se = rep.results["m1"]["delta1"]
        assert mean is not None and se is None

    def test_centering_applied(self):
        # the harness centers columns before estimation
        x = pc.sample_mvn(np.eye(4), 60, 5) + 3.0
        xc = x - x.mean(axis=0)
        assert np.abs(xc.mean(axis=0)).max() <= 1e-12

    def test_validation(self):
        spec = pc.ModelSpec(id=1, p=5)
        with pytest.raises(ValueError):
            pc.ExperimentConfig(model=spec, n=30, reps=0, m=2, methods=("m1",), seed=0)
        with pytest.raises(ValueError):
            pc.ExperimentConfig(model=spec, n=30, reps=2, m=2, methods=("glasso",), seed=0)
