import numpy as np
import pytest

import permchol as pc

# One seed for every statistical check so runs are reproducible end to end.
ACCEPT_SEED = 2026


def rand_pd(rng, p, jitter=0.5):
    """Well-conditioned random SPD matrix."""
    a = rng.normal(size=(p, p))
    return a @ a.T + jitter * np.eye(p)


def _table(model_id, methods):
    cfg = pc.ExperimentConfig(
        model=pc.ModelSpec(id=model_id, p=30),
        n=50,
        reps=50,
        m=30,
        methods=methods,
        seed=ACCEPT_SEED,
    )
    return pc.run_experiment(cfg)


@pytest.fixture(scope="session")
def model1_table():
    """Model 1 benchmark at desk scale (reps=50, M=30, n=50, p=30)."""
    return _table(1, ("m1", "m2", "ave", "bic"))


@pytest.fixture(scope="session")
def model2_table():
    return _table(2, ("m1", "m2", "bic"))


@pytest.fixture(scope="session")
def model5_table():
    return _table(5, ("m1", "m2"))
