import numpy as np
import pytest

from berrri import Dataset, Hyperparameters, VariationalState


def random_dataset(n=4, q=3, p=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, size=(n, q)).astype(float)
    Y = rng.normal(size=(n, p))
    return Dataset(X=X, Y=Y)


def random_state(q=3, p=4, k=2, seed=0):
    rng = np.random.default_rng(seed + 1000)
    return VariationalState(
        lam=rng.uniform(0.5, 3.0, size=(k, 2)),
        eta=rng.uniform(0.05, 0.95, size=(q, k)),
        phi=rng.normal(scale=0.7, size=(k, p)),
        varphi=rng.uniform(0.1, 2.0, size=(k, p)),
        kappa=rng.uniform(0.5, 3.0, size=(k, p, 2)),
    )


def micro_instance(n=4, q=3, p=4, k=2, seed=0, **hp_kwargs):
    data = random_dataset(n, q, p, seed)
    defaults = dict(k_max=k, c=0.7, d=1.3, sigma2=0.8, alpha=1.5)
    defaults.update(hp_kwargs)
    hp = Hyperparameters(**defaults)
    state = random_state(q, p, k, seed)
    return data, hp, state


@pytest.fixture
def micro():
    return micro_instance()
