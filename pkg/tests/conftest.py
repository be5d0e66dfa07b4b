import numpy as np
import pytest

from shotsplit.protocol import BudgetSpec, RunConfig, prepare_run


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def shared_point_data():
    """Run data at the shared operating point (Mackey-Glass, seed 1)."""
    config = RunConfig(seed=1)
    return config, prepare_run(config)


@pytest.fixture(scope="session")
def small_budget():
    return BudgetSpec(total=2 * 6 * 80, n_shots=6, washout=10)
