import numpy as np
import pytest

from regarch.garch import GarchParams
from regarch.mcmc import MODEL_NORMAL, ChainConfig, run_chain
from regarch.simulate import simulate_garch


@pytest.fixture(scope="session")
def normal_chain():
    """One short GARCH-N fit on its own synthetic data, shared across modules."""
    params = GarchParams(5e-5, 0.1, 0.8)
    returns, _ = simulate_garch(params, 800, np.random.default_rng(10))
    return run_chain(
        MODEL_NORMAL, returns, ChainConfig(burn_in=1500, samples=5000, seed=3)
    )
