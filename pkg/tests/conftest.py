import pytest
from hypothesis import settings

from pseudochaos import HawkesParams, Kernel, Window

# MC-style tests do real work on first call (numpy warmup); wall-clock
# deadlines would only add flake.
settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def exp_kernel():
    return Kernel.exponential(0.5, 1.0)


@pytest.fixture(scope="session")
def zero_kernel():
    return Kernel.zero()


@pytest.fixture(scope="session")
def params_small(exp_kernel):
    """Budget-safe window: about six atoms per path."""
    return HawkesParams(mu=1.0, kernel=exp_kernel, window=Window(T=3.0, M=2.0))


@pytest.fixture(scope="session")
def params_default(exp_kernel):
    """Desk-scale defaults used by the harness and the CLI."""
    return HawkesParams(mu=1.0, kernel=exp_kernel, window=Window(T=5.0, M=4.0))
