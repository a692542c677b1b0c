import pytest

from hcvsim import ModelParams


@pytest.fixture(scope="session")
def ref_params() -> ModelParams:
    """Reference configuration used by the worked examples throughout."""
    return ModelParams(r=1.0, lam=5.0, p_i=0.8, alpha=1.0, p=0.5,
                       mu1=0.1, mu2=0.2)


@pytest.fixture(scope="session")
def small_params() -> ModelParams:
    """Low-rate instance whose stationary law fits a small truncation."""
    return ModelParams(r=0.2, lam=0.5, p_i=0.5, alpha=0.6, p=0.5,
                       mu1=1.0, mu2=1.0)
