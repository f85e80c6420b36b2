import numpy as np
import pytest

from tailnet.copula import CorrelationMatrix


def random_correlation(d: int, rng: np.random.Generator) -> CorrelationMatrix:
    """Random positive-definite correlation matrix (normalized Wishart)."""
    a = rng.standard_normal((d, d + 2))
    s = a @ a.T
    scale = 1.0 / np.sqrt(np.diag(s))
    return CorrelationMatrix(s * scale[:, None] * scale[None, :])


@pytest.fixture
def corr_rng():
    return np.random.default_rng(20240817)
