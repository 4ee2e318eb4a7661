"""
Test configuration and fixtures.
"""
import os
import sys
import pytest
from pathlib import Path

# Add project root to Python path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# Must be set before config.settings is imported
os.environ.setdefault('LIVE_LOG', 'DEBUG')
os.environ.setdefault('LIVE_LOG_TO_FILE', 'false')

from core.numerics import RngStream, cholesky  # noqa: E402
from simulation.designs import (  # noqa: E402
    ExactSparse, Loading1, gen_beta, gen_dataset, gen_loading, make_ar_covariance,
)

TEST_SEED = 20240101


@pytest.fixture
def stream():
    """Fresh seeded stream per test."""
    return RngStream(TEST_SEED, 0)


@pytest.fixture(scope='session')
def sparse_design():
    """Exact-sparse design with p = 21 (signal in columns 2..11) and n = 300."""
    p = 21
    beta = gen_beta(ExactSparse(), p)
    chol = cholesky(make_ar_covariance(p - 1))
    data = gen_dataset(300, beta, chol, RngStream(TEST_SEED, 1))
    loading = gen_loading(Loading1(r=1.0 / 25.0), p, RngStream(TEST_SEED, 2 ** 63))
    return {'beta': beta, 'chol': chol, 'data': data, 'loading': loading}


@pytest.fixture
def tmp_out(tmp_path):
    out = tmp_path / 'out'
    out.mkdir()
    return out
