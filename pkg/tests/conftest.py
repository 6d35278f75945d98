from pathlib import Path

import pytest

from almost_prime_lab import expsum, gamma, kernel, params, storage

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def toy_ctx():
    """Primes in (50, 100], c = 1.1, z = 5, D = 50."""
    p = params.desk_params(1.1, X=100.0, vartheta=0.5, z=5.0, D=50.0)
    return expsum.build_context(p)


@pytest.fixture(scope="session")
def toy_kernel():
    return kernel.make_kernel(0.5, 8)


@pytest.fixture(scope="session")
def toy_N(toy_ctx):
    # a target sitting next to an actual quadruple of rough primes
    x = toy_ctx.powers[gamma.admissible(toy_ctx, True)]
    return float(x[0] + x[1] + x[-1] + x[0]) + 0.1


@pytest.fixture(scope="session")
def pinned_ctx():
    p = params.desk_params(1.005, X=2000.0, vartheta=0.05, z=5.0)
    return expsum.build_context(p)


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    """Redirect default artifact paths into a temp dir."""
    d = tmp_path / "data"
    monkeypatch.setattr(storage, "DATA_DIR", d)
    return d
