import pytest

from mmwuav.codebook import build_bmw_ss, build_deact

CODEBOOK_COMBOS = [(16, 2), (32, 2), (64, 2), (27, 3)]


@pytest.fixture(scope="session")
def deact_32():
    return build_deact(32, 2)


@pytest.fixture(scope="session")
def bmw_32():
    return build_bmw_ss(32, 2)


@pytest.fixture(scope="session")
def all_codebooks():
    """(n, m) -> (deact, bmw-ss) for the acceptance combos; built once."""
    return {
        (n, m): (build_deact(n, m), build_bmw_ss(n, m)) for n, m in CODEBOOK_COMBOS
    }
