import numpy as np
import pytest

from aspkit.integrals_io import SpatialIntegrals, builtin_dataset, spatial_to_spin

ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    """Collect a one-line acceptance verdict for the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_spatial(n_orb: int, rng: np.random.Generator, n_elec: int = 2) -> SpatialIntegrals:
    """Random real integrals with 8-fold symmetry and a positive-definite-ish Coulomb diagonal."""
    h = rng.normal(scale=0.5, size=(n_orb, n_orb))
    h = 0.5 * (h + h.T) - 2.0 * np.eye(n_orb)
    eri = {}
    for p in range(n_orb):
        for q in range(p, n_orb):
            for r in range(n_orb):
                for s in range(r, n_orb):
                    if (p, q) <= (r, s):
                        val = rng.normal(scale=0.05)
                        if (p, q) == (r, s):
                            val = abs(val) + 0.4
                        eri[(p, q, r, s)] = val
    return SpatialIntegrals(n_orb=n_orb, n_elec=n_elec, h_core=h, eri=eri)


@pytest.fixture(params=["ch2_cas22", "h2_minimal"])
def builtin_ints(request):
    return builtin_dataset(request.param)


@pytest.fixture
def ch2():
    return builtin_dataset("ch2_cas22")


@pytest.fixture
def h2():
    return builtin_dataset("h2_minimal")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ints(n_orb, seed):
    return spatial_to_spin(random_spatial(n_orb, np.random.default_rng(seed)))
