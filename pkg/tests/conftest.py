import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from accrual.data import EnrollmentPanel

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_pg_panel(rng: np.random.Generator, C: int, t_int: int, alpha: float, m: float,
                    stagger: int = 0) -> EnrollmentPanel:
    """Constant-rate panel with optional staggered initiation in ``[1, stagger + 1]``."""
    u = rng.integers(1, stagger + 1, size=C, endpoint=True) if stagger else np.ones(C, dtype=int)
    lam = rng.gamma(alpha, m / alpha, size=C)
    counts = [rng.poisson(lam[i], size=t_int - u[i] + 1) for i in range(C)]
    return EnrollmentPanel.from_counts(counts, u, t_int)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
