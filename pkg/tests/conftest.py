import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

from slopegyre import jets as J
from slopegyre.regime import preset, validate
from slopegyre.spectral_field import ModeSet, Profile


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def reference_scales():
    return validate(preset("reference"))


@pytest.fixture(scope="session")
def lowfreq_scales():
    return validate(preset("lowfreq"))


def gaussian_forcing(modes, n, gamma=1.0, wy=1.0):
    """f1 = exp(-xi_x^2) exp(-wy^2 xi_y^2 / 2) exp(-gamma z) as jets; f2 = 0."""
    rates = {"gamma": J.const(np.full(modes.M, gamma + 0j), n)}
    eta = J.var(modes.xi_y, n)
    coef = J.mul(J.const(np.exp(-modes.xi_x ** 2) + 0j, n), J.exp(-0.5 * wy ** 2 * J.mul(eta, eta)))
    return Profile.exp(rates, "gamma", coef), Profile.zeros(rates, modes.M, n)


def sample_modes(rng, M, lo=0.2, hi=2.0):
    xx = rng.uniform(-hi, hi, M)
    yy = rng.uniform(lo, hi, M) * rng.choice([-1.0, 1.0], M)
    return ModeSet(xx, yy, np.arange(M))


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed at the end of the run."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(num, ok, detail):
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((num, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance_lines")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
