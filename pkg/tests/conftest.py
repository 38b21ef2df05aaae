import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def dense_diff(n):
    """Explicit periodic forward-difference matrix, built independently of the library."""
    d = np.zeros((n, n))
    for i in range(n):
        d[i, i] -= 1.0
        d[i, (i + 1) % n] += 1.0
    return d


def kolda_unfold(x, mode):
    """Reference unfolding by explicit index enumeration."""
    n = x.shape
    m = mode - 1
    others = [a for a in range(3) if a != m]
    out = np.zeros((n[m], n[others[0]] * n[others[1]]))
    for idx in np.ndindex(*n):
        col = idx[others[0]] + n[others[0]] * idx[others[1]]
        out[idx[m], col] = x[idx]
    return out


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line; printed again in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
