import numpy as np
import pytest

from guide_guard.dataset import SyntheticConfig, assign_classes, generate_synthetic

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_log():
    """Record one pass/fail/skip line per acceptance criterion for the terminal summary."""

    def record(name: str, status, detail: str = ""):
        if status is None:
            word = "SKIP"
        else:
            word = "PASS" if status else "FAIL"
        _ACCEPTANCE.append((name, word, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, word, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{word}] {name}: {detail}")


def numeric_grad(f, x, h=1e-5):
    """Central finite differences of scalar ``f`` w.r.t. every entry of ``x`` (modified in place, restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def max_rel_err(a, b, floor=1e-6):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


@pytest.fixture(scope="session")
def small_planted():
    """Noise-free planted screen, perfect matches form exactly the top octile."""
    recs = generate_synthetic(SyntheticConfig(n_targets=48, guides_per_target=7, noise_sd=0.0, seed=3))
    labeled, _ = assign_classes(recs)
    return recs, labeled
