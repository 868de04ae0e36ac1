import numpy as np
import pytest

from predscore.data import Dataset

# criterion -> (passed, detail); filled by test_acceptance, echoed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


def logistic_dataset(n=400, beta=(-0.3, 1.2, -0.8), seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, len(beta) - 1))
    eta = beta[0] + X @ np.asarray(beta[1:])
    y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(np.int8)
    return Dataset(X, y, tuple(f"x{i + 1}" for i in range(len(beta) - 1)))


@pytest.fixture
def toy():
    return logistic_dataset()
