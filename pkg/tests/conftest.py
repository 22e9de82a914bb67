import numpy as np
import pytest

from mubo.data import Dataset


def two_gaussians(m, M, d=2, seed=0, gap=2.0):
    """Minority cloud centred at +gap/2 on every axis, majority at -gap/2."""
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.normal(gap / 2, 1.0, size=(m, d)),
        rng.normal(-gap / 2, 1.0, size=(M, d)),
    ])
    y = np.concatenate([np.ones(m, dtype=np.int64), np.zeros(M, dtype=np.int64)])
    return Dataset(X, y)


@pytest.fixture
def toy():
    return two_gaussians(20, 200, seed=11)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


def brute_knn(X, k):
    """Each row's k nearest other rows by full pairwise distances."""
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def on_neighbor_segment(s, X, neighbors, tol=1e-9):
    """True if ``s`` lies on a segment from some row of X to one of its neighbors."""
    for i, row in enumerate(neighbors):
        for j in row:
            seg = X[j] - X[i]
            denom = seg @ seg
            u = 0.0 if denom == 0 else float((s - X[i]) @ seg / denom)
            if -tol <= u <= 1 + tol and np.linalg.norm(X[i] + u * seg - s) <= tol * (1 + np.linalg.norm(s)):
                return True
    return False


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
