import numpy as np
import pytest

from srrisk.data import Dataset, mnist_paths
from srrisk.nn import Network, init_network


def threshold_net():
    """1-D classifier predicting class 1 iff x > 0 (logits ``[-x, x]``)."""
    return Network([np.array([[-1.0], [1.0]])], [np.zeros(2)])


def linear_net(w, b):
    return Network([np.asarray(w, dtype=float)], [np.asarray(b, dtype=float)])


def random_net(rng, sizes):
    ws = [rng.normal(0, 1.0, (o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    bs = [rng.normal(0, 0.5, o) for o in sizes[1:]]
    return Network(ws, bs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_net():
    return init_network([3, 4, 2], seed=7)


@pytest.fixture
def linear2d():
    # class 1 iff x0 + 0.5 x1 > 0.2
    return linear_net([[0.0, 0.0], [1.0, 0.5]], [0.0, -0.2])


@pytest.fixture
def points2d(rng):
    x = rng.uniform(-1, 1, (40, 2))
    y = (x[:, 0] + 0.5 * x[:, 1] > 0.2).astype(int)
    return Dataset(x, y, 2)


def mnist_available():
    return all(p.exists() for p in mnist_paths().values())


requires_mnist = pytest.mark.skipif(not mnist_available(), reason="MNIST IDX files not found (see README)")


# one line per acceptance criterion, echoed at the end of the session
CRITERIA = []


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    CRITERIA.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
