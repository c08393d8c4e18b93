import numpy as np
import pytest

from mcam import SyntheticSpec, generate


def rank_one(gamma, u, v, w):
    return gamma * np.einsum("a,b,c->abc", u, v, w)


@pytest.fixture
def two_block():
    """Noiseless 8x6x10 tensor with two equal-weight blocks per mode."""
    spec = SyntheticSpec((8, 6, 10),
                         (((0, 1, 2, 3), (4, 5, 6, 7)),
                          ((0, 1, 2), (3, 4, 5)),
                          ((0, 1, 2, 3, 4), (5, 6, 7, 8, 9))),
                         (4.0, 4.0), noise=False)
    return generate(spec)


@pytest.fixture(scope="session")
def benchmark_tensors():
    """Cache of 100x100x100 nine-block tensors keyed by (gamma, seed)."""
    cache = {}

    def get(gamma, seed):
        if (gamma, seed) not in cache:
            cache[gamma, seed] = generate(SyntheticSpec.blocks(gamma=gamma, seed=seed))
        return cache[gamma, seed]

    return get


ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one acceptance line, then fail the test if the criterion failed."""

    def record(name, ok, detail):
        ACCEPTANCE.append(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
