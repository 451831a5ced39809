import itertools

import numpy as np
import pytest

from ising_continuum.instances import IsingInstance


def dense_energy(J, h, s):
    """H = -1/2 s.J.s - h.s on a dense symmetric matrix, no package code involved."""
    s = np.asarray(s, dtype=float)
    return float(-0.5 * s @ J @ s - h @ s)


def naive_ground(inst: IsingInstance):
    """Exhaustive minimum and its multiplicity, straight from the dense matrix."""
    n = inst.n
    J = np.zeros((n, n))
    J[inst.rows, inst.cols] = inst.weights
    J = J + J.T
    states = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    e = -0.5 * np.einsum("ki,ij,kj->k", states, J, states) - states @ inst.fields
    best = e.min()
    tol = 1e-9 * max(1.0, abs(best))
    return float(best), int(np.count_nonzero(np.abs(e - best) <= tol))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, repeated at the end of the session
VERDICTS: list[str] = []


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
