import numpy as np
import pytest


class ScriptedRng:
    """Stand-in for RngStream that replays fixed draws.

    ``random`` pops from ``uniforms`` (one value per element requested),
    ``integers`` from ``ints``, ``standard_normal`` from ``normals``.
    """

    def __init__(self, uniforms=(), ints=(), normals=(), perm=None):
        self.uniforms = list(uniforms)
        self.ints = list(ints)
        self.normals = list(normals)
        self.perm = perm

    def _take(self, queue, size):
        if size is None:
            return queue.pop(0)
        return np.array([queue.pop(0) for _ in range(int(np.prod(size)))]).reshape(size)

    def random(self, size=None):
        return self._take(self.uniforms, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        u = self._take(self.uniforms, size)
        return low + (high - low) * u

    def integers(self, low, high=None, size=None):
        return self._take(self.ints, size)

    def standard_normal(self, size=None):
        return self._take(self.normals, size)

    def permutation(self, n):
        return np.array(self.perm if self.perm is not None else range(n))


@pytest.fixture
def scripted():
    return ScriptedRng


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion; the lines are
    printed together at the end of the session."""

    def _report(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
