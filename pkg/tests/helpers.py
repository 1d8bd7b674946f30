"""Shared test utilities."""

import numpy as np


def smooth_random(grid, rng, amplitude=0.3, modes=4):
    x = grid.nodes
    k = np.arange(1, modes + 1)
    a = rng.normal(size=modes) / k ** 2
    b = rng.normal(size=modes) / k ** 2
    f = np.cos(2 * np.pi * np.outer(x, k)) @ a + np.sin(2 * np.pi * np.outer(x, k)) @ b
    return amplitude * f / max(1.0, np.max(np.abs(f))) + rng.normal() * 0.1


# criterion number -> [title, passed, details]
ACCEPTANCE = {}


class criterion:
    """Record the outcome of one acceptance sub-check; a criterion passes only if all its
    sub-checks pass.  Exceptions propagate so pytest still sees the failure."""

    def __init__(self, number, title):
        self.number = number
        self.title = title

    def __enter__(self):
        ACCEPTANCE.setdefault(self.number, [self.title, True, []])
        return self

    def note(self, text):
        ACCEPTANCE[self.number][2].append(text)

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            ACCEPTANCE[self.number][1] = False
            self.note(f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        return False
