"""Running cell statistics and the confidence-ratio test used by every learner."""
from math import log, sqrt

import numpy as np

from ._accel import njit


@njit
def ratio_condition(estimate, width):
    """True iff estimate - width > 0 and (estimate + width) / (estimate - width) <= 3/2.

    For a positive denominator the ratio test is equivalent to
    ``estimate >= 5 * width``, which is how it is evaluated here so that the
    boundary case is decided exactly.
    """
    if not (estimate - width > 0.0):
        return False
    return estimate >= 5.0 * width


@njit
def cell_radius(count, log_term):
    """sqrt(2 * log_term / count); infinite for an unsampled cell."""
    if count <= 0:
        return np.inf
    return np.sqrt(2.0 * log_term / count)


@njit
def fill_means(counts, sums, out):
    n, m = counts.shape
    for i in range(n):
        for j in range(m):
            out[i, j] = sums[i, j] / counts[i, j] if counts[i, j] > 0 else 0.0


class EmpiricalState:
    """Per-cell sample counts, running sums and confidence radii."""

    def __init__(self, n: int, m: int):
        self.counts = np.zeros((n, m), dtype=np.int64)
        self.sums = np.zeros((n, m))

    @property
    def shape(self):
        return self.counts.shape

    def update_cell(self, i: int, j: int, value: float) -> None:
        self.counts[i, j] += 1
        self.sums[i, j] += value

    def update_full(self, matrix) -> None:
        self.counts += 1
        self.sums += matrix

    def means(self) -> np.ndarray:
        out = np.empty(self.counts.shape)
        fill_means(self.counts, self.sums, out)
        return out

    def radii(self, horizon: int) -> np.ndarray:
        """delta_ij = sqrt(2 ln(T^2) / n_ij), infinite where unsampled."""
        lt = log(float(horizon) ** 2)
        with np.errstate(divide="ignore"):
            r = np.sqrt(2.0 * lt / self.counts)
        r[self.counts == 0] = np.inf
        return r

    def min_count(self) -> int:
        return int(self.counts.min())


def uniform_radius(t: int, log_arg: float) -> float:
    """sqrt(2 ln(log_arg) / t), the radius shared by all cells under full feedback."""
    return sqrt(2.0 * log(log_arg) / t)
