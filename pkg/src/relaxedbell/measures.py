"""Degrees of indeterminism, signalling and measurement dependence.

The grid-level helpers take conditional distributions shaped
``(L, n_first, n_second, 4)`` so the same code serves both the 2x2
``LambdaModel`` and the multi-setting grids used by the singlet scanner.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import PAIRS, LambdaModel

__all__ = [
    "MeasureReport",
    "grid_indeterminism",
    "grid_signalling",
    "local_indeterminism",
    "measure_all",
    "measurement_dependence",
    "signalling_1to2",
    "signalling_2to1",
]


def first_marginal(dists: np.ndarray) -> np.ndarray:
    return dists[..., 0] + dists[..., 1]


def second_marginal(dists: np.ndarray) -> np.ndarray:
    return dists[..., 0] + dists[..., 2]


def grid_indeterminism(dists: np.ndarray, observer: int) -> float:
    """max over lambda and settings of min(p, 1 - p) for one observer's +1 marginal."""
    if observer not in (1, 2):
        raise ValueError(f"observer must be 1 or 2, got {observer!r}")
    if dists.shape[0] == 0:
        return 0.0
    p = first_marginal(dists) if observer == 1 else second_marginal(dists)
    return float(np.max(np.minimum(p, 1.0 - p)))


def grid_signalling(dists: np.ndarray, direction: str) -> float:
    """Largest marginal shift one observer can induce in the other.

    ``"1to2"`` compares the second observer's marginal across the first
    observer's settings (axis 1); ``"2to1"`` the converse.
    """
    if dists.shape[0] == 0:
        return 0.0
    if direction == "1to2":
        p = second_marginal(dists)
        axis = 1
    elif direction == "2to1":
        p = first_marginal(dists)
        axis = 2
    else:
        raise ValueError(f"direction must be '1to2' or '2to1', got {direction!r}")
    spread = p.max(axis=axis) - p.min(axis=axis)
    return float(spread.max())


def _active_dists(model: LambdaModel) -> np.ndarray:
    dists, _ = model.arrays()
    # entries with zero weight at every setting pair are padding
    keep = [k for k, entry in enumerate(model.lambdas) if entry.active]
    return dists[keep]


def signalling_1to2(model: LambdaModel) -> float:
    return grid_signalling(_active_dists(model), "1to2")


def signalling_2to1(model: LambdaModel) -> float:
    return grid_signalling(_active_dists(model), "2to1")


def local_indeterminism(model: LambdaModel, observer: int) -> float:
    return grid_indeterminism(_active_dists(model), observer)


def measurement_dependence(model: LambdaModel) -> float:
    """max over pairs of setting pairs of sum_lambda |w_pair1 - w_pair2|; lies in [0, 2]."""
    best = 0.0
    for a, b in itertools.combinations(PAIRS, 2):
        # fsum is correctly rounded, so the result ignores lambda order
        total = math.fsum(abs(e.weights[a.value] - e.weights[b.value]) for e in model.lambdas)
        best = max(best, total)
    return best


@dataclass(frozen=True)
class MeasureReport:
    I1: float
    I2: float
    I: float
    S_1to2: float
    S_2to1: float
    S: float
    M: float
    freedom_of_choice: bool

    def to_dict(self) -> dict:
        return asdict(self)


def measure_all(model: LambdaModel) -> MeasureReport:
    dists = _active_dists(model)
    i1 = grid_indeterminism(dists, 1)
    i2 = grid_indeterminism(dists, 2)
    s12 = grid_signalling(dists, "1to2")
    s21 = grid_signalling(dists, "2to1")
    return MeasureReport(
        I1=i1,
        I2=i2,
        I=max(i1, i2),
        S_1to2=s12,
        S_2to1=s21,
        S=max(s12, s21),
        M=measurement_dependence(model),
        freedom_of_choice=model.freedom_of_choice,
    )
