"""CHSH correlators, the relaxed bound B(I, S) and violation thresholds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Union

from .measures import measure_all
from .model import PAIRS, Behavior, JointDistribution, LambdaModel, behavior_of

Number = Union[float, Fraction]

EQUALITY_TOL = 1e-9

__all__ = [
    "ChshValue",
    "ConsistencyVerdict",
    "MeasurementDependenceError",
    "Thresholds",
    "bound_B",
    "check_model_consistency",
    "chsh",
    "correlator",
    "s_gap",
    "thresholds_for_violation",
]


class MeasurementDependenceError(ValueError):
    """The relaxed bound only covers models whose lambda weights ignore the settings."""


def correlator(dist: JointDistribution) -> float:
    """Mean product of the +/-1 outcomes: P(++) + P(--) - P(+-) - P(-+)."""
    pp, pm, mp, mm = dist.probs
    return (pp + mm) - (pm + mp)


@dataclass(frozen=True)
class ChshValue:
    value: float
    correlators: tuple[float, float, float, float]

    @property
    def violation(self) -> float:
        return self.value - 2.0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "correlators": {pair.key: e for pair, e in zip(PAIRS, self.correlators)},
        }


def chsh(behavior: Behavior) -> ChshValue:
    """<XY> + <X'Y> + <XY'> - <X'Y'>."""
    e = tuple(correlator(d) for d in behavior.dists)
    return ChshValue(value=e[0] + e[1] + e[2] - e[3], correlators=e)


def bound_B(I: Number, S: Number) -> Number:
    """Tight upper bound on the CHSH value for indeterminism <= I and signalling <= S.

    Works on floats or ``Fraction``; the boundary ``S == 1 - 2I`` takes the value 4.
    """
    if not 0 <= I <= Fraction(1, 2):
        raise ValueError(f"I must lie in [0, 1/2], got {I!r}")
    if not 0 <= S <= 1:
        raise ValueError(f"S must lie in [0, 1], got {S!r}")
    if S < 1 - 2 * I:
        return 2 + 4 * I
    return 4 if isinstance(I, Fraction) and isinstance(S, Fraction) else 4.0


def s_gap(I: float) -> float:
    """Signalling needed to move a marginal across the gap (I, 1 - I)."""
    return 1.0 - 2.0 * I


@dataclass(frozen=True)
class Thresholds:
    V: float
    I_V: float
    S_V: float

    def s_gap(self, I: float) -> float:
        return s_gap(I)

    def to_dict(self) -> dict:
        return asdict(self)


def thresholds_for_violation(V: float) -> Thresholds:
    """Any model showing CHSH = 2 + V needs I >= V/4 or S >= 1 - V/2."""
    if not 0.0 <= V <= 2.0:
        raise ValueError(f"V must lie in [0, 2], got {V!r}")
    return Thresholds(V=V, I_V=V / 4.0, S_V=1.0 - V / 2.0)


@dataclass(frozen=True)
class ConsistencyVerdict:
    V: float
    I: float
    S: float
    B: float
    chsh: float
    passed: bool
    equality: bool

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "I": self.I,
            "S": self.S,
            "B": self.B,
            "chsh": self.chsh,
            "pass": self.passed,
            "equality": self.equality,
        }


def check_model_consistency(model: LambdaModel) -> ConsistencyVerdict:
    """Compare the model's CHSH value with B at its own (I, S).

    A failed verdict means an implementation bug, not a physics result.
    """
    if not model.freedom_of_choice:
        raise MeasurementDependenceError(
            "model is measurement dependent (M > 0); the B(I, S) bound assumes "
            "setting-independent lambda weights"
        )
    report = measure_all(model)
    value = chsh(behavior_of(model)).value
    V = max(value - 2.0, 0.0)
    # float noise can push I a hair past 1/2 or S past 1
    B = float(bound_B(min(report.I, 0.5), min(report.S, 1.0)))
    return ConsistencyVerdict(
        V=V,
        I=report.I,
        S=report.S,
        B=B,
        chsh=value,
        passed=B >= 2.0 + V - EQUALITY_TOL,
        equality=math.isclose(B, 2.0 + V, rel_tol=0.0, abs_tol=EQUALITY_TOL),
    )
