"""Extremal single-lambda boxes that saturate the relaxed CHSH bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .model import LambdaModel, single_lambda_model

__all__ = [
    "BoxSpec",
    "make_box",
    "make_deterministic_box",
    "make_nosignal_box",
    "make_pr_box",
    "make_signalling_box",
]

BoxKind = Literal["pr", "nosignal", "signalling", "deterministic"]


def _check_I(I: float) -> float:
    I = float(I)
    if not 0.0 <= I <= 0.5:
        raise ValueError(f"I must lie in [0, 1/2], got {I!r}")
    return I


def _mirror(dist):
    # relabel + <-> - on both sides: (++, +-, -+, --) -> (--, -+, +-, ++)
    return tuple(reversed(dist))


def _build(p123, p4, label, meta, flip):
    dists = [p123, p123, p123, p4]
    if flip:
        dists = [_mirror(d) for d in dists]
    return single_lambda_model(dists, label=label, meta=meta)


def make_pr_box() -> LambdaModel:
    """PR box: perfect correlation at XY, X'Y, XY' and perfect anticorrelation at X'Y'."""
    return single_lambda_model(
        [(0.5, 0.0, 0.0, 0.5)] * 3 + [(0.0, 0.5, 0.5, 0.0)],
        label="pr",
        meta={"box": "pr"},
    )


def make_nosignal_box(I: float, flip: bool = False) -> LambdaModel:
    """The (I, 0)-box, with CHSH value 2 + 4I.

    ``flip`` gives the mirror construction whose marginals sit at 1 - I.
    """
    I = _check_I(I)
    return _build(
        (I, 0.0, 0.0, 1.0 - I),
        (0.0, I, I, 1.0 - 2.0 * I),
        "nosignal",
        {"box": "nosignal", "I": I, "flip": flip},
        flip,
    )


def make_signalling_box(I: float, flip: bool = False) -> LambdaModel:
    """The (I, 1 - 2I)-box, with CHSH value 4 for every I."""
    I = _check_I(I)
    return _build(
        (I, 0.0, 0.0, 1.0 - I),
        (0.0, I, 1.0 - I, 0.0),
        "signalling",
        {"box": "signalling", "I": I, "flip": flip},
        flip,
    )


def _slot(a: int, b: int) -> int:
    return (0 if a == 1 else 2) + (0 if b == 1 else 1)


def make_deterministic_box(a_x: int, a_xp: int, b_y: int, b_yp: int) -> LambdaModel:
    """Local deterministic box: the first observer answers a(X), a(X'), the second b(Y), b(Y')."""
    for v in (a_x, a_xp, b_y, b_yp):
        if v not in (1, -1):
            raise ValueError(f"outcomes must be +1 or -1, got {v!r}")
    dists = []
    for a, b in ((a_x, b_y), (a_xp, b_y), (a_x, b_yp), (a_xp, b_yp)):
        d = [0.0, 0.0, 0.0, 0.0]
        d[_slot(a, b)] = 1.0
        dists.append(d)
    return single_lambda_model(
        dists,
        label="deterministic",
        meta={"box": "deterministic", "outcomes": [a_x, a_xp, b_y, b_yp]},
    )


@dataclass(frozen=True)
class BoxSpec:
    kind: BoxKind
    I: float = 0.0
    flip: bool = False
    outcomes: tuple[int, int, int, int] = (1, 1, 1, 1)

    def __post_init__(self) -> None:
        if self.kind not in ("pr", "nosignal", "signalling", "deterministic"):
            raise ValueError(f"unknown box kind {self.kind!r}")
        if self.kind in ("nosignal", "signalling"):
            _check_I(self.I)
        if self.kind == "deterministic" and (
            len(self.outcomes) != 4 or any(v not in (1, -1) for v in self.outcomes)
        ):
            raise ValueError("deterministic box needs four +/-1 outcomes")


def make_box(spec: BoxSpec) -> LambdaModel:
    if spec.kind == "pr":
        return make_pr_box()
    if spec.kind == "nosignal":
        return make_nosignal_box(spec.I, spec.flip)
    if spec.kind == "signalling":
        return make_signalling_box(spec.I, spec.flip)
    return make_deterministic_box(*spec.outcomes)
