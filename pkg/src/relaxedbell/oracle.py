"""Brute-force check of the relaxed CHSH bound.

For a single lambda, write each setting pair's distribution as
``(c, m - c, n - c, 1 + c - m - n)`` with marginals ``m`` (first observer)
and ``n`` (second observer).  For fixed marginals the best CHSH value is
``4 - 2J`` with

    J = |m1 - n1| + |m2 - n2| + |m3 - n3| + |m4 + n4 - 1|

so maximizing the CHSH value means minimizing ``J`` over marginals drawn
from ``[0, I] U [1 - I, 1]`` subject to the signalling constraints
``|m1 - m3|, |m2 - m4|, |n1 - n2|, |n3 - n4| <= S``.  With pairs indexed
(X,Y), (X',Y), (X,Y'), (X',Y'), these compare each observer's marginal
across the other observer's two settings.

The search runs on an exact rational grid.  Inputs given as floats are read
through their shortest decimal repr, so ``0.05`` means exactly 1/20 and
signalling constraints such as ``|0.7 - 0.1| <= 0.6`` hold without rounding
noise.  The eight marginals form a cycle

    m1 - n1 ~ n2 - m2 ~ m4 - n4 ~ n3 - m3 ~ m1

(``-`` a J term, ``~`` a signalling constraint), so the default search is an
exact min-plus transfer-matrix sweep around that cycle.  ``method="exhaustive"``
walks every admissible combination, partitioned over the ``(m1, m3)`` outer
loop; both return the same maximum and the same lexicographically smallest
witness.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .chsh import bound_B
from .model import InvariantBreach, LambdaModel, single_lambda_model

__all__ = [
    "BoxParams",
    "OracleReport",
    "argmax_to_model",
    "brute_force_max",
    "e_max_given_marginals",
    "exact",
    "j_functional",
    "verify_tightness",
]

DEFAULT_STEP = 0.05
_INF = np.int64(1) << 50
_VARS = ("m1", "m2", "m3", "m4", "n1", "n2", "n3", "n4")


def exact(x) -> Fraction:
    """Exact rational for a user-facing number; floats go through their decimal repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class BoxParams:
    m: tuple
    n: tuple
    c: tuple

    def __post_init__(self) -> None:
        for name in ("m", "n", "c"):
            if len(getattr(self, name)) != 4:
                raise ValueError(f"{name} must have four entries")

    def key(self) -> tuple:
        return tuple(self.m) + tuple(self.n) + tuple(self.c)

    def dists(self) -> list[tuple]:
        """Joint distributions ``(c, m - c, n - c, 1 + c - m - n)`` for j = 1..4.

        Arithmetic is exact on the stored binary values, rounded once at the end.
        """
        out = []
        for m, n, c in zip(self.m, self.n, self.c):
            m, n, c = Fraction(m), Fraction(n), Fraction(c)
            out.append(tuple(float(v) for v in (c, m - c, n - c, 1 + c - m - n)))
        return out

    def check_positivity(self, tol: float = 1e-12) -> None:
        for j, (m, n, c) in enumerate(zip(self.m, self.n, self.c), start=1):
            lo, hi = max(0, m + n - 1), min(m, n)
            if not (lo - tol <= c <= hi + tol):
                raise ValueError(f"c{j}={float(c)!r} outside positivity range [{float(lo)}, {float(hi)}]")

    def to_dict(self) -> dict:
        return {
            "m": [float(v) for v in self.m],
            "n": [float(v) for v in self.n],
            "c": [float(v) for v in self.c],
        }


@dataclass(frozen=True)
class OracleReport:
    I: float
    S: float
    max_E: float
    argmax: BoxParams
    analytic_B: float
    gap: float
    grid_step: float
    endpoints: bool
    grid_size: int
    method: str

    def to_dict(self) -> dict:
        return {
            "I": self.I,
            "S": self.S,
            "max_E": self.max_E,
            "analytic_B": self.analytic_B,
            "gap": self.gap,
            "grid_step": self.grid_step,
            "endpoints": self.endpoints,
            "grid_size": self.grid_size,
            "method": self.method,
            "argmax": self.argmax.to_dict(),
        }


def j_functional(params_or_m, n: Sequence | None = None):
    """J = |m1-n1| + |m2-n2| + |m3-n3| + |m4+n4-1|; independent of c."""
    if n is None:
        m, n = params_or_m.m, params_or_m.n
    else:
        m = params_or_m
    return abs(m[0] - n[0]) + abs(m[1] - n[1]) + abs(m[2] - n[2]) + abs(m[3] + n[3] - 1)


def e_max_given_marginals(m: Sequence, n: Sequence):
    """Largest CHSH value for one lambda with the given marginals, and the c's attaining it.

    The three added correlators take their upper bound 1 - 2|m - n| at
    ``c = min(m, n)``; the subtracted one its lower bound 2|m + n - 1| - 1 at
    ``c = max(0, m + n - 1)``.  Works on floats or Fractions.
    """
    m, n = tuple(m), tuple(n)
    c = (
        min(m[0], n[0]),
        min(m[1], n[1]),
        min(m[2], n[2]),
        max(0 * m[3], m[3] + n[3] - 1),
    )
    params = BoxParams(m, n, c)
    e = 4 - 2 * j_functional(m, n)

    direct = 0.0
    for j, (mj, nj, cj) in enumerate(zip(m, n, c)):
        corr = float(1 + 4 * Fraction(cj) - 2 * (Fraction(mj) + Fraction(nj)))
        direct += -corr if j == 3 else corr
    if abs(direct - float(e)) > 1e-12:
        raise InvariantBreach(f"4 - 2J = {float(e)!r} but direct CHSH = {direct!r}")
    return e, params


def _grid(I: Fraction, step: Fraction, endpoints: bool) -> list[Fraction]:
    k_max = math.floor(1 / step)
    values = {k * step for k in range(k_max + 1)}
    if endpoints:
        values |= {Fraction(0), I, 1 - I, Fraction(1)}
    return sorted(v for v in values if 0 <= v <= 1 and (v <= I or v >= 1 - I))


def _scale(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


class _CycleSearch:
    """Exact min of J over the admissible grid, with integer arithmetic."""

    # (u, v, kind): kind "abs" -> |u - v|, "sum" -> |u + v - 1|, "sig" -> 0 if |u - v| <= S
    EDGES = (
        ("m1", "n1", "abs"),
        ("n1", "n2", "sig"),
        ("n2", "m2", "abs"),
        ("m2", "m4", "sig"),
        ("m4", "n4", "sum"),
        ("n4", "n3", "sig"),
        ("n3", "m3", "abs"),
        ("m3", "m1", "sig"),
    )

    def __init__(self, values: np.ndarray, scale: int, s_int: int):
        self.values = values
        self.scale = scale
        self.s_int = s_int

    def _cost(self, u: np.ndarray, v: np.ndarray, kind: str) -> np.ndarray:
        du = u[:, None]
        dv = v[None, :]
        if kind == "abs":
            return np.abs(du - dv)
        if kind == "sum":
            return np.abs(du + dv - self.scale)
        return np.where(np.abs(du - dv) <= self.s_int, 0, _INF)

    def min_j(self, domains: dict[str, np.ndarray]) -> int:
        acc = None
        for u, v, kind in self.EDGES:
            cost = self._cost(domains[u], domains[v], kind)
            if acc is None:
                acc = cost
            else:
                acc = np.minimum((acc[:, :, None] + cost[None, :, :]).min(axis=1), _INF)
        return int(np.diagonal(acc).min())

    def argmin(self) -> tuple[int, dict[str, int]]:
        full = {name: self.values for name in _VARS}
        best = self.min_j(full)
        fixed = dict(full)
        chosen = {}
        for name in _VARS:
            for v in fixed[name]:
                trial = dict(fixed)
                trial[name] = np.array([v])
                if self.min_j(trial) == best:
                    fixed = trial
                    chosen[name] = int(v)
                    break
            else:  # pragma: no cover - the minimum is always realizable
                raise InvariantBreach(f"no value of {name} attains J={best}")
        return best, chosen


def _exhaustive(values: np.ndarray, scale: int, s_int: int, threads: int | None) -> tuple[int, dict[str, int]]:
    v = values
    pairs = np.array([(a, b) for a in v for b in v if abs(a - b) <= s_int], dtype=np.int64)
    # pairs are lexicographic; blocks: (m1,m3), (m2,m4), (n1,n2), (n3,n4)
    m24, n12, n34 = pairs, pairs, pairs

    t2 = np.abs(m24[:, 0][:, None] - n12[:, 1][None, :])               # |m2 - n2| [a, b]
    t4 = np.abs(m24[:, 1][:, None] + n34[:, 1][None, :] - scale)       # |m4 + n4 - 1| [a, c]

    def one(outer: int):
        m1, m3 = pairs[outer]
        t1 = np.abs(m1 - n12[:, 0])                                    # [b]
        t3 = np.abs(m3 - n34[:, 0])                                    # [c]
        J = t2[:, :, None] + t4[:, None, :] + t1[None, :, None] + t3[None, None, :]
        best = int(J.min())
        hits = np.argwhere(J == best)
        cands = [
            (int(m1), int(m24[a, 0]), int(m3), int(m24[a, 1]),
             int(n12[b, 0]), int(n12[b, 1]), int(n34[c, 0]), int(n34[c, 1]))
            for a, b, c in hits
        ]
        return best, min(cands)

    idx = range(len(pairs))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, idx))
    else:
        parts = [one(i) for i in idx]
    best = min(p[0] for p in parts)
    witness = min(p[1] for p in parts if p[0] == best)
    return best, dict(zip(_VARS, witness))


def brute_force_max(
    I: float,
    S: float,
    grid_step: float = DEFAULT_STEP,
    endpoints: bool = True,
    method: str = "pruned",
    threads: int | None = None,
) -> OracleReport:
    """Maximize the single-lambda CHSH value over the admissible marginal grid."""
    Iq, Sq, step = exact(I), exact(S), exact(grid_step)
    if not 0 <= Iq <= Fraction(1, 2):
        raise ValueError(f"I must lie in [0, 1/2], got {I!r}")
    if not 0 <= Sq <= 1:
        raise ValueError(f"S must lie in [0, 1], got {S!r}")
    if step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step!r}")

    grid = _grid(Iq, step, endpoints)
    if not grid:  # pragma: no cover - 0 is always admissible
        raise ValueError("empty admissible grid")
    scale = _scale(grid + [Sq])
    values = np.array([int(v * scale) for v in grid], dtype=np.int64)
    s_int = int(Sq * scale)

    if method == "pruned":
        j_int, chosen = _CycleSearch(values, scale, s_int).argmin()
    elif method == "exhaustive":
        j_int, chosen = _exhaustive(values, scale, s_int, threads)
    else:
        raise ValueError(f"unknown method {method!r}")

    m = tuple(Fraction(chosen[k], scale) for k in ("m1", "m2", "m3", "m4"))
    n = tuple(Fraction(chosen[k], scale) for k in ("n1", "n2", "n3", "n4"))
    e, params = e_max_given_marginals(m, n)
    if e != 4 - 2 * Fraction(j_int, scale):
        raise InvariantBreach("witness does not reproduce the searched minimum of J")
    B = bound_B(Iq, Sq)
    gap = B - e
    return OracleReport(
        I=float(Iq),
        S=float(Sq),
        max_E=float(e),
        argmax=params,
        analytic_B=float(B),
        gap=float(gap),
        grid_step=float(step),
        endpoints=endpoints,
        grid_size=len(grid),
        method=method,
    )


def verify_tightness(
    I_grid: Iterable[float],
    S_grid: Iterable[float],
    grid_step: float = DEFAULT_STEP,
    endpoints: bool = True,
    threads: int | None = None,
) -> list[OracleReport]:
    """Run the oracle on every (I, S) cell and check 0 <= gap <= 4 * grid_step."""
    cells = list(itertools.product(list(I_grid), list(S_grid)))
    tol = 4 * float(grid_step)

    def run(cell):
        return brute_force_max(cell[0], cell[1], grid_step, endpoints)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, cells))
    else:
        reports = [run(c) for c in cells]
    for r in reports:
        if r.gap < -1e-9:
            raise InvariantBreach(f"oracle exceeds B at I={r.I}, S={r.S}: {r.max_E} > {r.analytic_B}")
        if r.gap > tol:
            raise InvariantBreach(f"bound not approached at I={r.I}, S={r.S}: gap {r.gap} > {tol}")
    return reports


def argmax_to_model(params: BoxParams) -> LambdaModel:
    """Single-lambda model realizing an oracle witness."""
    params.check_positivity()
    return single_lambda_model(params.dists(), label="oracle-witness")

