"""Singlet-state models: quantum statistics, the Toner-Bacon protocol and their mixtures.

Random numbers come from numpy's PCG64 seeded through
``SeedSequence([seed, chunk_index])``.  Monte Carlo work is cut into chunks
of ``CHUNK`` samples, each with its own derived stream, and only integer
counts are reduced, so estimates do not depend on the thread count.
Uniform sphere points are normalized triples of standard normal draws
(``Generator.standard_normal``), drawn as ``(n, 2, 3)`` blocks for the two
hidden vectors.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .info import binary_entropy, channel_capacity
from .measures import grid_indeterminism, grid_signalling
from .model import InvariantBreach, JointDistribution

__all__ = [
    "CHSH_ANGLES",
    "GridModel",
    "MixtureSpec",
    "SpinSetting",
    "TBHidden",
    "chsh_settings",
    "conjecture_scan",
    "estimate_chsh",
    "estimate_correlator",
    "mixture_dist",
    "mixture_grid_dists",
    "mixture_measures",
    "one_bit_mixture_model",
    "perturb_model",
    "qm_chsh",
    "qm_singlet_dist",
    "sample_hidden",
    "singlet_grid",
    "tb_outcomes",
    "tb_outcomes_batch",
]

CHUNK = 1 << 16
UNIT_TOL = 1e-9
BEHAVIOR_TOL = 1e-6
COUNTEREXAMPLE_TOL = 1e-6
CONFIRM_TOL = 1e-9

# first observer (X, X'), second observer (Y, Y'), degrees in the x-y plane
CHSH_ANGLES = ((0.0, 90.0), (225.0, 135.0))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("RELAXEDBELL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SpinSetting:
    direction: tuple[float, float, float]

    def __post_init__(self) -> None:
        d = tuple(float(v) for v in self.direction)
        if len(d) != 3:
            raise ValueError("spin direction needs three components")
        norm = math.sqrt(math.fsum(v * v for v in d))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"spin direction {d} is not a unit vector (norm {norm!r})")
        object.__setattr__(self, "direction", d)

    @classmethod
    def from_angle(cls, degrees: float) -> "SpinSetting":
        t = math.radians(degrees)
        return cls((math.cos(t), math.sin(t), 0.0))

    @classmethod
    def normalized(cls, v: Sequence[float]) -> "SpinSetting":
        v = np.asarray(v, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.direction)


def _cos(x: SpinSetting, y: SpinSetting) -> float:
    if x.direction == y.direction:
        return 1.0
    return float(np.clip(np.dot(x.vector, y.vector), -1.0, 1.0))


def chsh_settings(angles=CHSH_ANGLES) -> tuple[list[SpinSetting], list[SpinSetting]]:
    first, second = angles
    return [SpinSetting.from_angle(a) for a in first], [SpinSetting.from_angle(b) for b in second]


@dataclass(frozen=True)
class TBHidden:
    lambda1: tuple[float, float, float]
    lambda2: tuple[float, float, float]

    def __post_init__(self) -> None:
        for v in (self.lambda1, self.lambda2):
            if abs(math.sqrt(sum(c * c for c in v)) - 1.0) > UNIT_TOL:
                raise ValueError("hidden vectors must be unit vectors")


@dataclass(frozen=True)
class MixtureSpec:
    """Weight ``w`` on the Toner-Bacon component, ``1 - w`` on the quantum one."""

    w: float

    def __post_init__(self) -> None:
        if not 0.0 <= float(self.w) <= 1.0:
            raise ValueError(f"w must lie in [0, 1], got {self.w!r}")


def _w(spec) -> float:
    return float(spec.w if isinstance(spec, MixtureSpec) else MixtureSpec(spec).w)


def qm_singlet_dist(x: SpinSetting, y: SpinSetting) -> JointDistribution:
    """(1 - ab x.y)/4 over (++, +-, -+, --)."""
    c = _cos(x, y)
    same = (1.0 - c) / 4.0
    diff = (1.0 + c) / 4.0
    return JointDistribution((same, diff, diff, same))


def singlet_grid(first: Sequence[SpinSetting], second: Sequence[SpinSetting]) -> np.ndarray:
    """Quantum singlet behavior on a setting grid, shape ``(nx, ny, 4)``."""
    return np.array([[qm_singlet_dist(x, y).probs for y in second] for x in first])


def qm_chsh(first: Sequence[SpinSetting] | None = None, second: Sequence[SpinSetting] | None = None) -> float:
    """Analytic CHSH value of the singlet at two settings per side."""
    if first is None or second is None:
        first, second = chsh_settings()
    e = [[-_cos(x, y) for y in second] for x in first]
    return e[0][0] + e[1][0] + e[0][1] - e[1][1]


def _sgn(v):
    # sgn(0) = +1, including -0.0
    return np.where(v >= 0.0, 1, -1).astype(np.int8)


def tb_outcomes_batch(x: np.ndarray, y: np.ndarray, l1: np.ndarray, l2: np.ndarray):
    """Toner-Bacon outcomes for hidden-vector arrays ``l1``, ``l2`` of shape ``(N, 3)``.

    a = -sgn(x.l1); the one communicated bit is c = sgn(x.l1) sgn(x.l2);
    b = sgn(y.l1 + c y.l2).
    """
    sx1 = _sgn(l1 @ x)
    sx2 = _sgn(l2 @ x)
    a = -sx1
    c = sx1 * sx2
    b = _sgn(l1 @ y + c * (l2 @ y))
    return a, b


def tb_outcomes(x: SpinSetting, y: SpinSetting, h: TBHidden) -> tuple[int, int]:
    a, b = tb_outcomes_batch(
        x.vector, y.vector, np.array([h.lambda1]), np.array([h.lambda2])
    )
    return int(a[0]), int(b[0])


def sample_hidden(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    g = rng.standard_normal((n, 2, 3))
    g /= np.linalg.norm(g, axis=2, keepdims=True)
    return g[:, 0, :], g[:, 1, :]


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk])))


def _slot(a, b):
    return np.where(a > 0, 0, 2) + np.where(b > 0, 0, 1)


def mixture_dist(spec, x: SpinSetting, y: SpinSetting, h: TBHidden) -> JointDistribution:
    w = _w(spec)
    a, b = tb_outcomes(x, y, h)
    q = qm_singlet_dist(x, y).probs
    point = [0.0] * 4
    point[int(_slot(a, b))] = 1.0
    return JointDistribution(tuple(w * p + (1.0 - w) * qq for p, qq in zip(point, q)))


def mixture_grid_dists(
    spec, first: Sequence[SpinSetting], second: Sequence[SpinSetting], l1: np.ndarray, l2: np.ndarray
) -> np.ndarray:
    """Mixture distributions for every hidden sample and setting pair, ``(K, nx, ny, 4)``."""
    w = _w(spec)
    K = l1.shape[0]
    out = np.empty((K, len(first), len(second), 4))
    for i, x in enumerate(first):
        for j, y in enumerate(second):
            a, b = tb_outcomes_batch(x.vector, y.vector, l1, l2)
            point = np.zeros((K, 4))
            point[np.arange(K), _slot(a, b)] = 1.0
            out[:, i, j] = w * point + (1.0 - w) * np.array(qm_singlet_dist(x, y).probs)
    return out


def mixture_measures(
    spec,
    samples: int = 512,
    seed: int = 0,
    settings: tuple[Sequence[SpinSetting], Sequence[SpinSetting]] | None = None,
) -> tuple[float, float]:
    """Return (I, S) = ((1 - w)/2, w) after confirming them on sampled hidden variables.

    Raises ``InvariantBreach`` if the sampled marginal extremes or shifts disagree.
    """
    w = _w(spec)
    I, S = (1.0 - w) / 2.0, w
    first, second = settings if settings is not None else chsh_settings()
    l1, l2 = sample_hidden(_chunk_rng(seed, 0), samples)
    dists = mixture_grid_dists(w, first, second, l1, l2)
    I_emp = max(grid_indeterminism(dists, 1), grid_indeterminism(dists, 2))
    S_emp = max(grid_signalling(dists, "1to2"), grid_signalling(dists, "2to1"))
    if abs(I_emp - I) > CONFIRM_TOL or abs(S_emp - S) > CONFIRM_TOL:
        raise InvariantBreach(
            f"mixture w={w}: sampled (I, S) = ({I_emp}, {S_emp}) but expected ({I}, {S})"
        )
    return I, S


def _count_chunk(seed: int, chunk: int, n: int, x: np.ndarray, y: np.ndarray) -> int:
    l1, l2 = sample_hidden(_chunk_rng(seed, chunk), n)
    a, b = tb_outcomes_batch(x, y, l1, l2)
    return int(np.count_nonzero(a == b))


def _agree_count(x: SpinSetting, y: SpinSetting, samples: int, seed: int, threads: int | None) -> int:
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    xv, yv = x.vector, y.vector
    jobs = list(enumerate(sizes))
    threads = threads or default_threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda job: _count_chunk(seed, job[0], job[1], xv, yv), jobs))
    else:
        counts = [_count_chunk(seed, k, n, xv, yv) for k, n in jobs]
    return sum(counts)


def estimate_correlator(
    spec, x: SpinSetting, y: SpinSetting, samples: int, seed: int, threads: int | None = None
) -> tuple[float, float]:
    """Monte Carlo estimate of <ab> for the mixture, with its standard error.

    The quantum part is averaged analytically (it does not depend on the hidden
    variable); only the Toner-Bacon part is sampled.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    w = _w(spec)
    agree = _agree_count(x, y, samples, seed, threads)
    mean_ab = (2 * agree - samples) / samples
    q = -_cos(x, y)
    E = q + w * (mean_ab - q)
    if samples > 1:
        var_ab = samples / (samples - 1) * max(0.0, 1.0 - mean_ab * mean_ab)
    else:
        var_ab = 0.0
    return E, w * math.sqrt(var_ab / samples)


def estimate_chsh(
    spec,
    first: Sequence[SpinSetting] | None = None,
    second: Sequence[SpinSetting] | None = None,
    samples: int = 1_000_000,
    seed: int = 0,
    threads: int | None = None,
) -> tuple[float, float, list[tuple[float, float]]]:
    """CHSH value from four correlator estimates; returns (value, stderr, per-pair estimates)."""
    if first is None or second is None:
        first, second = chsh_settings()
    est = [
        estimate_correlator(spec, first[i], second[j], samples, seed, threads)
        for i, j in ((0, 0), (1, 0), (0, 1), (1, 1))
    ]
    value = est[0][0] + est[1][0] + est[2][0] - est[3][0]
    err = math.sqrt(sum(e[1] ** 2 for e in est))
    return value, err, est


# --- finite models on a setting grid -------------------------------------------------


@dataclass
class GridModel:
    """Setting-independent weights ``(L,)`` and conditional distributions ``(L, nx, ny, 4)``."""

    weights: np.ndarray
    dists: np.ndarray

    def behavior(self) -> np.ndarray:
        return np.einsum("l,lxyk->xyk", self.weights, self.dists)

    def active(self) -> np.ndarray:
        return self.dists[self.weights > 0.0]

    def measures(self) -> dict:
        d = self.active()
        i1, i2 = grid_indeterminism(d, 1), grid_indeterminism(d, 2)
        s12, s21 = grid_signalling(d, "1to2"), grid_signalling(d, "2to1")
        return {"I1": i1, "I2": i2, "I": max(i1, i2), "S_1to2": s12, "S_2to1": s21, "S": max(s12, s21)}

    def is_valid(self, tol: float = 1e-9) -> bool:
        return bool(
            np.all(self.weights >= 0.0)
            and abs(self.weights.sum() - 1.0) <= tol
            and np.all(self.dists >= -1e-12)
            and np.all(np.abs(self.dists.sum(axis=-1) - 1.0) <= tol)
        )

    def copy(self) -> "GridModel":
        return GridModel(self.weights.copy(), self.dists.copy())


def one_bit_mixture_model(
    w: float, first: Sequence[SpinSetting], second: Sequence[SpinSetting]
) -> GridModel:
    """Finite model reproducing the singlet exactly on the grid, with I = (1 - w)/2 and S = w.

    Each lambda is a pair (a, u): the first observer outputs a = +/-1 for every
    setting, the second outputs +1 iff u < (1 - a x.y)/2, a one-bit signalling
    strategy.  Cutting u at every threshold gives finitely many cells, and
    each lambda's distribution is ``w * point + (1 - w) * quantum``.
    """
    w = _w(w)
    cosm = np.array([[_cos(x, y) for y in second] for x in first])
    q = singlet_grid(first, second)
    weights, dists = [], []
    for a in (1, -1):
        t = (1.0 - a * cosm) / 2.0
        cuts = np.unique(np.concatenate([[0.0, 1.0], np.clip(t.ravel(), 0.0, 1.0)]))
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            b = np.where((lo + hi) / 2.0 < t, 1, -1)
            point = np.zeros(t.shape + (4,))
            slot = _slot(np.full(t.shape, a), b)
            np.put_along_axis(point, slot[..., None], 1.0, axis=-1)
            weights.append(0.5 * (hi - lo))
            dists.append(w * point + (1.0 - w) * q)
    return GridModel(np.array(weights), np.array(dists))


def _zero_sum(rng: np.random.Generator) -> np.ndarray:
    e = rng.standard_normal(4)
    return e - e.mean()


def _room(p: np.ndarray, e: np.ndarray) -> float:
    """Largest t >= 0 with p + t e >= 0."""
    neg = e < 0
    if not neg.any():
        return math.inf
    return float(np.min(p[neg] / -e[neg]))


def perturb_model(model: GridModel, rng: np.random.Generator, moves: int, jitter: bool = False) -> GridModel:
    """Random deformation of conditional distributions that stays valid.

    ``transfer`` and ``split`` moves leave the lambda-averaged behavior
    unchanged; a ``jitter`` move (only when ``jitter`` is set) nudges one
    distribution on its own and usually changes the behavior.
    """
    out = model.copy()
    nx, ny = out.dists.shape[1:3]
    kinds = ["transfer", "split"] + (["jitter"] if jitter else [])
    for _ in range(moves):
        kind = kinds[rng.integers(len(kinds))]
        L = len(out.weights)
        ix, iy = rng.integers(nx), rng.integers(ny)
        e = _zero_sum(rng)
        if kind == "transfer" and L >= 2:
            i, j = rng.choice(L, size=2, replace=False)
            qi, qj = out.weights[i], out.weights[j]
            t_max = min(_room(out.dists[i, ix, iy], e / qi), _room(out.dists[j, ix, iy], -e / qj))
            if not math.isfinite(t_max) or t_max <= 0.0:
                continue
            t = rng.uniform() * t_max
            out.dists[i, ix, iy] += t * e / qi
            out.dists[j, ix, iy] -= t * e / qj
        elif kind == "split":
            i = rng.integers(L)
            p = out.dists[i]
            delta = np.zeros_like(p)
            for sx in range(nx):
                for sy in range(ny):
                    d = _zero_sum(rng)
                    room = min(_room(p[sx, sy], d), _room(p[sx, sy], -d))
                    if math.isfinite(room):
                        delta[sx, sy] = rng.uniform() * room * d
            half = out.weights[i] / 2.0
            out.weights = np.concatenate([out.weights, [half]])
            out.weights[i] = half
            out.dists = np.concatenate([out.dists, (p - delta)[None]], axis=0)
            out.dists[i] = p + delta
        elif kind == "jitter":
            i = rng.integers(L)
            scale = 10.0 ** rng.uniform(-9.0, -2.0)
            room = _room(out.dists[i, ix, iy], e)
            t = min(scale, room if math.isfinite(room) else scale)
            out.dists[i, ix, iy] += t * e
        np.clip(out.dists, 0.0, None, out=out.dists)
    return out


@dataclass
class ScanReport:
    settings: dict
    mixture_family: list
    perturbed: dict
    min_S_plus_2I: float
    min_H_plus_C: float
    counterexample_candidates: list
    seed: int

    def to_dict(self) -> dict:
        return {
            "evidence_only": True,
            "statement": (
                "Finite scan over a restricted model family: it can falsify "
                "S + 2I >= 1 for singlet models but cannot prove it; the range "
                "0 < S < 1/3 remains open."
            ),
            "seed": self.seed,
            "settings": self.settings,
            "mixture_family": self.mixture_family,
            "perturbed": self.perturbed,
            "min_S_plus_2I": self.min_S_plus_2I,
            "min_H_plus_C": self.min_H_plus_C,
            "counterexample_found": bool(self.counterexample_candidates),
            "counterexample_candidates": self.counterexample_candidates,
        }


def _scan_entry(w: float, m: dict) -> dict:
    I, S = min(m["I"], 0.5), min(m["S"], 1.0)
    return {
        "w": w,
        "I": I,
        "S": S,
        "S_plus_2I": S + 2.0 * I,
        "H_plus_C": binary_entropy(I) + channel_capacity(S),
    }


def conjecture_scan(
    w_grid: Sequence[float] | None = None,
    perturbed: int = 1000,
    settings: tuple[Sequence[SpinSetting], Sequence[SpinSetting]] | None = None,
    setting_count: int = 4,
    samples: int = 512,
    seed: int = 0,
    max_moves: int = 24,
    jitter_rate: float = 0.2,
) -> ScanReport:
    """Look for singlet models with S + 2I < 1.

    The Toner-Bacon/quantum mixtures are measured first; then perturbed finite
    models (exact one-bit mixtures, optionally blended across two weights,
    deformed by ``perturb_model``) are kept only if their behavior matches the
    singlet on the setting grid within ``BEHAVIOR_TOL``.
    """
    if w_grid is None:
        w_grid = [k / 10 for k in range(11)]
    w_grid = [float(w) for w in w_grid]
    if settings is None:
        step = 180.0 / setting_count
        settings = (
            [SpinSetting.from_angle(k * step) for k in range(setting_count)],
            [SpinSetting.from_angle(k * step + step / 2.0) for k in range(setting_count)],
        )
    first, second = settings

    family = []
    for w in w_grid:
        I, S = mixture_measures(w, samples=samples, seed=seed)
        family.append(_scan_entry(w, {"I": I, "S": S}))

    target = singlet_grid(first, second)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    admissible, rejected, attempts = [], 0, 0
    max_attempts = max(10 * perturbed, 10)
    while len(admissible) < perturbed and attempts < max_attempts:
        attempts += 1
        w = w_grid[rng.integers(len(w_grid))]
        base = one_bit_mixture_model(w, first, second)
        if rng.uniform() < 0.3:
            w2 = w_grid[rng.integers(len(w_grid))]
            other = one_bit_mixture_model(w2, first, second)
            alpha = rng.uniform(0.05, 0.95)
            base = GridModel(
                np.concatenate([alpha * base.weights, (1.0 - alpha) * other.weights]),
                np.concatenate([base.dists, other.dists]),
            )
        model = perturb_model(base, rng, int(rng.integers(1, max_moves + 1)), jitter=rng.uniform() < jitter_rate)
        deviation = float(np.max(np.abs(model.behavior() - target)))
        if not model.is_valid() or deviation > BEHAVIOR_TOL:
            rejected += 1
            continue
        entry = _scan_entry(w, model.measures())
        entry["deviation"] = deviation
        entry["lambdas"] = int(len(model.weights))
        admissible.append(entry)

    everything = family + admissible
    candidates = [e for e in everything if e["S_plus_2I"] < 1.0 - COUNTEREXAMPLE_TOL]
    high_s = [e for e in admissible if e["S"] >= 1.0 / 3.0]
    summary = {
        "requested": perturbed,
        "attempts": attempts,
        "admissible": len(admissible),
        "rejected": rejected,
        "min_S_plus_2I": min((e["S_plus_2I"] for e in admissible), default=None),
        "min_H_plus_C": min((e["H_plus_C"] for e in admissible), default=None),
        "open_region_models": sum(1 for e in admissible if 0.0 < e["S"] < 1.0 / 3.0),
        "S_at_least_one_third": len(high_s),
        "S_at_least_one_third_all_satisfy": all(e["S_plus_2I"] >= 1.0 - COUNTEREXAMPLE_TOL for e in high_s),
        "max_behavior_deviation": max((e["deviation"] for e in admissible), default=None),
    }
    return ScanReport(
        settings={
            "first": [list(s.direction) for s in first],
            "second": [list(s.direction) for s in second],
        },
        mixture_family=family,
        perturbed=summary,
        min_S_plus_2I=min(e["S_plus_2I"] for e in everything),
        min_H_plus_C=min(e["H_plus_C"] for e in everything),
        counterexample_candidates=candidates,
        seed=seed,
    )
