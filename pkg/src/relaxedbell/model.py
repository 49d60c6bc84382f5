"""Finite hidden-variable models for two-party, two-setting, two-outcome experiments.

Outcomes are labelled +1/-1 and every joint distribution is stored in the
fixed slot order (+,+), (+,-), (-,+), (-,-).  Setting pairs are indexed

    XY < X'Y < XY' < X'Y'

so that index ``j`` (0-based) corresponds to ``p_{j+1}`` in the usual
CHSH bookkeeping.  On disk the pairs are keyed ``XY``, ``XpY``, ``XYp``
and ``XpYp``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

SUM_TOL = 1e-9
NEG_TOL = 1e-12
FREEDOM_TOL = 1e-12

__all__ = [
    "Behavior",
    "InvariantBreach",
    "JointDistribution",
    "LambdaEntry",
    "LambdaModel",
    "Marginals",
    "ModelError",
    "SettingPair",
    "behavior_of",
    "dump_model",
    "load_model",
    "loads_model",
    "marginals",
    "model_from_dict",
    "model_to_dict",
    "single_lambda_model",
    "validate_model",
]


class ModelError(ValueError):
    """Raised when raw model data fails validation.

    ``where`` holds a JSON-path-like location (``lambdas[1].dists.XpY``) and
    ``line`` the 1-based source line when the error comes from JSON parsing.
    """

    def __init__(self, message: str, where: str | None = None, line: int | None = None):
        self.where = where
        self.line = line
        prefix = ""
        if line is not None:
            prefix = f"line {line}: "
        if where:
            prefix += f"{where}: "
        super().__init__(prefix + message)


class InvariantBreach(RuntimeError):
    """An internal consistency check failed; this signals a bug, not bad input."""


class SettingPair(enum.Enum):
    XY = 0
    XpY = 1
    XYp = 2
    XpYp = 3

    @property
    def key(self) -> str:
        return self.name

    @property
    def first(self) -> int:
        """0 for X, 1 for X'."""
        return self.value % 2

    @property
    def second(self) -> int:
        """0 for Y, 1 for Y'."""
        return self.value // 2

    @classmethod
    def from_indices(cls, first: int, second: int) -> "SettingPair":
        return cls(first + 2 * second)

    def __lt__(self, other: "SettingPair") -> bool:
        return self.value < other.value


PAIRS: tuple[SettingPair, ...] = tuple(SettingPair)


@dataclass(frozen=True)
class Marginals:
    m: float
    n: float


@dataclass(frozen=True)
class JointDistribution:
    probs: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != 4:
            raise ModelError(f"expected 4 probabilities, got {len(probs)}")
        for p in probs:
            if not math.isfinite(p):
                raise ModelError(f"non-finite probability {p!r}")
            if p < 0.0:
                raise ModelError(f"negative probability {p!r}")
            if p > 1.0 + SUM_TOL:
                raise ModelError(f"probability {p!r} exceeds 1")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOL:
            raise ModelError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def ingest(cls, values: Sequence[Any]) -> "JointDistribution":
        """Build from raw numbers, zeroing negatives within the ingestion tolerance."""
        if isinstance(values, (str, bytes)) or not isinstance(values, Sequence):
            raise ModelError("distribution must be an array of 4 numbers")
        if len(values) != 4:
            raise ModelError(f"expected 4 probabilities, got {len(values)}")
        probs = []
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ModelError(f"probability {v!r} is not a number")
            v = float(v)
            if -NEG_TOL <= v < 0.0:
                v = 0.0
            probs.append(v)
        return cls(tuple(probs))

    @property
    def marginals(self) -> Marginals:
        return marginals(self)

    def __getitem__(self, i: int) -> float:
        return self.probs[i]

    def __iter__(self):
        return iter(self.probs)


def marginals(dist: JointDistribution) -> Marginals:
    """Probability of outcome +1 for each observer."""
    pp, pm, mp, _ = dist.probs
    return Marginals(m=pp + pm, n=pp + mp)


@dataclass(frozen=True)
class LambdaEntry:
    label: str
    weights: tuple[float, float, float, float]
    dists: tuple[JointDistribution, JointDistribution, JointDistribution, JointDistribution]

    def weight(self, pair: SettingPair) -> float:
        return self.weights[pair.value]

    def dist(self, pair: SettingPair) -> JointDistribution:
        return self.dists[pair.value]

    @property
    def active(self) -> bool:
        return any(w > 0.0 for w in self.weights)


@dataclass(frozen=True)
class LambdaModel:
    lambdas: tuple[LambdaEntry, ...]
    meta: Mapping[str, Any] | None = None

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def freedom_of_choice(self) -> bool:
        """True when every lambda carries the same weight at all four setting pairs."""
        for entry in self.lambdas:
            w = entry.weights
            if max(w) - min(w) > FREEDOM_TOL:
                return False
        return True

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(dists, weights)`` shaped ``(L, 2, 2, 4)`` and ``(L, 2, 2)``.

        Axis 1 is the first observer's setting (X, X'), axis 2 the second's (Y, Y').
        """
        n = len(self.lambdas)
        dists = np.empty((n, 2, 2, 4))
        weights = np.empty((n, 2, 2))
        for k, entry in enumerate(self.lambdas):
            for pair in PAIRS:
                dists[k, pair.first, pair.second] = entry.dists[pair.value].probs
                weights[k, pair.first, pair.second] = entry.weights[pair.value]
        return dists, weights


@dataclass(frozen=True)
class Behavior:
    dists: tuple[JointDistribution, JointDistribution, JointDistribution, JointDistribution]

    def __getitem__(self, pair: SettingPair) -> JointDistribution:
        return self.dists[pair.value]


def _check_weight(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"weight {value!r} is not a number", where)
    value = float(value)
    if not math.isfinite(value) or value < 0.0 or value > 1.0 + SUM_TOL:
        raise ModelError(f"weight {value!r} outside [0, 1]", where)
    return value


def validate_model(raw: Mapping[str, Any]) -> LambdaModel:
    """Validate parsed model data (the JSON object) and return a ``LambdaModel``."""
    if not isinstance(raw, Mapping):
        raise ModelError("model must be a JSON object")
    lambdas = raw.get("lambdas")
    if not isinstance(lambdas, list) or not lambdas:
        raise ModelError("'lambdas' must be a non-empty array", "lambdas")
    entries = []
    for k, item in enumerate(lambdas):
        where = f"lambdas[{k}]"
        if not isinstance(item, Mapping):
            raise ModelError("lambda entry must be an object", where)
        label = item.get("label", str(k))
        if not isinstance(label, str):
            raise ModelError("label must be a string", f"{where}.label")

        if "weights" in item:
            raw_w = item["weights"]
            if not isinstance(raw_w, Mapping):
                raise ModelError("weights must be an object", f"{where}.weights")
            weights = []
            for pair in PAIRS:
                if pair.key not in raw_w:
                    raise ModelError(f"missing setting pair {pair.key}", f"{where}.weights")
                weights.append(_check_weight(raw_w[pair.key], f"{where}.weights.{pair.key}"))
        elif "weight" in item:
            weights = [_check_weight(item["weight"], f"{where}.weight")] * 4
        else:
            raise ModelError("missing 'weights' or 'weight'", where)

        raw_d = item.get("dists")
        if not isinstance(raw_d, Mapping):
            raise ModelError("dists must be an object", f"{where}.dists")
        dists = []
        for pair in PAIRS:
            if pair.key not in raw_d:
                raise ModelError(f"missing setting pair {pair.key}", f"{where}.dists")
            try:
                dists.append(JointDistribution.ingest(raw_d[pair.key]))
            except ModelError as exc:
                raise ModelError(str(exc), f"{where}.dists.{pair.key}") from None
        entries.append(LambdaEntry(label, tuple(weights), tuple(dists)))

    for pair in PAIRS:
        total = math.fsum(e.weights[pair.value] for e in entries)
        if abs(total - 1.0) > SUM_TOL:
            raise ModelError(f"weights for {pair.key} sum to {total!r}, not 1", "lambdas")

    meta = raw.get("meta")
    if meta is not None and not isinstance(meta, Mapping):
        raise ModelError("meta must be an object", "meta")
    return LambdaModel(tuple(entries), dict(meta) if meta is not None else None)


def model_from_dict(raw: Mapping[str, Any]) -> LambdaModel:
    return validate_model(raw)


def single_lambda_model(
    dists: Iterable[Sequence[float]], label: str = "lambda0", meta: Mapping[str, Any] | None = None
) -> LambdaModel:
    """Weight-one model with the four distributions given in ``XY, X'Y, XY', X'Y'`` order."""
    dists = list(dists)
    raw = {
        "lambdas": [
            {
                "label": label,
                "weight": 1.0,
                "dists": {pair.key: list(d) for pair, d in zip(PAIRS, dists)},
            }
        ]
    }
    if meta is not None:
        raw["meta"] = dict(meta)
    return validate_model(raw)


def behavior_of(model: LambdaModel) -> Behavior:
    """Average each setting pair's conditional distributions with that pair's weights."""
    out = []
    for pair in PAIRS:
        acc = [0.0, 0.0, 0.0, 0.0]
        for entry in model.lambdas:
            w = entry.weights[pair.value]
            if w == 0.0:
                continue
            for i, p in enumerate(entry.dists[pair.value].probs):
                acc[i] += w * p
        out.append(JointDistribution(tuple(acc)))
    return Behavior(tuple(out))


def model_to_dict(model: LambdaModel) -> dict[str, Any]:
    lambdas = []
    for entry in model.lambdas:
        item: dict[str, Any] = {"label": entry.label}
        if len(set(entry.weights)) == 1:
            item["weight"] = entry.weights[0]
        else:
            item["weights"] = {pair.key: entry.weights[pair.value] for pair in PAIRS}
        item["dists"] = {pair.key: list(entry.dists[pair.value].probs) for pair in PAIRS}
        lambdas.append(item)
    out: dict[str, Any] = {"lambdas": lambdas}
    if model.meta is not None:
        out["meta"] = dict(model.meta)
    return out


def dump_model(model: LambdaModel, path: str | Path | None = None) -> str:
    """Serialize to the JSON file format; writes to ``path`` when given.

    Floats are written with ``repr`` so a reload is bit-for-bit identical.
    """
    text = json.dumps(model_to_dict(model), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def loads_model(text: str) -> LambdaModel:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return validate_model(raw)


def load_model(path: str | Path) -> LambdaModel:
    """Read and validate a model file.  ``OSError`` propagates for I/O problems."""
    return loads_model(Path(path).read_text())
