"""Entropy and channel-capacity forms of the indeterminism/signalling trade-off.

All quantities are in bits.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "InfoReport",
    "binary_entropy",
    "channel_capacity",
    "info_thresholds",
    "mutual_info_shift",
]

_EPS = 1e-12


def _as_out(x):
    return float(x) if np.ndim(x) == 0 else x


def binary_entropy(p):
    """H(p) = -p log2 p - (1-p) log2 (1-p), with H(0) = H(1) = 0.

    Accepts scalars or arrays.
    """
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise ValueError("binary_entropy needs 0 <= p <= 1")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        hp = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
        hq = np.where(q > 0.0, q * np.log2(np.where(q > 0.0, q, 1.0)), 0.0)
    return _as_out(-(hp + hq) + 0.0)


def channel_capacity(S):
    """Capacity of the binary symmetric channel with crossover (1 - S)/2."""
    S = np.asarray(S, dtype=float)
    if np.any((S < 0.0) | (S > 1.0)):
        raise ValueError("channel_capacity needs 0 <= S <= 1")
    return _as_out(1.0 - binary_entropy((1.0 - S) / 2.0))


def mutual_info_shift(p, S):
    """Information sent by toggling a marginal between p and p + S with equal priors."""
    p = np.asarray(p, dtype=float)
    S = np.asarray(S, dtype=float)
    if np.any(p < 0.0) or np.any(S < 0.0):
        raise ValueError("mutual_info_shift needs p >= 0 and S >= 0")
    if np.any(p + S > 1.0 + _EPS):
        raise ValueError("mutual_info_shift needs p + S <= 1")
    hi = np.minimum(p + S, 1.0)
    mid = np.minimum(p + S / 2.0, 1.0)
    value = binary_entropy(mid) - 0.5 * binary_entropy(p) - 0.5 * binary_entropy(hi)
    return _as_out(value)


@dataclass(frozen=True)
class InfoReport:
    V: float
    H_V: float
    C_V: float
    H_of_I: float | None = None
    C_of_S: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def info_thresholds(V: float, I: float | None = None, S: float | None = None) -> InfoReport:
    """Local random bits H(V/4) and signalling bits 1 - H(V/4) needed for a violation V."""
    if not 0.0 <= V <= 2.0:
        raise ValueError(f"V must lie in [0, 2], got {V!r}")
    h_v = binary_entropy(V / 4.0)
    return InfoReport(
        V=V,
        H_V=h_v,
        C_V=1.0 - h_v,
        H_of_I=None if I is None else binary_entropy(I),
        C_of_S=None if S is None else channel_capacity(S),
    )
