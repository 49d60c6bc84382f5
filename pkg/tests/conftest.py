import numpy as np
import pytest

from relaxedbell.model import PAIRS, validate_model

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Register a pass/fail line for the acceptance summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE.append((name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def _dist_from_marginals(rng, m, n, mode):
    lo, hi = max(0.0, m + n - 1.0), min(m, n)
    if mode == 0:
        c = lo
    elif mode == 1:
        c = hi
    else:
        c = rng.uniform(lo, hi)
    d = [c, m - c, n - c, 1.0 - m - n + c]
    return [max(0.0, v) for v in d]


def random_raw_model(rng: np.random.Generator, structured: bool | None = None, freedom: bool = True):
    """Random model data; ``structured`` models keep marginals near 0/1 so the bound bites."""
    if structured is None:
        structured = bool(rng.integers(2))
    L = int(rng.integers(1, 6))
    weights = rng.dirichlet(np.ones(L))
    lambdas = []
    I0 = rng.uniform(0.0, 0.5)
    for k in range(L):
        dists = {}
        for pair in PAIRS:
            if structured:
                def pick():
                    v = rng.uniform(0.0, I0)
                    return v if rng.integers(2) else 1.0 - v
                d = _dist_from_marginals(rng, pick(), pick(), int(rng.integers(3)))
                if rng.uniform() < 0.2:
                    d = [0.0] * 4
                    d[int(rng.integers(4))] = 1.0
            else:
                d = list(rng.dirichlet(np.ones(4) * rng.choice([0.2, 1.0, 5.0])))
            dists[pair.key] = d
        lambdas.append({"label": f"l{k}", "weight": float(weights[k]), "dists": dists})
    if not freedom:
        for pair in PAIRS:
            w = rng.dirichlet(np.ones(L))
            for k in range(L):
                lambdas[k].setdefault("weights", {})[pair.key] = float(w[k])
        for item in lambdas:
            item.pop("weight")
    return {"lambdas": lambdas}


def random_model(rng, structured=None, freedom=True):
    return validate_model(random_raw_model(rng, structured, freedom))
