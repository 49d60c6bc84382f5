import math

import numpy as np
import pytest

from relaxedbell.info import (
    binary_entropy,
    channel_capacity,
    info_thresholds,
    mutual_info_shift,
)

V_QUANTUM = 2 * math.sqrt(2) - 2


def h_ref(p):
    """Scalar reference with the 0 log 0 = 0 convention."""
    return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)


class TestBinaryEntropy:
    def test_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_quantum_threshold(self):
        # frozen from the scalar reference: h_ref((2*sqrt(2) - 2)/4) = 0.7359159380345968
        assert binary_entropy(V_QUANTUM / 4) == pytest.approx(0.7359159380345968, abs=1e-14)
        assert binary_entropy(V_QUANTUM / 4) == pytest.approx(0.736, abs=1e-3)

    def test_matches_reference(self):
        for p in np.linspace(0, 1, 101):
            assert binary_entropy(p) == pytest.approx(h_ref(p), abs=1e-14)

    def test_array_input(self):
        out = binary_entropy(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_array_equal(out, [0.0, 1.0, 0.0])

    def test_symmetric_and_concave(self):
        p = np.linspace(0, 1, 1001)
        h = binary_entropy(p)
        np.testing.assert_allclose(h, h[::-1], atol=1e-15)
        assert np.all(np.diff(h, 2) <= 1e-12)

    @pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
    def test_range(self, p):
        with pytest.raises(ValueError):
            binary_entropy(p)


class TestCapacity:
    def test_values(self):
        assert channel_capacity(0.0) == 0.0
        assert channel_capacity(1.0) == 1.0
        assert channel_capacity(2 - math.sqrt(2)) == pytest.approx(0.26408406196540324, abs=1e-14)
        assert channel_capacity(2 - math.sqrt(2)) == pytest.approx(0.264, abs=1e-3)

    def test_strictly_increasing(self):
        c = channel_capacity(np.linspace(0, 1, 1001))
        assert np.all(np.diff(c) > 0)

    def test_range(self):
        with pytest.raises(ValueError):
            channel_capacity(1.5)


class TestMutualInfoShift:
    def test_no_shift(self):
        for p in (0.0, 0.2, 0.7, 1.0):
            assert mutual_info_shift(p, 0.0) == 0.0

    def test_at_minimizer(self):
        # 1 - h_ref(0.25) = 0.18872187554086717
        assert mutual_info_shift(0.25, 0.5) == pytest.approx(0.18872187554086717, abs=1e-14)
        assert mutual_info_shift(0.25, 0.5) == pytest.approx(channel_capacity(0.5), abs=1e-14)

    def test_noiseless_bit(self):
        assert mutual_info_shift(0.0, 1.0) == 1.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            mutual_info_shift(0.6, 0.5)

    def test_matches_direct_mutual_information(self):
        # independent route: I(X;B) from the joint table of a uniform bit X and B|X
        rng = np.random.default_rng(5)
        for _ in range(200):
            S = rng.uniform(0, 1)
            p = rng.uniform(0, 1 - S)
            joint = np.array([[0.5 * p, 0.5 * (1 - p)], [0.5 * (p + S), 0.5 * (1 - p - S)]])
            px, pb = joint.sum(1), joint.sum(0)
            mi = sum(
                joint[i, j] * math.log2(joint[i, j] / (px[i] * pb[j]))
                for i in range(2) for j in range(2) if joint[i, j] > 0
            )
            assert mutual_info_shift(p, S) == pytest.approx(mi, abs=1e-12)

    @pytest.mark.parametrize("S", np.round(np.linspace(0.05, 0.95, 19), 2))
    def test_minimum_at_symmetric_point(self, S):
        p = np.arange(0, 1 - S + 1e-12, 1e-3)
        p = p[p + S <= 1]
        values = mutual_info_shift(p, S)
        assert abs(p[np.argmin(values)] - (1 - S) / 2) <= 1e-3
        assert values.min() == pytest.approx(channel_capacity(S), abs=1e-6)


class TestInfoThresholds:
    def test_quantum(self):
        r = info_thresholds(V_QUANTUM)
        assert r.H_V == pytest.approx(0.736, abs=1e-3)
        assert r.C_V == pytest.approx(0.264, abs=1e-3)
        assert r.H_V + r.C_V == 1.0

    def test_extremes(self):
        r = info_thresholds(2.0)
        assert (r.H_V, r.C_V) == (1.0, 0.0)
        r = info_thresholds(0.0)
        assert (r.H_V, r.C_V) == (0.0, 1.0)

    def test_optional_fields(self):
        r = info_thresholds(1.0, I=0.25, S=0.5)
        assert r.H_of_I == binary_entropy(0.25)
        assert r.C_of_S == channel_capacity(0.5)
        assert set(info_thresholds(1.0).to_dict()) == {"V", "H_V", "C_V"}

    def test_capacity_of_s_v_equals_c_v(self):
        for V in np.linspace(0, 2, 21):
            r = info_thresholds(V)
            assert channel_capacity(1 - V / 2) == pytest.approx(r.C_V, abs=1e-14)

    def test_range(self):
        with pytest.raises(ValueError):
            info_thresholds(2.5)
