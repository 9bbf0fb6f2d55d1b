import math

import numpy as np
import pytest

from conftest import SIGMA
from qubitsim.geometry import Z_AXIS, planar_axis, rabi_rotation
from qubitsim.inequalities import (
    OPTIMAL_CHSH_ANGLES,
    CorrelatorEstimate,
    chsh,
    correlator_oracle,
    lg_k3,
    lg_k3_oracle,
    pe_correlator,
    protocol_chsh,
    two_time_correlator,
)
from qubitsim.stats import Estimate, sigma_distance

N = 1_000_000


class TestCorrelatorOracles:
    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 9))
    def test_quantum_is_cosine(self, theta):
        c = two_time_correlator("quantum", Z_AXIS, rabi_rotation(theta))
        assert c.mean == pytest.approx(math.cos(theta), abs=1e-12)
        assert c.stderr == 0.0

    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 9))
    def test_model1_is_linear(self, theta):
        assert correlator_oracle("model1", Z_AXIS, planar_axis(theta)) == pytest.approx(1 - 2 * theta / math.pi, abs=1e-12)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            two_time_correlator("model9", Z_AXIS, rabi_rotation(1.0))
        with pytest.raises(ValueError):
            correlator_oracle("model9", Z_AXIS, Z_AXIS)

    def test_model2_monte_carlo(self):
        c = two_time_correlator("model2", Z_AXIS, rabi_rotation(math.pi / 3), N, seed=3)
        assert sigma_distance(c.estimate, 0.5) <= SIGMA

    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            CorrelatorEstimate(1.5, 0.01, 100)


class TestK3:
    def test_zero_angle(self):
        for model in ("model1", "model2"):
            assert lg_k3(model, Z_AXIS, 0.0, 10_000).value == 1.0

    def test_oracles(self):
        assert lg_k3_oracle("quantum", math.pi / 3) == pytest.approx(1.5, abs=1e-12)
        for theta in np.linspace(0, math.pi / 2, 7):
            assert lg_k3_oracle("model1", theta) == pytest.approx(1.0, abs=1e-12)
        for theta in np.linspace(math.pi / 2, math.pi, 7):
            assert lg_k3_oracle("model1", theta) == pytest.approx(5 - 8 * theta / math.pi, abs=1e-12)

    def test_quantum_maximum_by_grid_search(self):
        thetas = np.linspace(0, math.pi, 100_001)
        k = 2 * np.cos(thetas) - np.cos(2 * thetas)
        assert thetas[np.argmax(k)] == pytest.approx(math.pi / 3, abs=1e-4)
        assert k.max() == pytest.approx(1.5, abs=1e-9)

    def test_model2_violation(self):
        k = lg_k3("model2", Z_AXIS, math.pi / 3, N, seed=4)
        assert sigma_distance(k.estimate, 1.5) <= SIGMA
        assert (k.value - 1.0) / k.stderr >= 10

    @pytest.mark.parametrize("theta", np.linspace(0, math.pi, 20))
    def test_model1_respects_bound(self, theta):
        k = lg_k3("model1", Z_AXIS, float(theta), 200_000, seed=6)
        assert k.value <= 1.0 + SIGMA * k.stderr + 1e-12
        assert abs(k.value - lg_k3_oracle("model1", theta)) <= SIGMA * k.stderr + 1e-12

    def test_theta_range(self):
        with pytest.raises(ValueError):
            lg_k3("model1", Z_AXIS, -0.1, 10)


class TestCHSH:
    def test_all_ones(self):
        one = Estimate(1.0, 0.0, 1)
        assert chsh(one, one, one, one).mean == 2.0

    def test_oracle_at_optimal_angles(self):
        a = {k: planar_axis(v) for k, v in OPTIMAL_CHSH_ANGLES.items()}
        s = (
            pe_correlator(a["a"], a["b"])
            + pe_correlator(a["a"], a["b_prime"])
            + pe_correlator(a["a_prime"], a["b"])
            - pe_correlator(a["a_prime"], a["b_prime"])
        )
        assert s == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_protocol_reaches_tsirelson(self):
        res = protocol_chsh("reduced", N, seed=5)
        assert res.oracle == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert sigma_distance(res.s, res.oracle) <= SIGMA
        assert res.s.mean > 2.0 + 10 * res.s.stderr
