import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdlab.errors import DomainError, NoSignalError
from qkdlab.estimator import (
    DecoyParams,
    ErrorSet,
    GainSet,
    binary_entropy,
    e1_upper,
    estimate,
    gain_from_yields,
    key_rate,
    leak_ec,
    poisson_pmf,
    y1_lower,
)
from qkdlab.attacks import YieldProfile, usd_yield_profile

# Frozen from tests/oracles.py at 40 digits.
H_011 = 0.49991595816452800
PMF_3_644 = 0.07106403913036974
Q_USD_644 = 0.6146014077010098


class TestDecoyParams:
    def test_valid(self):
        p = DecoyParams(0.5, 0.1)
        assert (p.mu, p.nu) == (0.5, 0.1)

    @pytest.mark.parametrize("mu,nu", [(0.1, 0.1), (0.1, 0.2), (0.5, 0.0), (0.5, -0.1)])
    def test_rejects_bad_ordering(self, mu, nu):
        with pytest.raises(DomainError):
            DecoyParams(mu, nu)

    def test_atypical_warns(self):
        with pytest.warns(UserWarning, match="atypical"):
            DecoyParams(2.0, 0.5)


class TestSimpleTypes:
    def test_gainset_range(self):
        with pytest.raises(DomainError):
            GainSet(1.2, 0.1)
        with pytest.raises(DomainError):
            GainSet(0.1, -0.1)

    def test_errorset_range(self):
        assert ErrorSet().e_0 == 0.5
        with pytest.raises(DomainError):
            ErrorSet(e_nu=0.6)


class TestBinaryEntropy:
    def test_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_bb84_qber_limit(self):
        assert binary_entropy(0.11) == pytest.approx(H_011, abs=1e-14)

    @pytest.mark.parametrize("x", [-0.01, 1.01])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            binary_entropy(x)

    def test_symmetric_on_dense_grid(self):
        for x in np.linspace(0, 1, 10001):
            assert abs(binary_entropy(x) - binary_entropy(1 - x)) < 1e-12

    @given(st.floats(0, 1))
    def test_bounded(self, x):
        assert 0.0 <= binary_entropy(x) <= 1.0


class TestPoissonPmf:
    def test_zero(self):
        assert poisson_pmf(0, 2.0) == pytest.approx(math.exp(-2), rel=1e-14)

    def test_direct(self):
        assert poisson_pmf(3, 6.44) == pytest.approx(PMF_3_644, rel=1e-13)

    def test_far_tail_is_finite(self):
        v = poisson_pmf(600, 20.0)
        assert 0.0 <= v < 1e-8
        # log-space keeps it finite rather than nan/inf
        assert math.isfinite(v)

    def test_large_mean(self):
        v = poisson_pmf(np.arange(601), 50.0)
        assert np.all(np.isfinite(v))
        assert v.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_mean(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_pmf(4, 0.0) == 0.0

    def test_negative_mean(self):
        with pytest.raises(DomainError):
            poisson_pmf(1, -1.0)

    @pytest.mark.parametrize("mean", [0.1, 1.0, 6.44, 20.0])
    def test_normalised(self, mean):
        assert abs(poisson_pmf(np.arange(601), mean).sum() - 1.0) < 1e-8


class TestGainFromYields:
    def test_unit_yields(self):
        assert gain_from_yields(np.ones(601), 6.44) == pytest.approx(1.0, abs=1e-8)

    def test_zero_yields(self):
        assert gain_from_yields(np.zeros(601), 6.44) == 0.0

    def test_usd_series(self):
        assert abs(gain_from_yields(usd_yield_profile(), 6.44) - Q_USD_644) < 1e-8

    def test_n_max_too_large(self):
        with pytest.raises(DomainError):
            gain_from_yields(np.zeros(10), 1.0, n_max=20)

    @given(st.floats(0.0, 20.0), st.integers(0, 2**32 - 1))
    def test_truncation_stable(self, mean, seed):
        rng = np.random.default_rng(seed)
        y = rng.random(701)
        y[0] = 0.0
        prof = YieldProfile(y)
        assert abs(gain_from_yields(prof, mean, 600) - gain_from_yields(prof, mean, 700)) < 1e-10


class TestY1Lower:
    P = DecoyParams(0.5, 0.1)

    def test_threshold_condition_gives_zero(self):
        mu, nu = self.P.mu, self.P.nu
        q_mu = 0.2
        q_nu = (nu * nu) / (mu * mu) * q_mu * math.exp(mu) / math.exp(nu)
        assert y1_lower(GainSet(q_mu, q_nu, 0.0), self.P) == pytest.approx(0.0, abs=1e-15)

    def test_zero_gains(self):
        assert y1_lower(GainSet(0.0, 0.0, 0.0), self.P) == 0.0

    @pytest.mark.parametrize("field,sign", [("q_nu", 1), ("q_mu", -1), ("q_0", -1)])
    def test_linear_with_expected_sign(self, field, sign):
        base = dict(q_mu=0.3, q_nu=0.1, q_0=0.01)
        h = 1e-4
        f0 = y1_lower(GainSet(**base), self.P)
        slopes = []
        for k in (1, 2):
            bumped = dict(base, **{field: base[field] + k * h})
            slopes.append((y1_lower(GainSet(**bumped), self.P) - f0) / (k * h))
        assert slopes[0] == pytest.approx(slopes[1], rel=1e-6)
        assert np.sign(slopes[0]) == sign

    def test_may_be_negative(self):
        assert y1_lower(GainSet(0.5, 0.001, 0.0), self.P) < 0


class TestE1Upper:
    P = DecoyParams(0.5, 0.1)

    def test_noiseless(self):
        b = e1_upper(GainSet(0.3, 0.05, 0.0), ErrorSet(0.0, 0.5), 0.1, self.P)
        assert b.value == 0.0 and not b.vacuous

    def test_vacuous(self):
        b = e1_upper(GainSet(0.3, 0.05, 0.0), ErrorSet(0.01), 0.0, self.P)
        assert b.vacuous and b.value is None

    def test_capped(self):
        b = e1_upper(GainSet(0.3, 0.036, 0.0), ErrorSet(0.02), 0.01, self.P)
        assert b.raw == pytest.approx(0.7957230610144662, rel=1e-13)
        assert b.capped and b.value == 0.5


class TestKeyRate:
    def test_perfect(self):
        assert key_rate(0.2, 0.2, 0.0, 0.0).raw == 1.0

    def test_no_single_photons(self):
        r = key_rate(0.0, 0.2, 0.0, 0.3)
        assert r.raw == -0.3 and r.clamped == 0.0

    def test_mixed(self):
        r = key_rate(0.1, 0.2, 0.11, 0.3)
        assert r.raw == pytest.approx(-0.04995797908226399, abs=1e-14)
        assert r.clamped == 0.0

    def test_no_signal(self):
        with pytest.raises(NoSignalError):
            key_rate(0.1, 0.0, 0.0, 0.0)

    def test_leak_helper(self):
        assert leak_ec(0.11, 1.2) == pytest.approx(1.2 * H_011)


class TestEstimate:
    def test_q1_definition(self):
        p = DecoyParams(0.5, 0.1)
        est = estimate(GainSet(0.3, 0.07, 0.0), p)
        assert est.q1 == est.y1_lower * 0.5 * math.exp(-0.5)

    def test_negative_bound_clamped(self):
        p = DecoyParams(0.5, 0.1)
        est = estimate(GainSet(0.5, 0.001, 0.0), p, leak=0.1)
        assert est.y1_lower < 0
        assert est.e1_upper is None
        # vacuous bound -> worst-case E1 = 0.5 -> nothing left but the leak
        assert est.key_rate_raw == pytest.approx(-0.1) and est.key_rate == 0.0
