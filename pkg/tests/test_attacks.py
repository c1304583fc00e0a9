import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerated_usd_yield, inclusion_exclusion_yield, mp_series_gain, mp_tapped_gain
from qkdlab.attacks import (
    PNS3,
    AttackConfig,
    ModifiedUSD,
    YieldProfile,
    attack_gains,
    lda_transform,
    modified_usd_gain_closed,
    modified_usd_yield,
    modified_usd_yield_profile,
    pns3_gain_closed,
    pns3_yield_profile,
    usd_gain_closed,
    usd_yield,
    usd_yield_profile,
)
from qkdlab.errors import DomainError
from qkdlab.estimator import DecoyParams, gain_from_yields, y1_lower

MEANS = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
TAPS = [1.0, 0.5, 0.3, 0.15]


class TestLdaTransform:
    def test_identity(self):
        assert lda_transform(DecoyParams(0.5, 0.1), 1.0) == (0.5, 0.1)

    def test_table_point(self):
        mu_t, nu_t = lda_transform(DecoyParams(0.5, 0.1), 12.88)
        assert mu_t == pytest.approx(6.44) and nu_t == pytest.approx(1.288)

    def test_scaling(self):
        mu_t, nu_t = lda_transform(DecoyParams(0.1, 0.01), 10.0)
        assert mu_t == pytest.approx(1.0) and nu_t == pytest.approx(0.1)

    def test_kappa_below_one(self):
        with pytest.raises(DomainError):
            lda_transform(DecoyParams(0.5, 0.1), 0.9)


class TestUsdYield:
    def test_vacuum(self):
        assert usd_yield(0) == 0.0

    @pytest.mark.parametrize("n", [1, 2])
    def test_too_few_photons(self, n):
        assert usd_yield(n) == 0.0

    def test_three_photons(self):
        assert usd_yield(3) == 0.1875

    @pytest.mark.parametrize("n", range(1, 11))
    def test_matches_enumeration(self, n):
        assert usd_yield(n) == pytest.approx(float(enumerated_usd_yield(n)), abs=1e-15)

    def test_printed_form(self):
        for n in range(1, 30):
            printed = 1 - Fraction(3**n - 1, 2 ** (2 * n - 1))
            assert usd_yield(n) == pytest.approx(float(printed), abs=1e-15)

    def test_asymptote(self):
        assert 0 < 1 - usd_yield(100) < 1e-12

    def test_vectorised(self):
        y = usd_yield(np.arange(65))
        assert y.shape == (65,)
        assert np.all(np.diff(y) >= 0)
        assert np.all((0 <= y) & (y <= 1))

    def test_inclusion_exclusion(self):
        for n in range(1, 65):
            assert usd_yield(n) == float(inclusion_exclusion_yield(n))


class TestModifiedYield:
    def test_untapped(self):
        assert modified_usd_yield(3, 1.0) == 0.1875

    def test_half(self):
        assert modified_usd_yield(3, 0.5) == pytest.approx(3 / 128, rel=1e-15)

    def test_vacuum(self):
        assert modified_usd_yield(0, 0.3) == 0.0

    @pytest.mark.parametrize("t", [0.0, -0.1, 1.1])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            modified_usd_yield(3, t)


class TestClosedGains:
    def test_no_light(self):
        assert usd_gain_closed(0.0) == 0.0
        assert modified_usd_gain_closed(0.0, 0.5) == 0.0

    def test_value(self):
        assert usd_gain_closed(6.44) == pytest.approx(0.6146014077010098, rel=1e-14)

    def test_limit(self):
        assert usd_gain_closed(200.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("m", MEANS)
    def test_t1_consistency(self, m):
        assert modified_usd_gain_closed(m, 1.0) == usd_gain_closed(m)

    @pytest.mark.parametrize("m", MEANS)
    @pytest.mark.parametrize("t", TAPS)
    def test_series_identity(self, m, t):
        series = gain_from_yields(modified_usd_yield_profile(t), m, 600)
        assert abs(modified_usd_gain_closed(m, t) - series) < 1e-8

    @pytest.mark.parametrize("m,t", [(6.44, 1.0), (10.0, 0.15), (2.0, 0.5)])
    def test_against_mpmath(self, m, t):
        assert modified_usd_gain_closed(m, t) == pytest.approx(float(mp_tapped_gain(m, t)), rel=1e-12)
        assert float(mp_series_gain(m, t)) == pytest.approx(float(mp_tapped_gain(m, t)), rel=1e-20)

    def test_strictly_increasing_in_mean(self):
        q = usd_gain_closed(np.linspace(0, 40, 2001))
        assert np.all(np.diff(q) > 0)

    @given(st.floats(0.01, 30.0), st.floats(0.001, 1.0), st.floats(0.001, 1.0))
    def test_nondecreasing_in_t(self, m, t1, t2):
        lo, hi = sorted((t1, t2))
        assert modified_usd_gain_closed(m, lo) <= modified_usd_gain_closed(m, hi) * (1 + 1e-12)

    @pytest.mark.parametrize("m", [1.0, 5.0, 10.0, 15.0])
    def test_small_tap_limit(self, m):
        t = 1e-3
        ratio = modified_usd_gain_closed(m, t) / (t**3 / 32 * math.exp(-m) * m**3)
        assert 0.99 <= ratio <= 1.01


class TestPns3:
    def test_exact_gain(self):
        prof = pns3_yield_profile(1.0)
        for m in (0.5, 3.0, 6.0):
            assert gain_from_yields(prof, m) == pytest.approx(m**3 * math.exp(-m) / 6, rel=1e-12)

    def test_half_yield(self):
        assert pns3_gain_closed(6.0, 0.5) == pytest.approx(0.04461753917999445, rel=1e-13)
        assert gain_from_yields(pns3_yield_profile(0.5), 6.0) == pytest.approx(0.04461753917999445, rel=1e-12)

    def test_profile_shape(self):
        prof = pns3_yield_profile(0.7)
        assert prof[1] == 0.0 and prof[3] == 0.7 and prof[4] == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            pns3_yield_profile(0.0)


class TestYieldProfile:
    def test_vacuum_must_be_zero(self):
        with pytest.raises(DomainError):
            YieldProfile(np.ones(5))

    def test_range(self):
        with pytest.raises(DomainError):
            YieldProfile(np.array([0.0, 1.5]))

    def test_default_length(self):
        assert usd_yield_profile().n_max == 600


class TestAttackConfig:
    @pytest.mark.parametrize(
        "kw", [dict(kappa=0.5), dict(eta_eve=0.0), dict(channel_transmittance=1.5)]
    )
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            AttackConfig(**kw)

    def test_variant_validation(self):
        with pytest.raises(DomainError):
            ModifiedUSD(0.0)
        with pytest.raises(DomainError):
            PNS3(1.2)


class TestAttackGains:
    P = DecoyParams(0.5, 0.1)

    def test_no_lda(self):
        g = attack_gains(self.P, AttackConfig())
        assert g.q_mu == pytest.approx(0.0030540927001201678, rel=1e-13)
        assert g.q_0 == 0.0

    def test_at_threshold(self):
        # 11.155... dB from the high-precision oracle in tests/oracles.py
        kappa = 10 ** (11.15504183046864322 / 10)
        g = attack_gains(self.P, AttackConfig(kappa=kappa))
        lhs = g.q_nu * math.exp(0.1)
        rhs = (0.1**2 / 0.5**2) * g.q_mu * math.exp(0.5)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_tap_blocks_everything(self):
        g = attack_gains(self.P, AttackConfig(variant=ModifiedUSD(1e-9)))
        assert g.q_mu < 1e-25 and g.q_nu < 1e-25

    def test_efficiency_thins_mean(self):
        g = attack_gains(self.P, AttackConfig(kappa=20.0, eta_eve=0.5))
        assert g.q_mu == pytest.approx(usd_gain_closed(5.0))

    def test_table_point_near_zero_bound(self):
        # The published 11.1 dB is the truncated threshold; the bound changes
        # sign between 11.1 and 11.2 dB.
        lo = y1_lower(attack_gains(self.P, AttackConfig(kappa=10**1.11)), self.P)
        hi = y1_lower(attack_gains(self.P, AttackConfig(kappa=10**1.12)), self.P)
        assert lo < 0 < hi
        assert abs(lo) < 1e-2
