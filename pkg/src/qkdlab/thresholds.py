"""
Critical attenuation alteration at which the decoy-state yield bound turns
positive under each attack.

Below the threshold ``Y1_lower < 0`` and the parties abort; above it they
accept a key that Eve holds completely. Numerical thresholds come from a
log-kappa scan followed by Brent's method on the bracketing cell; analytic
thresholds use the small-mean estimate of the sinh ratio by ``(nu/mu)**3``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .attacks import PNS3, ModifiedUSD, StandardUSD, Variant, attack_gains_array
from .errors import DomainError, NoThresholdError
from .estimator import DecoyParams, y1_lower_from

#: Scan grid for bracketing, in dB of kappa.
SCAN_STEP_DB = 0.01
SCAN_MAX_DB = 40.0

#: Parameters closer than this are treated as the removable singularity mu == nu.
DEGENERATE_GAP = 1e-6

#: Required equation-space residual of every numerical root.
RESIDUAL_TOL = 1e-10

#: Attenuation of standard telecom fibre, dB/km.
FIBER_LOSS_DB_PER_KM = 0.2

_LN10_10 = math.log(10.0) / 10.0


class Method(str, enum.Enum):
    NUMERICAL_ROOT = "numerical"
    ANALYTIC_APPROX = "analytic"


@dataclass(frozen=True)
class ThresholdResult:
    """
    Critical attenuation alteration for one attack.

    Attributes
    ----------
    kappa_linear : float
        Threshold as a linear factor.
    method : Method
    variant : StandardUSD, ModifiedUSD or PNS3
    residual : float or None
        Equation residual at the returned root; None for closed forms.
    eta_eve, channel_transmittance : float
        Efficiencies folded in by :func:`realistic_threshold` (1 otherwise).
    """

    kappa_linear: float
    method: Method
    variant: Variant
    residual: Optional[float] = None
    eta_eve: float = 1.0
    channel_transmittance: float = 1.0

    @property
    def kappa_db(self) -> float:
        return db(self.kappa_linear)


def db(kappa: float) -> float:
    return 10.0 * math.log10(kappa)


def from_db(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def truncate_db(value_db: float, decimals: int = 1) -> float:
    """
    Cut a dB value to ``decimals`` places toward zero.

    This is the presentation convention that reproduces the published
    threshold table (11.155 -> 11.1, 17.257 -> 17.2).
    """
    scale = 10.0**decimals
    # guard against 11.1 being stored as 11.0999999...
    return math.trunc(value_db * scale + math.copysign(1e-9, value_db)) / scale


def channel_transmittance_db(loss_db: float) -> float:
    if loss_db < 0:
        raise DomainError("channel loss must be >= 0 dB")
    return 10.0 ** (-loss_db / 10.0)


def fiber_transmittance(length_km: float, loss_db_per_km: float = FIBER_LOSS_DB_PER_KM) -> float:
    return channel_transmittance_db(length_km * loss_db_per_km)


def _check_params(params: DecoyParams) -> None:
    if params.mu - params.nu < DEGENERATE_GAP:
        raise DomainError(
            f"mu and nu too close ({params.mu} vs {params.nu}); threshold is degenerate"
        )


def _log_sinh(x):
    """``log(sinh(x))`` for ``x > 0`` without overflow at large ``x``."""
    return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def _log_usd_lhs(log_kappa, params: DecoyParams, t: float = 1.0):
    """
    Logarithm of the left side of the (tapped) USD threshold equation

        sinh(t k nu/4) sinh^2(t k nu/8) / [sinh(t k mu/4) sinh^2(t k mu/8)]
            * (mu/nu)^2 * exp((k (1 - t/2) - 1)(mu - nu)) = 1

    which at ``t = 1`` is the plain USD equation with exponent ``(k-2)(mu-nu)/2``.
    """
    mu, nu = params.mu, params.nu
    k = np.exp(log_kappa)
    a, b = t * k * nu, t * k * mu
    sinh_part = (_log_sinh(a / 4) + 2 * _log_sinh(a / 8)) - (_log_sinh(b / 4) + 2 * _log_sinh(b / 8))
    return sinh_part + 2.0 * math.log(mu / nu) + (k * (1.0 - t / 2.0) - 1.0) * (mu - nu)


def usd_equation_lhs(kappa: float, params: DecoyParams) -> float:
    """Left side of the standard USD threshold equation; equals 1 at the threshold."""
    return float(np.exp(_log_usd_lhs(math.log(kappa), params)))


def modified_equation_lhs(kappa: float, params: DecoyParams, t: float) -> float:
    """Left side of the tapped-USD threshold equation; equals 1 at the threshold."""
    return float(np.exp(_log_usd_lhs(math.log(kappa), params, t)))


def _scan_root(fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """
    Root in log-kappa of ``fn`` (negative below threshold, positive above).

    Scans [0, SCAN_MAX_DB] at SCAN_STEP_DB for the first upward sign change
    and refines inside that cell.
    """
    n = int(round(SCAN_MAX_DB / SCAN_STEP_DB))
    grid = np.arange(n + 1) * SCAN_STEP_DB * _LN10_10
    vals = fn(grid)
    up = np.nonzero((vals[:-1] <= 0) & (vals[1:] > 0))[0]
    if len(up) == 0:
        raise NoThresholdError(f"no threshold within 0..{SCAN_MAX_DB:g} dB")
    i = up[0]
    if vals[i] == 0:
        return float(grid[i])
    return brentq(lambda x: float(fn(np.asarray(x))), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)


def _numerical(log_kappa: float, variant: Variant, residual: float) -> ThresholdResult:
    if residual >= RESIDUAL_TOL:
        raise NoThresholdError(f"solver residual {residual:.3g} above tolerance")
    return ThresholdResult(math.exp(log_kappa), Method.NUMERICAL_ROOT, variant, residual)


def solve_usd_threshold(params: DecoyParams) -> ThresholdResult:
    """Root of the standard USD transcendental equation."""
    _check_params(params)
    fn = lambda lk: _log_usd_lhs(lk, params)
    lk = _scan_root(fn)
    return _numerical(lk, StandardUSD(), abs(math.expm1(float(fn(lk)))))


def solve_modified_threshold(params: DecoyParams, t: float) -> ThresholdResult:
    """Root of the tapped-USD transcendental equation for transmittance ``t``."""
    _check_params(params)
    variant = ModifiedUSD(t)
    fn = lambda lk: _log_usd_lhs(lk, params, t)
    lk = _scan_root(fn)
    return _numerical(lk, variant, abs(math.expm1(float(fn(lk)))))


def solve_gain_threshold(
    params: DecoyParams, variant: Variant, efficiency: float = 1.0
) -> ThresholdResult:
    """
    Zero of ``Y1_lower`` evaluated on the attack gains, for any variant.

    Independent of the transcendental forms: it goes through the closed-form
    gains and the decoy bound itself. ``efficiency`` thins the means in front
    of Eve's detectors. The residual is ``|Y1_lower|`` at the root.
    """
    _check_params(params)

    def fn(lk):
        q_mu, q_nu = attack_gains_array(params, variant, np.exp(lk), efficiency)
        return y1_lower_from(q_mu, q_nu, 0.0, params)

    lk = _scan_root(fn)
    return _numerical(lk, variant, abs(float(fn(np.asarray(lk)))))


def solve_pns3_threshold(params: DecoyParams, y3: float = 1.0) -> ThresholdResult:
    """
    Root of ``Q_nu e^nu = (nu/mu)^2 Q_mu e^mu`` with 3-photon PNS gains.

    ``y3`` cancels, so the root does not depend on it.
    """
    _check_params(params)
    mu, nu = params.mu, params.nu
    variant = PNS3(y3)

    def log_gain(m):
        # log of y3 m^3 e^{-m} / 6, finite where the gain itself underflows
        return math.log(y3) + 3.0 * np.log(m) - m - math.log(6.0)

    def fn(lk):
        k = np.exp(lk)
        return (log_gain(k * nu) + nu) - (2.0 * math.log(nu / mu) + log_gain(k * mu) + mu)

    lk = _scan_root(fn)
    return _numerical(lk, variant, abs(math.expm1(float(fn(np.asarray(lk))))))


def _log_ratio_term(params: DecoyParams) -> float:
    return math.log(params.mu / params.nu) / (params.mu - params.nu)


def analytic_pns3_threshold(params: DecoyParams) -> ThresholdResult:
    """``1 + ln(mu/nu) / (mu - nu)``; exact for the 3-photon attack."""
    _check_params(params)
    return ThresholdResult(1.0 + _log_ratio_term(params), Method.ANALYTIC_APPROX, PNS3())


def analytic_usd_threshold(params: DecoyParams) -> ThresholdResult:
    """``2 + 2 ln(mu/nu) / (mu - nu)``, twice the 3-photon threshold."""
    _check_params(params)
    return ThresholdResult(
        2.0 * (1.0 + _log_ratio_term(params)), Method.ANALYTIC_APPROX, StandardUSD()
    )


def analytic_modified_threshold(params: DecoyParams, t: float) -> ThresholdResult:
    """``2 kappa_3ph / (2 - t)``; reduces to the USD estimate at ``t = 1``."""
    _check_params(params)
    variant = ModifiedUSD(t)
    return ThresholdResult(
        2.0 * (1.0 + _log_ratio_term(params)) / (2.0 - t), Method.ANALYTIC_APPROX, variant
    )


def realistic_threshold(
    base: ThresholdResult, eta_eve: float = 1.0, channel_transmittance: float = 1.0
) -> ThresholdResult:
    """
    Threshold once Eve's detector efficiency and the channel to her are lossy.

    Every gain depends on ``kappa`` only through ``kappa * eta * mean``, so the
    threshold scales by ``1 / (eta_eve * channel_transmittance)``.
    """
    for name, v in (("eta_eve", eta_eve), ("channel_transmittance", channel_transmittance)):
        if not 0.0 < v <= 1.0:
            raise DomainError(f"{name} must lie in (0, 1], got {v}")
    return replace(
        base,
        kappa_linear=base.kappa_linear / (eta_eve * channel_transmittance),
        eta_eve=base.eta_eve * eta_eve,
        channel_transmittance=base.channel_transmittance * channel_transmittance,
    )
