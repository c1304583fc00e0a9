"""
Weak+vacuum decoy-state estimation.

Poisson photon statistics, the gain series, the lower bound on the
single-photon yield, the upper bound on the single-photon error rate and
the asymptotic secret-key fraction

    l = Q1 / Q_mu * [1 - h(E1)] - leak

The signal and weak decoy have mean photon numbers ``mu`` and ``nu``; the
second decoy is vacuum. Infinite key length and no side channels are
assumed throughout.

Notes
-----
The key fraction is the bare formula above: no sifting factor and no
error-verification cost are applied.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NoSignalError

if TYPE_CHECKING:
    from .attacks import YieldProfile

logger = logging.getLogger(__name__)

#: Default truncation of the photon-number series.
N_MAX = 600

#: Signal/decoy means above these are accepted but flagged as atypical.
MU_TYPICAL_MAX = 1.5
NU_TYPICAL_MAX = 1.0

#: QBER of a binary channel never exceeds one half.
QBER_CAP = 0.5


@dataclass(frozen=True)
class DecoyParams:
    """
    Signal and weak-decoy mean photon numbers.

    Attributes
    ----------
    mu : float
        Signal mean photon number.
    nu : float
        Weak-decoy mean photon number, ``0 < nu < mu``.
    """

    mu: float
    nu: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.nu)):
            raise DomainError("mu and nu must be finite")
        if self.nu <= 0:
            raise DomainError("nu must be > 0")
        if self.nu >= self.mu:
            raise DomainError("nu must be < mu")
        if self.mu > MU_TYPICAL_MAX or self.nu > NU_TYPICAL_MAX:
            warnings.warn(
                f"protocol-atypical decoy intensities mu={self.mu}, nu={self.nu}",
                stacklevel=2,
            )


@dataclass(frozen=True)
class GainSet:
    """Gains of the signal, decoy and vacuum pulses."""

    q_mu: float
    q_nu: float
    q_0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("q_mu", "q_nu", "q_0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class ErrorSet:
    """QBER of the decoy and vacuum pulses."""

    e_nu: float = 0.0
    e_0: float = 0.5

    def __post_init__(self) -> None:
        for name in ("e_nu", "e_0"):
            v = getattr(self, name)
            if not 0.0 <= v <= QBER_CAP:
                raise DomainError(f"{name} must lie in [0, 0.5], got {v}")


@dataclass(frozen=True)
class ErrorBound:
    """
    Outcome of the single-photon QBER bound.

    ``value`` is None when the bound is vacuous (non-positive yield bound);
    otherwise it is the raw bound capped at 0.5 and ``capped`` records
    whether the cap was applied.
    """

    value: Optional[float]
    raw: Optional[float]
    vacuous: bool = False
    capped: bool = False


@dataclass(frozen=True)
class KeyRate:
    raw: float

    @property
    def clamped(self) -> float:
        return max(0.0, self.raw)


@dataclass(frozen=True)
class DecoyEstimate:
    """
    Decoy-state estimates for one set of observed gains.

    Attributes
    ----------
    y1_lower : float
        Raw single-photon yield lower bound; may be negative.
    q1 : float
        ``y1_lower * mu * exp(-mu)``, unclamped.
    e1_upper : float or None
        Single-photon QBER upper bound, None when vacuous.
    key_rate_raw : float
        Key fraction before clamping; ``key_rate`` is ``max(0, raw)``.
    """

    y1_lower: float
    q1: float
    e1_upper: Optional[float]
    key_rate_raw: float

    @property
    def key_rate(self) -> float:
        return max(0.0, self.key_rate_raw)


def binary_entropy(x: float) -> float:
    """Binary entropy in bits with ``h(0) = h(1) = 0``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def poisson_pmf(n, mean):
    """
    Poisson probability ``exp(-mean) * mean**n / n!`` evaluated in log space.

    Accepts scalars or numpy arrays for ``n``.
    """
    if np.any(np.asarray(mean) < 0):
        raise DomainError("Poisson mean must be >= 0")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise DomainError("photon number must be >= 0")
    mean = float(mean)
    if mean == 0.0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        out = np.exp(n_arr * math.log(mean) - mean - gammaln(n_arr + 1))
    return float(out) if out.ndim == 0 else out


def gain_from_yields(
    yields: Union["YieldProfile", Sequence[float], np.ndarray],
    mean: float,
    n_max: Optional[int] = None,
) -> float:
    """
    Truncated gain series ``sum_{n=0}^{n_max} p(n; mean) * Y_n``.

    ``yields`` is a :class:`~qkdlab.attacks.YieldProfile` or a plain
    sequence indexed by photon number.
    """
    y = np.asarray(getattr(yields, "y", yields), dtype=float)
    if n_max is None:
        n_max = min(N_MAX, len(y) - 1)
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if len(y) < n_max + 1:
        raise DomainError(f"yields defined only up to n={len(y) - 1}, need {n_max}")
    n = np.arange(n_max + 1)
    return float(np.dot(poisson_pmf(n, mean), y[: n_max + 1]))


def y1_lower(gains: GainSet, params: DecoyParams):
    """
    Lower bound on the single-photon yield from signal, decoy and vacuum gains.

    The raw value is returned; it goes negative when the observed gains are
    incompatible with an honest channel.
    """
    return y1_lower_from(gains.q_mu, gains.q_nu, gains.q_0, params)


def y1_lower_from(q_mu, q_nu, q_0, params: DecoyParams):
    """Array-friendly form of :func:`y1_lower` taking the three gains directly."""
    mu, nu = params.mu, params.nu
    return (mu / (nu * (mu - nu))) * (
        q_nu * math.exp(nu)
        - (nu * nu) / (mu * mu) * q_mu * math.exp(mu)
        - (mu * mu - nu * nu) / (mu * mu) * q_0
    )


def single_photon_gain(y1: float, params: DecoyParams) -> float:
    return y1 * params.mu * math.exp(-params.mu)


def e1_upper(
    gains: GainSet, errors: ErrorSet, y1_low: float, params: DecoyParams
) -> ErrorBound:
    """Upper bound on the single-photon QBER; vacuous when ``y1_low <= 0``."""
    if y1_low <= 0:
        return ErrorBound(value=None, raw=None, vacuous=True)
    raw = (errors.e_nu * gains.q_nu * math.exp(params.nu) - errors.e_0 * gains.q_0) / (
        params.nu * y1_low
    )
    if raw > QBER_CAP:
        logger.info("single-photon QBER bound %.6g capped at 0.5", raw)
        return ErrorBound(value=QBER_CAP, raw=raw, capped=True)
    return ErrorBound(value=raw, raw=raw)


def key_rate(q1: float, q_mu: float, e1: float, leak: float) -> KeyRate:
    """Secret-key fraction per signal detection; see :class:`KeyRate`."""
    if q_mu <= 0:
        raise NoSignalError("signal gain is zero")
    return KeyRate(q1 / q_mu * (1.0 - binary_entropy(e1)) - leak)


def leak_ec(e_mu: float, f_ec: float = 1.0) -> float:
    """Error-correction leakage ``f_ec * h(E_mu)``."""
    return f_ec * binary_entropy(e_mu)


def estimate(
    gains: GainSet,
    params: DecoyParams,
    errors: ErrorSet = ErrorSet(),
    leak: float = 0.0,
) -> DecoyEstimate:
    """Run the full decoy-state estimate for one set of observations.

    A vacuous QBER bound gives the worst case E1 = 0.5 in the key rate.
    """
    y1 = y1_lower(gains, params)
    q1 = single_photon_gain(y1, params)
    bound = e1_upper(gains, errors, y1, params)
    e1 = QBER_CAP if bound.vacuous else bound.value
    rate = key_rate(q1, gains.q_mu, e1, leak) if gains.q_mu > 0 else KeyRate(-leak)
    return DecoyEstimate(
        y1_lower=y1, q1=q1, e1_upper=bound.value, key_rate_raw=rate.raw
    )
