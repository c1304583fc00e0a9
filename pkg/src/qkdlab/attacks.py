"""
Attack models: laser-damage scaling of Alice's intensities followed by Eve's
unambiguous state discrimination (USD) receiver, its tapped variant, and the
3-photon number-splitting attack.

Eve's receiver is a copy of Bob's passive-basis BB84 station read out with
threshold detectors. For an ``n``-photon pulse every photon lands on the
correct detector of the matching basis with probability 1/2 and on each
detector of the other basis with probability 1/4. The outcome is conclusive
when exactly these three detectors fire, so by inclusion-exclusion

    Y_n = 1 - 2 (3/4)**n + 2 (1/4)**n = 1 - (3**n - 1) / 2**(2n - 1),  n >= 1

and ``Y_0 = 0``. The tapped receiver first passes the pulse through a beam
splitter of transmittance ``t`` whose reflected port is monitored; any
reflected photon makes the event inconclusive, hence ``Y_n(t) = t**n Y_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .estimator import N_MAX, DecoyParams, GainSet


def _check_unit(name: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise DomainError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class StandardUSD:
    name = "usd"


@dataclass(frozen=True)
class ModifiedUSD:
    """USD receiver behind a monitored beam splitter of transmittance ``t``."""

    t: float
    name = "musd"

    def __post_init__(self) -> None:
        _check_unit("t", self.t)


@dataclass(frozen=True)
class PNS3:
    """Photon-number splitting that forwards only 3-photon pulses, with yield ``y3``."""

    y3: float = 1.0
    name = "pns3"

    def __post_init__(self) -> None:
        _check_unit("y3", self.y3)


Variant = Union[StandardUSD, ModifiedUSD, PNS3]


@dataclass(frozen=True)
class AttackConfig:
    """
    Parameters of a combined laser-damage + measurement attack.

    Attributes
    ----------
    kappa : float
        Linear attenuation alteration, ``>= 1``.
    variant : StandardUSD, ModifiedUSD or PNS3
    eta_eve : float
        Eve's detector efficiency in (0, 1].
    channel_transmittance : float
        Transmittance between Alice and Eve in (0, 1].
    """

    kappa: float = 1.0
    variant: Variant = field(default_factory=StandardUSD)
    eta_eve: float = 1.0
    channel_transmittance: float = 1.0

    def __post_init__(self) -> None:
        if not self.kappa >= 1.0:
            raise DomainError(f"kappa must be >= 1, got {self.kappa}")
        _check_unit("eta_eve", self.eta_eve)
        _check_unit("channel_transmittance", self.channel_transmittance)

    @property
    def efficiency(self) -> float:
        """Combined channel and detector efficiency seen by Eve."""
        return self.eta_eve * self.channel_transmittance


@dataclass(frozen=True, eq=False)
class YieldProfile:
    """Conclusive-outcome probability per photon number, ``y[n]`` for ``n = 0..n_max``."""

    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or len(y) < 2:
            raise DomainError("yield profile needs entries for n = 0..n_max, n_max >= 1")
        if y[0] != 0.0:
            raise DomainError("vacuum yield must be 0")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise DomainError("yields must lie in [0, 1]")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n_max(self) -> int:
        return len(self.y) - 1

    def __getitem__(self, n: int) -> float:
        return float(self.y[n])

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], n_max: int = N_MAX) -> "YieldProfile":
        return cls(fn(np.arange(n_max + 1)))


def lda_transform(params: DecoyParams, kappa: float) -> tuple[float, float]:
    """Signal and decoy means after the attenuation is reduced by ``kappa``."""
    if not kappa >= 1.0:
        raise DomainError(f"kappa must be >= 1, got {kappa}")
    return kappa * params.mu, kappa * params.nu


def usd_yield(n):
    """
    Conclusive-outcome probability of the USD receiver for ``n`` photons.

    Vectorised over ``n``. Evaluated as ``1 - 2(3/4)^n + 2(1/4)^n`` which
    equals ``1 - (3^n - 1)/2^(2n-1)`` without big integers; ``n = 0`` maps
    to 0 (no light, no click).
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise DomainError("photon number must be >= 0")
    nf = n_arr.astype(float)
    y = 1.0 - 2.0 * np.power(0.75, nf) + 2.0 * np.power(0.25, nf)
    y = np.where(n_arr == 0, 0.0, y)
    return float(y) if y.ndim == 0 else y


def modified_usd_yield(n, t: float):
    """USD yield behind the monitored tap: ``t**n * usd_yield(n)``."""
    _check_unit("t", t)
    y = np.power(t, np.asarray(n, dtype=float)) * usd_yield(n)
    return float(y) if np.ndim(y) == 0 else y


def usd_gain_closed(mean_tilde):
    """``(1 - e^{-m/2}) (1 - e^{-m/4})^2``; vectorised over the mean."""
    m = np.asarray(mean_tilde, dtype=float)
    if np.any(m < 0):
        raise DomainError("mean photon number must be >= 0")
    q = -np.expm1(-m / 2.0) * np.expm1(-m / 4.0) ** 2
    return float(q) if q.ndim == 0 else q


def modified_usd_gain_closed(mean_tilde, t: float):
    """``e^{-(1-t)m} (1 - e^{-tm/2}) (1 - e^{-tm/4})^2``; vectorised over the mean."""
    _check_unit("t", t)
    m = np.asarray(mean_tilde, dtype=float)
    if np.any(m < 0):
        raise DomainError("mean photon number must be >= 0")
    q = np.exp(-(1.0 - t) * m) * usd_gain_closed(t * m)
    return float(q) if np.ndim(q) == 0 else q


def pns3_yield_profile(y3: float, n_max: int = N_MAX) -> YieldProfile:
    _check_unit("y3", y3)
    y = np.zeros(n_max + 1)
    y[3] = y3
    return YieldProfile(y)


def pns3_gain_closed(mean_tilde, y3: float = 1.0):
    """Gain when only 3-photon pulses are forwarded: ``y3 m^3 e^{-m} / 6``."""
    m = np.asarray(mean_tilde, dtype=float)
    if np.any(m < 0):
        raise DomainError("mean photon number must be >= 0")
    q = y3 * m**3 * np.exp(-m) / 6.0
    return float(q) if q.ndim == 0 else q


def usd_yield_profile(n_max: int = N_MAX) -> YieldProfile:
    return YieldProfile.from_function(usd_yield, n_max)


def modified_usd_yield_profile(t: float, n_max: int = N_MAX) -> YieldProfile:
    return YieldProfile.from_function(lambda n: modified_usd_yield(n, t), n_max)


def variant_gain(variant: Variant, mean_tilde):
    """Closed-form gain of ``variant`` at the (already scaled) mean photon number."""
    if isinstance(variant, StandardUSD):
        return usd_gain_closed(mean_tilde)
    if isinstance(variant, ModifiedUSD):
        return modified_usd_gain_closed(mean_tilde, variant.t)
    if isinstance(variant, PNS3):
        return pns3_gain_closed(mean_tilde, variant.y3)
    raise TypeError(f"unknown attack variant {variant!r}")


def variant_yield_profile(variant: Variant, n_max: int = N_MAX) -> YieldProfile:
    if isinstance(variant, StandardUSD):
        return usd_yield_profile(n_max)
    if isinstance(variant, ModifiedUSD):
        return modified_usd_yield_profile(variant.t, n_max)
    if isinstance(variant, PNS3):
        return pns3_yield_profile(variant.y3, n_max)
    raise TypeError(f"unknown attack variant {variant!r}")


def attack_gains(params: DecoyParams, config: AttackConfig) -> GainSet:
    """
    Gains Bob observes when Eve forwards every conclusive result.

    Losses in front of Eve's detectors thin the Poisson source, so the means
    fed to the gain formula are ``kappa * mu * eta_eve * channel_transmittance``
    (likewise for ``nu``). Vacuum pulses never produce a conclusive result.
    """
    mu_t, nu_t = lda_transform(params, config.kappa)
    eff = config.efficiency
    return GainSet(
        q_mu=variant_gain(config.variant, mu_t * eff),
        q_nu=variant_gain(config.variant, nu_t * eff),
        q_0=0.0,
    )


def attack_gains_array(params: DecoyParams, variant: Variant, kappa, efficiency: float = 1.0):
    """
    Signal and decoy gains over an array of ``kappa`` values.

    Returns ``(q_mu, q_nu)`` arrays; used by the threshold scan and sweeps
    where building one :class:`GainSet` per grid point would be wasteful.
    """
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 1.0):
        raise DomainError("kappa must be >= 1")
    return (
        variant_gain(variant, kappa * params.mu * efficiency),
        variant_gain(variant, kappa * params.nu * efficiency),
    )
