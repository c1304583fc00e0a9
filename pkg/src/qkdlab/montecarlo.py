"""
Stochastic check of the USD yields and gains.

Each trial routes individual photons through Eve's receiver: an optional
monitored tap (transmittance ``tap_t``), then the passive basis choice and
polarisation split. Only the correct detector and the two detectors of the
other basis can be reached, with probabilities 1/2, 1/4 and 1/4. A trial is
conclusive when no photon was reflected into the monitor and all three
reachable detectors receive at least one photon.

Random numbers come from NumPy's PCG64 generator. The master seed is
expanded with ``SeedSequence.spawn`` into one independent stream per shard
of ``SHARD_SIZE`` trials, so estimates depend only on (seed, trials, inputs)
and not on how many worker threads process the shards.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

SHARD_SIZE = 1 << 16
ROUTING_PROBS = (0.5, 0.25, 0.25)
THREADS_ENV = "QKDLAB_THREADS"


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int = 0
    tap_t: float = 1.0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not 0.0 < self.tap_t <= 1.0:
            raise DomainError(f"tap_t must lie in (0, 1], got {self.tap_t}")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_err: float
    trials: int

    def z_score(self, reference: float) -> float:
        """Deviation from ``reference`` in standard errors (0 for an exact hit)."""
        diff = self.p_hat - reference
        if self.std_err == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_err


def max_workers() -> int:
    """Worker cap: ``QKDLAB_THREADS`` if set, else the CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


def poisson_inversion(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    """Poisson variates by inversion of the tabulated CDF."""
    if mean < 0:
        raise DomainError("Poisson mean must be >= 0")
    if mean == 0:
        return np.zeros(size, dtype=np.int64)
    k_max = int(mean + 40.0 * math.sqrt(mean) + 40.0)
    k = np.arange(k_max + 1)
    log_pmf = k * math.log(mean) - mean - np.cumsum(np.log(np.maximum(k, 1)))
    cdf = np.cumsum(np.exp(log_pmf))
    cdf[-1] = 1.0  # remaining tail is far below double precision
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def _conclusive(rng: np.random.Generator, n: np.ndarray, tap_t: float) -> np.ndarray:
    if tap_t < 1.0:
        passed = rng.binomial(n, tap_t)
        intact = passed == n
    else:
        passed = n
        intact = np.ones(n.shape, dtype=bool)
    counts = rng.multinomial(passed, ROUTING_PROBS)
    return intact & np.all(counts > 0, axis=1)


def _run_shards(
    cfg: McConfig,
    photons: Callable[[np.random.Generator, int], np.ndarray],
    workers: Optional[int],
) -> McEstimate:
    sizes = [SHARD_SIZE] * (cfg.trials // SHARD_SIZE)
    if cfg.trials % SHARD_SIZE:
        sizes.append(cfg.trials % SHARD_SIZE)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def shard(i: int) -> int:
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        n = photons(rng, sizes[i])
        return int(np.count_nonzero(_conclusive(rng, n, cfg.tap_t)))

    workers = min(workers or max_workers(), len(sizes))
    if workers <= 1:
        hits = sum(shard(i) for i in range(len(sizes)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(shard, range(len(sizes))))
    p = hits / cfg.trials
    return McEstimate(p_hat=p, std_err=math.sqrt(p * (1.0 - p) / cfg.trials), trials=cfg.trials)


def mc_conclusive_prob(n: int, cfg: McConfig, workers: Optional[int] = None) -> McEstimate:
    """Frequency of conclusive outcomes for pulses of exactly ``n`` photons."""
    if n < 0:
        raise DomainError("photon number must be >= 0")
    return _run_shards(cfg, lambda rng, size: np.full(size, n, dtype=np.int64), workers)


def mc_gain(mean_tilde: float, cfg: McConfig, workers: Optional[int] = None) -> McEstimate:
    """Frequency of conclusive outcomes for Poisson pulses of mean ``mean_tilde``."""
    if mean_tilde < 0:
        raise DomainError("mean photon number must be >= 0")
    return _run_shards(cfg, lambda rng, size: poisson_inversion(rng, mean_tilde, size), workers)
