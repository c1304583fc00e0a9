"""
Parameter sweeps and the threshold table.

Sweeps are deterministic and vectorised; rows always come out in grid
order. Tables serialise to CSV (RFC 4180, header row) or JSON
(``{"meta": {...}, "rows": [{...}, ...]}``).
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .attacks import (
    AttackConfig,
    ModifiedUSD,
    attack_gains_array,
    modified_usd_gain_closed,
    usd_gain_closed,
    variant_gain,
)
from .errors import DomainError, UnattainableError
from .estimator import DecoyParams, y1_lower_from
from .thresholds import (
    analytic_usd_threshold,
    from_db,
    solve_usd_threshold,
    truncate_db,
)

MAX_GRID_POINTS = 10**6
VARIABLES = ("kappa_db", "mean_tilde", "tap_t")
OUTPUTS = ("q_mu", "q_nu", "y1_lower", "q1_estimate", "key_rate", "threshold_flag")

FIG3_PARAMS = (DecoyParams(0.5, 0.1), DecoyParams(0.5, 0.01), DecoyParams(0.1, 0.01))
FIG4_TAPS = (1.0, 0.5, 0.3, 0.15)

# (mu, nu, numerical dB, analytic dB) as published
PUBLISHED_TABLE1 = (
    (0.5, 0.1, 11.1, 10.0),
    (0.5, 0.01, 14.5, 12.5),
    (0.1, 0.01, 18.3, 17.2),
)


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid ``start, start + step, ..., <= stop``."""
    if not step > 0:
        raise DomainError("step must be > 0")
    if not start < stop:
        raise DomainError("start must be < stop")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n > MAX_GRID_POINTS:
        raise DomainError(f"grid has {n} points, limit is {MAX_GRID_POINTS}")
    return np.round(start + step * np.arange(n), 12)


@dataclass(frozen=True)
class SweepSpec:
    """
    One-dimensional sweep.

    ``variable`` is swept over ``start..stop`` in ``step`` increments while
    ``params`` and ``config`` stay fixed. For ``tap_t`` the variant is
    replaced by a tapped receiver at each grid point; for ``mean_tilde``
    only ``q_mu`` is available and ``params`` may be None.
    """

    variable: str
    start: float
    stop: float
    step: float
    params: Optional[DecoyParams] = None
    config: AttackConfig = field(default_factory=AttackConfig)
    outputs: Sequence[str] = OUTPUTS
    e_nu: float = 0.0
    leak: float = 0.0

    def __post_init__(self) -> None:
        if self.variable not in VARIABLES:
            raise DomainError(f"unknown sweep variable {self.variable!r}")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise DomainError(f"unknown output column(s): {', '.join(bad)}")
        if self.variable == "mean_tilde":
            if any(o != "q_mu" for o in self.outputs):
                raise DomainError("a mean_tilde sweep only provides q_mu")
        elif self.params is None:
            raise DomainError(f"a {self.variable} sweep needs decoy parameters")
        grid(self.start, self.stop, self.step)

    def describe(self) -> dict:
        cfg = self.config
        d = {
            "variable": self.variable,
            "start": self.start,
            "stop": self.stop,
            "step": self.step,
            "kappa": cfg.kappa,
            "variant": cfg.variant.name,
            "eta_eve": cfg.eta_eve,
            "channel_transmittance": cfg.channel_transmittance,
            "outputs": list(self.outputs),
        }
        d.update(asdict(cfg.variant))
        if self.params is not None:
            d.update(mu=self.params.mu, nu=self.params.nu)
        return d


@dataclass
class SweepTable:
    """Rows of a sweep with their column names and descriptive metadata."""

    columns: list[str]
    rows: list[tuple]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def write_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)

    def write_json(self, fh: IO[str], include_timestamp: bool = True) -> None:
        meta = dict(self.meta)
        if not include_timestamp:
            meta.pop("timestamp", None)
        json.dump({"meta": meta, "rows": self.records()}, fh, indent=2)
        fh.write("\n")

    @property
    def threshold(self) -> Optional[float]:
        """Swept value at the row flagged as the first sign change, if any."""
        if "threshold_flag" not in self.columns:
            return None
        flags = self.column("threshold_flag")
        hits = np.nonzero(flags)[0]
        return float(self.rows[hits[0]][0]) if len(hits) else None


def _meta(spec: dict) -> dict:
    return {
        "tool": "qkdlab",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "sweep": spec,
    }


def _h(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.nan_to_num(h, nan=0.0)


def first_sign_change(values: np.ndarray) -> np.ndarray:
    """Indicator (0/1) of the first index where ``values`` goes from <= 0 to > 0."""
    flag = np.zeros(len(values), dtype=int)
    up = np.nonzero((values[:-1] <= 0) & (values[1:] > 0))[0]
    if len(up):
        flag[up[0] + 1] = 1
    return flag


def _decoy_columns(q_mu, q_nu, spec: SweepSpec) -> dict:
    params = spec.params
    mu, nu = params.mu, params.nu
    y1 = y1_lower_from(q_mu, q_nu, 0.0, params)
    q1_raw = y1 * mu * math.exp(-mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.where(y1 > 0, spec.e_nu * q_nu * math.exp(nu) / (nu * y1), 0.5)
        e1 = np.minimum(e1, 0.5)
        rate = np.where(q_mu > 0, q1_raw / q_mu * (1 - _h(e1)) - spec.leak, -spec.leak)
    return {
        "q_mu": q_mu,
        "q_nu": q_nu,
        "y1_lower": y1,
        "q1_estimate": np.maximum(q1_raw, 0.0),
        "q1_raw": q1_raw,
        "key_rate": np.maximum(rate, 0.0),
        "threshold_flag": first_sign_change(y1),
    }


def run_sweep(spec: SweepSpec) -> SweepTable:
    x = grid(spec.start, spec.stop, spec.step)
    cfg = spec.config
    eff = cfg.efficiency
    lead: dict[str, np.ndarray]
    if spec.variable == "kappa_db":
        kappa = from_db(x)
        lead = {"kappa_db": x, "kappa": kappa}
        cols = _decoy_columns(*attack_gains_array(spec.params, cfg.variant, kappa, eff), spec)
    elif spec.variable == "tap_t":
        if x[0] <= 0 or x[-1] > 1:
            raise DomainError("tap_t grid must lie in (0, 1]")
        pairs = [attack_gains_array(spec.params, ModifiedUSD(t), cfg.kappa, eff) for t in x]
        q_mu = np.array([p[0] for p in pairs], dtype=float)
        q_nu = np.array([p[1] for p in pairs], dtype=float)
        lead = {"tap_t": x, "kappa_db": np.full(len(x), 10 * math.log10(cfg.kappa)), "kappa": np.full(len(x), cfg.kappa)}
        cols = _decoy_columns(q_mu, q_nu, spec)
    else:
        lead = {"mean_tilde": x}
        cols = {"q_mu": np.asarray(variant_gain(cfg.variant, x * eff), dtype=float)}

    names = list(lead)
    data = list(lead.values())
    for out in spec.outputs:
        names.append(out)
        data.append(cols[out])
        if out == "q1_estimate":
            names.append("q1_raw")
            data.append(cols["q1_raw"])
    rows = [tuple(_cell(v) for v in row) for row in zip(*data)]
    return SweepTable(columns=names, rows=rows, meta=_meta(spec.describe()))


def _cell(v):
    if isinstance(v, (np.integer, int)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ArithmeticError("non-finite value in sweep output")
    return v


def sweep_q1_vs_kappa(
    params: DecoyParams,
    kappa_db_range: tuple[float, float] = (0.0, 25.0),
    step: float = 0.05,
    config: Optional[AttackConfig] = None,
) -> SweepTable:
    """Single-photon gain estimate against the attenuation alteration in dB."""
    spec = SweepSpec(
        "kappa_db",
        kappa_db_range[0],
        kappa_db_range[1],
        step,
        params=params,
        config=config or AttackConfig(),
    )
    return run_sweep(spec)


def sweep_gain_vs_mean(
    t_list: Iterable[float] = FIG4_TAPS,
    mean_range: tuple[float, float] = (0.0, 20.0),
    step: float = 0.05,
) -> SweepTable:
    """Signal gain of the tapped USD attack against the altered mean, one column per tap."""
    taps = [float(t) for t in t_list]
    if not taps:
        raise DomainError("need at least one tap transmittance")
    for t in taps:
        if not 0.0 < t <= 1.0:
            raise DomainError(f"tap transmittance must lie in (0, 1], got {t}")
    x = grid(mean_range[0], mean_range[1], step)
    columns = ["mean_tilde"] + [f"q_mu_t{t:g}" for t in taps]
    data = [x] + [np.asarray(modified_usd_gain_closed(x, t)) for t in taps]
    rows = [tuple(_cell(v) for v in row) for row in zip(*data)]
    meta = _meta(
        {"variable": "mean_tilde", "start": mean_range[0], "stop": mean_range[1], "step": step, "taps": taps}
    )
    return SweepTable(columns=columns, rows=rows, meta=meta)


@dataclass(frozen=True)
class Table1Row:
    mu: float
    nu: float
    numerical_db: float
    analytic_db: float
    published_numerical_db: float
    published_analytic_db: float
    numerical_db_exact: float
    analytic_db_exact: float

    @property
    def matches(self) -> bool:
        """Numerical within 0.1 dB of the published value, analytic identical."""
        return (
            abs(self.numerical_db - self.published_numerical_db) <= 0.1 + 1e-9
            and round(self.analytic_db, 6) == round(self.published_analytic_db, 6)
        )


def reproduce_table1(decimals: int = 1) -> list[Table1Row]:
    """Numerical and analytic USD thresholds for the three published parameter sets."""
    rows = []
    for mu, nu, published_num, published_an in PUBLISHED_TABLE1:
        params = DecoyParams(mu, nu)
        num = solve_usd_threshold(params).kappa_db
        an = analytic_usd_threshold(params).kappa_db
        rows.append(
            Table1Row(
                mu=mu,
                nu=nu,
                numerical_db=truncate_db(num, decimals),
                analytic_db=truncate_db(an, decimals),
                published_numerical_db=published_num,
                published_analytic_db=published_an,
                numerical_db_exact=num,
                analytic_db_exact=an,
            )
        )
    return rows


def tune_tap(target_gain: float, mean_tilde: float) -> float:
    """
    Tap transmittance at which the tapped USD gain equals ``target_gain``.

    The gain is increasing in the transmittance, so the root is unique.
    """
    full = usd_gain_closed(mean_tilde)
    if not target_gain > 0:
        raise DomainError("target gain must be > 0")
    if target_gain > full:
        raise UnattainableError(
            f"target gain {target_gain:.6g} exceeds the untapped gain {full:.6g}"
        )
    if target_gain == full:
        return 1.0
    f = lambda t: modified_usd_gain_closed(mean_tilde, t) - target_gain
    lo = 1e-300
    if f(lo) > 0:
        raise UnattainableError(f"target gain {target_gain:.3g} too small to resolve")
    return brentq(f, lo, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
