"""
Command-line front end.

Exit codes: 0 success, 1 acceptance check failed, 2 usage or validation
error, 3 I/O error. Every subcommand accepts ``--config FILE`` holding flat
``key = value`` lines named like the long flags; flags on the command line
win over file values.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import sys
import warnings
from typing import Optional, Sequence

from . import __version__
from .attacks import (
    PNS3,
    AttackConfig,
    ModifiedUSD,
    StandardUSD,
    modified_usd_gain_closed,
    modified_usd_yield,
)
from .errors import QkdlabError
from .estimator import DecoyParams
from .experiments import (
    FIG4_TAPS,
    SweepSpec,
    reproduce_table1,
    run_sweep,
    sweep_gain_vs_mean,
)
from .montecarlo import McConfig, mc_conclusive_prob, mc_gain
from .thresholds import (
    analytic_modified_threshold,
    analytic_pns3_threshold,
    analytic_usd_threshold,
    channel_transmittance_db,
    realistic_threshold,
    solve_modified_threshold,
    solve_pns3_threshold,
    solve_usd_threshold,
    truncate_db,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

Z_LIMIT = 4.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _prob(x: float) -> str:
    return f"{x:.6g}"


def _fmt_db(x: float, precision: int) -> str:
    return f"{truncate_db(x, precision):.{precision}f}"


@contextlib.contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _write_records(fh, records: list[dict], fmt: str) -> None:
    if fmt == "json":
        json.dump(records, fh, indent=2)
        fh.write("\n")
    elif fmt == "csv":
        writer = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\r\n")
        writer.writeheader()
        writer.writerows(records)
    else:
        cols = list(records[0])
        cells = [[str(r[c]) for c in cols] for r in records]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        fh.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip() + "\n")
        for row in cells:
            fh.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")


def _efficiencies(args) -> tuple[float, float]:
    if args.channel_db < 0:
        raise UsageError("channel loss must be >= 0 dB")
    return args.eta_eve, channel_transmittance_db(args.channel_db)


def _variant(args):
    if args.variant == "usd":
        return StandardUSD()
    if args.variant == "musd":
        if args.tap is None:
            raise UsageError("--variant musd needs --tap")
        return ModifiedUSD(float(args.tap))
    return PNS3()


def cmd_threshold(args) -> int:
    params = DecoyParams(args.mu, args.nu)
    variant = _variant(args)
    eta_eve, eta_ch = _efficiencies(args)
    results = []
    if args.method in ("numeric", "both"):
        if isinstance(variant, StandardUSD):
            results.append(solve_usd_threshold(params))
        elif isinstance(variant, ModifiedUSD):
            results.append(solve_modified_threshold(params, variant.t))
        else:
            results.append(solve_pns3_threshold(params))
    if args.method in ("analytic", "both"):
        if isinstance(variant, StandardUSD):
            results.append(analytic_usd_threshold(params))
        elif isinstance(variant, ModifiedUSD):
            results.append(analytic_modified_threshold(params, variant.t))
        else:
            results.append(analytic_pns3_threshold(params))
    results = [realistic_threshold(r, eta_eve, eta_ch) for r in results]

    records = []
    for r in results:
        rec = {
            "variant": variant.name,
            "method": r.method.value,
            "kappa_db": _fmt_db(r.kappa_db, args.precision),
            "kappa": _prob(r.kappa_linear),
        }
        if args.format != "text":
            rec.update(
                kappa_db_exact=r.kappa_db,
                kappa_exact=r.kappa_linear,
                residual=r.residual,
                tap=getattr(variant, "t", None),
                eta_eve=r.eta_eve,
                channel_transmittance=r.channel_transmittance,
            )
        records.append(rec)
    _write_records(sys.stdout, records, args.format)
    return EXIT_OK


def _parse_taps(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--tap expects comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    fmt = args.format or ("json" if args.output.endswith(".json") else "csv")
    if args.figure == "q1-vs-kappa":
        if args.mu is None or args.nu is None:
            args._parser.error("--figure q1-vs-kappa requires --mu and --nu")
        params = DecoyParams(args.mu, args.nu)
        eta_eve, eta_ch = _efficiencies(args)
        if args.variant == "musd" and args.tap is not None:
            taps = _parse_taps(args.tap)
            if len(taps) != 1:
                raise UsageError("--variant musd takes a single --tap value")
            args.tap = taps[0]
        config = AttackConfig(variant=_variant(args), eta_eve=eta_eve, channel_transmittance=eta_ch)
        spec = SweepSpec(
            "kappa_db",
            0.0 if args.start is None else args.start,
            25.0 if args.stop is None else args.stop,
            0.05 if args.step is None else args.step,
            params=params,
            config=config,
        )
        table = run_sweep(spec)
    else:
        taps = _parse_taps(args.tap) if args.tap is not None else list(FIG4_TAPS)
        table = sweep_gain_vs_mean(
            taps,
            (0.0 if args.start is None else args.start, 20.0 if args.stop is None else args.stop),
            0.05 if args.step is None else args.step,
        )
    buf = io.StringIO(newline="")
    if fmt == "json":
        table.write_json(buf, include_timestamp=not args.no_meta)
    else:
        table.write_csv(buf)
    with _output(args.output) as fh:
        fh.write(buf.getvalue())
    if args.figure == "q1-vs-kappa":
        thr = table.threshold
        if thr is None:
            print("info: no sign change of Y1 lower bound in the swept range", file=sys.stderr)
        else:
            print(f"info: Y1 lower bound turns positive at {thr:.2f} dB", file=sys.stderr)
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = McConfig(trials=args.trials, seed=args.seed, tap_t=args.tap)
    if args.n is not None:
        est = mc_conclusive_prob(args.n, cfg, workers=args.workers)
        reference = modified_usd_yield(args.n, args.tap)
        label = f"conclusive probability, n={args.n}, t={args.tap:g}"
    else:
        est = mc_gain(args.mean, cfg, workers=args.workers)
        reference = modified_usd_gain_closed(args.mean, args.tap)
        label = f"gain, mean={args.mean:g}, t={args.tap:g}"
    z = est.z_score(reference)
    print(f"quantity  {label}")
    print(f"trials    {est.trials}")
    print(f"seed      {args.seed}")
    print(f"estimate  {_prob(est.p_hat)}")
    print(f"std_err   {_prob(est.std_err)}")
    print(f"analytic  {_prob(reference)}")
    print(f"z         {abs(z):.3f}")
    ok = abs(z) <= Z_LIMIT
    print(f"result    {'PASS' if ok else 'FAIL'} (|z| <= {Z_LIMIT:g})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_table1(args) -> int:
    rows = reproduce_table1(args.precision)
    offset = 1.0 if args.force_mismatch else 0.0
    ok = True
    records = []
    for r in rows:
        published_num = r.published_numerical_db + offset
        num_ok = abs(r.numerical_db - published_num) <= 0.1 + 1e-9
        an_ok = round(r.analytic_db, 6) == round(r.published_analytic_db + offset, 6)
        ok &= num_ok and an_ok
        records.append(
            {
                "mu": r.mu,
                "nu": r.nu,
                "numerical_db": f"{r.numerical_db:.{args.precision}f}",
                "analytic_db": f"{r.analytic_db:.{args.precision}f}",
                "published_numerical_db": f"{published_num:.1f}",
                "published_analytic_db": f"{r.published_analytic_db + offset:.1f}",
                "match": "yes" if num_ok and an_ok else "no",
            }
        )
    if args.format == "json":
        for rec in records:
            for k in ("numerical_db", "analytic_db", "published_numerical_db", "published_analytic_db"):
                rec[k] = float(rec[k])
            rec["match"] = rec["match"] == "yes"
    _write_records(sys.stdout, records, args.format)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _add_attack_flags(p: argparse.ArgumentParser, tap_help: str) -> None:
    p.add_argument("--variant", choices=("usd", "musd", "pns3"), default="usd", help="attack variant")
    p.add_argument("--tap", default=None, help=tap_help)
    p.add_argument("--eta-eve", type=float, default=1.0, help="Eve's detector efficiency (default 1)")
    p.add_argument("--channel-db", type=float, default=0.0, help="Alice-to-Eve channel loss in dB (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkdlab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("threshold", help="critical attenuation alteration")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    _add_attack_flags(p, "tap transmittance for --variant musd")
    p.add_argument("--method", choices=("numeric", "analytic", "both"), default="numeric")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--precision", type=int, default=1, help="dB decimals (truncated)")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", help="parameter sweep for the Q1 and gain figures")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--figure", choices=("q1-vs-kappa", "gain-vs-mean"), required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    _add_attack_flags(p, "q1-vs-kappa: tap for musd; gain-vs-mean: comma-separated list")
    p.add_argument("--start", type=float, help="grid start (dB or mean photon number)")
    p.add_argument("--stop", type=float, help="grid stop, inclusive")
    p.add_argument("--step", type=float, help="grid step")
    p.add_argument("-o", "--output", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), help="default: from extension, else csv")
    p.add_argument("--no-meta", action="store_true", help="omit the timestamp from JSON metadata")
    p.set_defaults(func=cmd_sweep, _parser=p)

    p = sub.add_parser("mc", help="Monte Carlo check of yields and gains")
    p.add_argument("--config", help="flat key = value file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int, help="fixed photon number")
    g.add_argument("--mean", type=float, help="Poisson mean photon number")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tap", type=float, default=1.0, help="tap transmittance (default 1)")
    p.add_argument("--workers", type=int, default=None, help="worker threads (capped by QKDLAB_THREADS)")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("table1", help="reproduce the published threshold table")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--precision", type=int, default=1, help="dB decimals (truncated)")
    p.add_argument("--force-mismatch", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_table1)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _expand_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice the ``--config`` file's settings in front of the command-line flags."""
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None or not argv or argv[0].startswith("-"):
        return argv
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices.get(argv[0])
    if sub is None:
        return argv
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None

    extra: list[str] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        action = sub._option_string_actions.get(flag)
        if action is None or flag in ("--config", "--help"):
            raise UsageError(f"{path}:{lineno}: unknown config key '{key}'")
        if action.nargs == 0:
            if value.lower() in _TRUE:
                extra.append(flag)
            elif value.lower() not in _FALSE:
                raise UsageError(f"{path}:{lineno}: '{key}' expects true or false")
        else:
            extra += [flag, value]
    return argv[:1] + extra + argv[1:]


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"qkdlab: warning: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    warnings.showwarning = _show_warning
    parser = build_parser()
    try:
        argv = _expand_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"qkdlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, QkdlabError, ValueError) as exc:
        print(f"qkdlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qkdlab: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
