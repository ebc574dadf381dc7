"""Command line entry point.

    cfhb simulate <scheme> <omega_tau_deg>
    cfhb sweep <scheme>
    cfhb compare <scheme> <scheme> [...]
    cfhb validate <scheme>

Exit status: 0 on success, 1 on any error, 2 when ``validate`` finds an
infeasible non-degenerate interval.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import DEFAULT_SAMPLES, ConfigError, RunConfig, load_config
from .metrics import TABLE_FIELDS, analytic_metrics, numeric_metrics
from .params import (
    InfeasibleOperatingPoint,
    Scheme,
    nearest_interval,
    plan_interval,
    validate_soft_switching,
)
from .sweep import EFFICIENCY_DISCLAIMER, aggregate, compare, deviation_summary, loss_report, sweep_csv, sweep_half_cycle
from .waveforms import fmt, synth_interval, waveform_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

VALIDATE_COLUMNS = ("k", "omega_tau_deg", "zcs", "circulating", "timing", "duty", "margin",
                    "degenerate", "reason", "passed")


class _Parser(argparse.ArgumentParser):
    # Usage errors share the generic error status so 2 stays reserved for infeasibility.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _scheme_arg(text: str) -> Scheme:
    try:
        return Scheme.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", help="output directory (overrides output.out_dir)")
    common.add_argument("--zero-ripple", action="store_true", default=None,
                        help="replace the boost inductors with 100 mH")
    common.add_argument("--analytic-only", action="store_true",
                        help="skip waveform synthesis and use the closed-form table only")
    common.add_argument("--samples-per-interval", type=int, default=None,
                        help=f"uniform waveform samples per interval (default {DEFAULT_SAMPLES})")

    parser = _Parser(prog="cfhb", description="Switching-interval simulator for a current-fed half-bridge AC-DC converter.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="one switching interval: waveform CSV")
    p.add_argument("scheme", type=_scheme_arg)
    p.add_argument("omega_tau_deg", type=float)

    p = sub.add_parser("sweep", parents=[common], help="half grid cycle: per-interval metrics CSV")
    p.add_argument("scheme", type=_scheme_arg)

    p = sub.add_parser("compare", parents=[common], help="side-by-side cycle metrics and losses")
    p.add_argument("schemes", type=_scheme_arg, nargs="+")

    p = sub.add_parser("validate", parents=[common], help="soft-switching feasibility over the half cycle")
    p.add_argument("scheme", type=_scheme_arg)
    return parser


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _metric_lines(label: str, m) -> list[str]:
    parts = [f"{name}={fmt(m.get(name))}" for name in TABLE_FIELDS]
    return [f"{label}: " + " ".join(parts) + f" i_cir={fmt(m.i_cir)}"]


def cmd_simulate(cfg: RunConfig, scheme_tag: Scheme, degrees: float, analytic_only: bool, out: io.TextIOBase) -> int:
    if scheme_tag is Scheme.SPSM:
        raise ValueError("spsm is analytics-only; use sweep or compare for it")
    if not 0.0 <= degrees < 360.0:
        raise ValueError(f"omega_tau must lie in [0, 360) degrees, got {degrees:g}")
    derived = cfg.derived()
    scheme = cfg.scheme(scheme_tag)
    k = nearest_interval(derived, degrees)
    plan = plan_interval(derived, scheme, k)
    report = validate_soft_switching(plan, scheme, derived)
    lines = [
        f"scheme {scheme_tag.value}: requested {degrees:g} deg -> interval k={k} "
        f"(omega_tau = {fmt(math.degrees(plan.omega_tau))} deg)",
        f"vg={fmt(plan.vg)} V ig={fmt(plan.ig)} A d1={fmt(plan.d1)} d2={fmt(plan.d2)} "
        f"alpha={fmt(plan.alpha)} beta={fmt(plan.beta)} i_lk_pk={fmt(plan.i_lk_pk)} A",
        f"feasibility: {'pass' if report.passed else 'fail ' + ','.join(report.failures)}"
        + (f" (degenerate: {plan.degenerate_reason})" if plan.degenerate else ""),
    ]
    lines += _metric_lines("analytic", analytic_metrics(plan, derived))
    stem = f"simulate_{scheme_tag.value}_k{k}"
    if not analytic_only:
        nw = synth_interval(plan, derived)
        lines += _metric_lines("numeric ", numeric_metrics(nw, plan))
        lines.append(f"delivered power={fmt(nw.delivered_power())} W")
        path = _write(Path(cfg.out_dir), stem + ".csv", waveform_csv(nw, cfg.samples_per_interval))
        lines.append(f"wrote {path}")
    text = "\n".join(lines) + "\n"
    _write(Path(cfg.out_dir), stem + ".txt", text)
    out.write(text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, scheme_tag: Scheme, analytic_only: bool, out: io.TextIOBase) -> int:
    derived = cfg.derived()
    profile = sweep_half_cycle(derived, cfg.scheme(scheme_tag), analytic_only=analytic_only)
    path = _write(Path(cfg.out_dir), f"sweep_{scheme_tag.value}.csv", sweep_csv(profile))
    cycle = aggregate(profile)
    losses = loss_report(cycle, cfg.devices, derived)
    lines = [
        f"scheme {scheme_tag.value}: {len(profile)} intervals, {cycle.masked} masked "
        + (", ".join(f"{k}={v}" for k, v in profile.reason_counts().items()) or "none"),
        f"cycle ({cycle.origin}): ilk_rms={fmt(cycle.ilk_rms)} A s_ac_rms={fmt(cycle.s_ac_rms)} A "
        f"d_ac_avg={fmt(cycle.d_ac_avg)} A s_dc_rms={fmt(cycle.s_dc_rms)} A d_dc_avg={fmt(cycle.d_dc_avg)} A",
        f"peak i_lk={fmt(cycle.ilk_peak)} A, peak ratio 10/90 deg={fmt(cycle.peak_ratio)}",
        f"total loss={fmt(losses.total)} W, efficiency={fmt(losses.efficiency)} ({EFFICIENCY_DISCLAIMER})",
    ]
    if cycle.delivered_power is not None:
        err = (cycle.delivered_power - derived.params.po) / derived.params.po
        lines.append(f"delivered power={fmt(cycle.delivered_power)} W ({err:+.2%} vs rated)")
    devs = deviation_summary(profile)
    if devs:
        lines.append("closed form vs waveform (unmasked intervals):")
        for d in devs:
            lines.append(f"  {d.name}: max |dev|={d.max_abs:.2%} at k={d.worst_k}, "
                         f"mean signed={d.mean_signed:+.2%}")
    lines.append(f"wrote {path}")
    text = "\n".join(lines) + "\n"
    _write(Path(cfg.out_dir), f"sweep_{scheme_tag.value}.txt", text)
    out.write(text)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, tags: Sequence[Scheme], analytic_only: bool, out: io.TextIOBase) -> int:
    if len(tags) < 2:
        raise ValueError("compare needs at least two schemes")
    report = compare(cfg.derived(), [cfg.scheme(t) for t in tags], cfg.devices, analytic_only=analytic_only)
    text = report.to_text()
    _write(Path(cfg.out_dir), "compare.txt", text)
    path = _write(Path(cfg.out_dir), "compare.csv", report.to_csv())
    out.write(text + f"wrote {path}\n")
    return EXIT_OK


def validation_table(cfg: RunConfig, scheme_tag: Scheme):
    derived = cfg.derived()
    scheme = cfg.scheme(scheme_tag)
    return [validate_soft_switching(plan_interval(derived, scheme, k), scheme, derived)
            for k in range(derived.intervals_per_half_cycle)]


def cmd_validate(cfg: RunConfig, scheme_tag: Scheme, out: io.TextIOBase) -> int:
    reports = validation_table(cfg, scheme_tag)
    buf = io.StringIO()
    buf.write(",".join(VALIDATE_COLUMNS) + "\n")

    def flag(v):
        return "-" if v is None else str(int(v))

    for r in reports:
        buf.write(",".join([
            str(r.k), fmt(math.degrees(r.omega_tau)), flag(r.zcs), flag(r.circulating), flag(r.timing),
            flag(r.duty), flag(r.margin), flag(r.degenerate), r.degenerate_reason or "", flag(r.passed),
        ]) + "\n")
    path = _write(Path(cfg.out_dir), f"validate_{scheme_tag.value}.csv", buf.getvalue())

    active = [r for r in reports if not r.degenerate]
    failed = [r for r in active if not r.passed]
    by_check: dict[str, int] = {}
    for r in failed:
        for tag in r.failures:
            by_check[tag] = by_check.get(tag, 0) + 1
    lines = [
        f"scheme {scheme_tag.value}: {len(reports)} intervals, {len(reports) - len(active)} degenerate, "
        f"{len(active) - len(failed)} pass, {len(failed)} fail",
    ]
    if failed:
        lines.append("failed checks: " + ", ".join(f"({k})={v}" for k, v in sorted(by_check.items())))
        lines.append(f"first failing interval: k={failed[0].k}")
    lines.append("result: " + ("FAIL" if failed else "PASS"))
    lines.append(f"wrote {path}")
    text = "\n".join(lines) + "\n"
    _write(Path(cfg.out_dir), f"validate_{scheme_tag.value}.txt", text)
    out.write(text)
    return EXIT_INFEASIBLE if failed else EXIT_OK


def run(cfg: RunConfig, args: argparse.Namespace, out: Optional[io.TextIOBase] = None) -> int:
    out = out or sys.stdout
    if args.command == "simulate":
        return cmd_simulate(cfg, args.scheme, args.omega_tau_deg, args.analytic_only, out)
    if args.command == "sweep":
        return cmd_sweep(cfg, args.scheme, args.analytic_only, out)
    if args.command == "compare":
        return cmd_compare(cfg, args.schemes, args.analytic_only, out)
    if args.command == "validate":
        return cmd_validate(cfg, args.scheme, out)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(out_dir=args.out, zero_ripple=args.zero_ripple,
                                 samples_per_interval=args.samples_per_interval)
        return run(cfg, args)
    except (ConfigError, InfeasibleOperatingPoint, ValueError, OSError) as exc:
        print(f"cfhb: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
