"""Command-line front end.

Configuration is a plain text file of ``key = value`` lines; ``#`` starts a
comment. Run ``tempwave --help`` for the list of keys.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import effective, experiments, foldy_lax, oracle
from .errors import ConfigError, ReproductionMismatch, TempwaveError
from .model import RegimeParams, build_profile, profile_samples
from .output import emit_csv, emit_svg, write_rows

log = logging.getLogger("tempwave")

SUBCOMMANDS = ("profile", "oracle", "foldy-lax", "effective", "compare", "sweep", "tables", "suite")


def _float_list(text):
    vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return tuple(vals)


def _optional_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _positive(name):
    return lambda v: None if v > 0 else f"{name} must be positive"


# key: (parser, default, units, description, check)
KEYS = {
    "T": (float, 10.0, "time", "modulation window (0, T)", _positive("T")),
    "delta": (float, 1e-3, "time", "step width, in (0, 1)",
              lambda v: None if 0 < v < 1 else "delta must lie in (0, 1)"),
    "h": (float, 0.1, "1", "contrast exponent, in (0, 1]",
          lambda v: None if 0 < v <= 1 else "h must lie in (0, 1] (contrast exponent range)"),
    "l": (float, 0.1, "1", "spacing exponent, in (0, 1]",
          lambda v: None if 0 < v <= 1 else "l must lie in (0, 1] (spacing exponent range)"),
    "C": (float, 1.0, "frequency^2", "amplitude constant (0 disables the steps)",
          lambda v: None if v >= 0 else "C must be non-negative"),
    "kappa": (float, 1.0, "frequency", "background wavenumber", _positive("kappa")),
    "background": (float, 0.0, "frequency^2", "constant squared plasma frequency outside the steps",
                   lambda v: None if v >= 0 else "background must be non-negative"),
    "t_min": (_optional_float, None, "time", "grid start (default -T/2)", None),
    "t_max": (_optional_float, None, "time", "grid end (default 3T/2)", None),
    "samples": (int, 400, "count", "grid points", lambda v: None if v >= 1 else "samples must be >= 1"),
    "n_cap": (_optional_int, None, "count", "keep at most this many steps",
              lambda v: None if v is None or v >= 1 else "n_cap must be >= 1"),
    "max_unknowns": (int, foldy_lax.MAX_UNKNOWNS, "count", "dense-solve capacity",
                     lambda v: None if v >= 1 else "max_unknowns must be >= 1"),
    "resonance_c": (float, 1.0, "rad", "near-resonance window constant c in |lam T - n pi| <= c/n",
                    _positive("resonance_c")),
    "nodes_per_step": (int, 0, "count", "Gauss nodes per step for the Nystrom refinement (0 = off)",
                       lambda v: None if v >= 0 else "nodes_per_step must be >= 0"),
    "sweep_deltas": (_float_list, (1e-2, 1e-3, 1e-4), "time", "comma-separated decreasing deltas", None),
    "sweep_metric": (str, "sup", "-", "sup or coefficient",
                     lambda v: None if v in ("sup", "coefficient") else "sweep_metric must be sup or coefficient"),
    "sweep_reference": (str, "oracle", "-", "oracle, effective or foldy_lax", None),
    "sweep_subject": (str, "foldy_lax", "-", "oracle, effective or foldy_lax", None),
    "resonance_n": (_optional_int, None, "count", "re-tune C so that lam T = n pi at every sweep point", None),
    "name": (str, "run", "-", "base name for output files", None),
    "out": (str, None, "path", "output directory", None),
    "subcommand": (str, None, "-", "one of " + ", ".join(SUBCOMMANDS),
                   lambda v: None if v in SUBCOMMANDS else f"unknown subcommand {v!r}"),
}
PARAM_KEYS = ("T", "delta", "h", "l", "C", "kappa", "background")


@dataclass
class RunConfig:
    params: RegimeParams
    values: dict
    lines: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def grid(self):
        T = self.params.T
        t_min = -0.5 * T if self.values["t_min"] is None else self.values["t_min"]
        t_max = 1.5 * T if self.values["t_max"] is None else self.values["t_max"]
        if self.values["samples"] > 1 and t_max <= t_min:
            raise ConfigError("t_max must exceed t_min", self.lines.get("t_max"))
        return np.linspace(t_min, t_max, self.values["samples"])


def parse_config(text: str) -> RunConfig:
    values = {k: spec[1] for k, spec in KEYS.items()}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        parser, _, _, _, check = KEYS[key]
        try:
            parsed = parser(val)
        except ValueError:
            raise ConfigError(f"cannot parse {val!r} for {key}", lineno) from None
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError(f"{key} must be finite", lineno)
        msg = check(parsed) if check else None
        if msg:
            raise ConfigError(msg, lineno)
        values[key] = parsed
        lines[key] = lineno
    try:
        params = RegimeParams(**{k: values[k] for k in PARAM_KEYS})
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(params, values, lines)
    if values["t_min"] is not None or values["t_max"] is not None:
        cfg.grid()
    for role in ("sweep_reference", "sweep_subject"):
        if values[role] not in ("oracle", "effective", "foldy_lax"):
            raise ConfigError(f"{role} must be oracle, effective or foldy_lax", lines.get(role))
    return cfg


def _out_dir(cfg: RunConfig, flag):
    return Path(flag or cfg.out or os.environ.get("TEMPWAVE_OUT") or "out")


def _cmd_profile(cfg, out):
    profile = build_profile(cfg.params, n_cap=cfg.n_cap)
    t, w = profile_samples(profile, samples=max(cfg.samples, 2001))
    write_rows(out / "traces" / f"{cfg.name}_profile.csv", ["t", "omega_p_sq"], zip(t, w))
    print(f"{profile.n} steps, spacing {profile.d:.6g}, amplitude {profile.amplitude:.6g}"
          + (" (truncated)" if profile.truncated else ""))


def _cmd_oracle(cfg, out):
    profile = build_profile(cfg.params, n_cap=cfg.n_cap)
    k = cfg.params.wavenumber
    sc = oracle.solve_scattering(profile, k)
    tr = oracle.trace(profile, k, cfg.grid(), sc)
    emit_csv(tr, out / "traces" / f"{cfg.name}_oracle.csv")
    emit_svg([tr], out / "traces" / f"{cfg.name}_oracle.svg", title="oracle")
    print(f"|R| = {abs(sc.R):.10g}  |tau| = {abs(sc.tau):.10g}  flux defect = {sc.flux_defect:.3g}")


def _cmd_foldy_lax(cfg, out):
    profile = build_profile(cfg.params, n_cap=cfg.n_cap)
    grid = cfg.grid()
    tr, system = foldy_lax.foldy_lax_trace(profile, cfg.params, grid, cfg.max_unknowns)
    emit_csv(tr, out / "traces" / f"{cfg.name}_foldy_lax.csv")
    traces = [tr]
    if cfg.nodes_per_step:
        ny, _ = foldy_lax.nystrom_solve(profile, cfg.params, cfg.nodes_per_step, grid, cfg.max_unknowns)
        emit_csv(ny, out / "traces" / f"{cfg.name}_nystrom.csv")
        traces.append(ny)
    emit_svg(traces, out / "traces" / f"{cfg.name}_foldy_lax.svg", title="foldy-lax")
    cond = foldy_lax.condition_estimate(system)
    print(f"N = {system.n}  residual = {system.residual:.3g}  ||A^-1||_2 ~ {cond:.4g}")


def _cmd_effective(cfg, out):
    p = cfg.params
    sol = effective.effective_solution(p)
    rc = effective.classify(p, cfg.resonance_c)
    grid = cfg.grid()
    tr = oracle.FieldTrace(grid, effective.effective_field_at(sol, grid), "effective")
    emit_csv(tr, out / "traces" / f"{cfg.name}_effective.csv")
    emit_svg([tr], out / "traces" / f"{cfg.name}_effective.svg", title="effective field")
    write_rows(out / "tables" / f"{cfg.name}_coefficients.csv",
               ["lambda", "lambdaT_over_pi", "tan_lambdaT", "abs_C2", "abs_C5", "regime"],
               [[sol.lam, sol.lam * sol.T / math.pi, math.tan(sol.lam * sol.T), abs(sol.C2), abs(sol.C5),
                 rc.kind.value]])
    print(f"lambda = {sol.lam:.6g}  lambda T/pi = {sol.lam * sol.T / math.pi:.6g}  "
          f"{rc.kind.value} ({rc.behavior})")


def _cmd_compare(cfg, out):
    cmp = experiments.trace_compare(cfg.params, cfg.grid(), cfg.n_cap, cfg.max_unknowns,
                                    resonance_c=cfg.resonance_c)
    experiments._write_comparison(cmp, out, cfg.name)
    for w in cmp.warnings:
        print("warning:", w)
    for k, v in cmp.diffs.items():
        print(f"sup|{k}| = {v:.6g}")


def _cmd_sweep(cfg, out):
    spec = experiments.SweepSpec(cfg.params, cfg.sweep_deltas, cfg.sweep_metric, cfg.sweep_reference,
                                 cfg.sweep_subject, cfg.resonance_n, cfg.name, cfg.samples)
    fit = experiments.convergence_sweep(spec)
    write_rows(out / "sweeps" / f"{spec.name}.csv", ["delta", "error"], zip(fit.deltas, fit.errors))
    write_rows(out / "sweeps" / f"{spec.name}_fit.csv", ["slope", "intercept", "r2", "predicted", "verdict"],
               [[fit.slope, fit.intercept, fit.r2, fit.predicted, fit.verdict]])
    print(f"slope {fit.slope:.4f} (predicted {fit.predicted:.4f}, R^2 {fit.r2:.4f}): {fit.verdict}")


def _cmd_tables(cfg, out):
    t1, t2 = experiments.reproduce_table1(), experiments.reproduce_table2()
    emit_csv(t1.table, out / "tables" / "table1.csv")
    emit_csv(t2.table, out / "tables" / "table2.csv")
    write_rows(out / "tables" / "table1_report.csv", ["note"], [[r] for r in t1.report])
    for note in t1.report:
        print("note:", note)
    problems = t1.mismatches + t2.mismatches
    if problems:
        raise ReproductionMismatch("; ".join(problems))
    print("table 1 rows 1-4 and table 2 reproduced")


def _cmd_suite(cfg, out):
    res = experiments.run_default_suite(out)
    for name, fit in res.items():
        if isinstance(fit, experiments.SlopeFit):
            print(f"{name}: slope {fit.slope:.4f} predicted {fit.predicted:.4f} -> {fit.verdict}")
    if not (res["table1"].ok and res["table2"].ok):
        raise ReproductionMismatch("; ".join(res["table1"].mismatches + res["table2"].mismatches))


COMMANDS = {
    "profile": _cmd_profile,
    "oracle": _cmd_oracle,
    "foldy-lax": _cmd_foldy_lax,
    "effective": _cmd_effective,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "tables": _cmd_tables,
    "suite": _cmd_suite,
}


def dispatch(cfg: RunConfig, out=None) -> int:
    """Run the configured subcommand; returns the process exit status."""
    name = cfg.subcommand
    if name not in COMMANDS:
        raise ConfigError(f"no subcommand given; choose one of {', '.join(SUBCOMMANDS)}")
    out_dir = _out_dir(cfg, out)
    try:
        COMMANDS[name](cfg, out_dir)
    except TempwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def _key_help():
    rows = ["configuration keys (key = value):"]
    for key, (_, default, units, desc, _) in KEYS.items():
        shown = ",".join(f"{v:g}" for v in default) if isinstance(default, tuple) else default
        rows.append(f"  {key:<16} [{units}] {desc} (default: {shown})")
    rows.append("")
    rows.append("exit status: 0 ok, 1 config, 2 capacity, 3 numerical, 4 reproduction mismatch")
    rows.append("output directory: --out, then the 'out' key, then $TEMPWAVE_OUT, then ./out")
    return "\n".join(rows)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="tempwave",
        description="Waves in purely time-modulated step media: oracle, Foldy-Lax and effective solvers.",
        epilog=_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", nargs="?", choices=SUBCOMMANDS, help="subcommand to run")
    ap.add_argument("--subcommand", dest="subcommand", choices=SUBCOMMANDS, help="same as the positional form")
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
        name = args.command or args.subcommand or cfg.subcommand
        if name is None:
            raise ConfigError("no subcommand given")
        cfg.values["subcommand"] = name
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return dispatch(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
