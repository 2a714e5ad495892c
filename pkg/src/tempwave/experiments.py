"""Reproduction harness: tables, trace comparisons and convergence sweeps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from . import effective, foldy_lax, oracle
from .errors import CapacityError
from .model import Layout, RegimeParams, build_profile, profile_samples
from .output import Table, emit_csv, emit_svg, write_rows

__all__ = [
    "TABLE1",
    "TABLE2",
    "TableCheck",
    "SweepSpec",
    "SlopeFit",
    "Comparison",
    "reproduce_table1",
    "reproduce_table2",
    "default_grid",
    "trace_compare",
    "predicted_slope",
    "convergence_sweep",
    "off_resonance_point",
    "slab_check",
    "table1_params",
    "table2_params",
    "default_sweeps",
    "sweep_errors",
    "run_default_suite",
    "emit_csv",
    "emit_svg",
]

log = logging.getLogger(__name__)

# (T, l, h, delta, kappa, C) followed by the printed lambda, lambda T / pi, tan(lambda T)
TABLE1 = [
    ((10, 0.1, 0.821, 1e-3, 1, 1), (1.2568, 4.0004, 0.0012)),
    ((10, 0.1, 0.5, 1e-7, 1, 1), (1.0008, 3.1856, 0.6597)),
    ((10, 0.9, 0.717, 1e-3, 1, 1), (8.4828, 27.0016, 0.0049)),
    ((10, 0.9, 0.369, 1e-7, 1, 1), (8.7968, 28.0011, 0.0033)),
    ((10, 0.9, 0.538, 1e-7, 1, 1), (34.1139, 108.6517, -1.9368)),
]
# Rows whose printed values are self-consistent and must reproduce.
TABLE1_CHECKED = (0, 1, 2, 3)

# (T, h, l, delta, kappa, C) followed by the printed omega_p^2 and lambda
TABLE2 = [
    ((10, 0.1, 0.1, 1e-3, 1, 1), (1.9953, 1.0020)),
    ((10, 0.1, 0.9, 1e-3, 1, 1), (1.9953, 1.4142)),
    ((10, 0.342, 0.9, 1e-3, 1, 1), (10.6170, 2.5142)),
]
PRINTED_DECIMALS = 4


def table1_params(row) -> RegimeParams:
    T, l, h, delta, kappa, C = TABLE1[row][0]
    return RegimeParams(T=T, delta=delta, h=h, l=l, C=C, kappa=kappa)


def table2_params(row) -> RegimeParams:
    T, h, l, delta, kappa, C = TABLE2[row][0]
    return RegimeParams(T=T, delta=delta, h=h, l=l, C=C, kappa=kappa)


@dataclass
class TableCheck:
    table: Table
    mismatches: list
    report: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _within_last_digit(computed, printed, decimals=PRINTED_DECIMALS):
    return abs(round(computed, decimals) - printed) <= 1.0001 * 10**-decimals


def reproduce_table1() -> TableCheck:
    """Recompute lambda, lambda T / pi and tan(lambda T) for every row.

    Rows 1-4 must match to one unit in the last printed digit. Row 5 has a
    printed lambda that disagrees with its own lambda T; that row is
    reported, not checked.
    """
    cols = ["row", "T", "l", "h", "delta", "kappa", "C", "lambda", "lambdaT_over_pi", "tan_lambdaT",
            "printed_lambda", "printed_lambdaT_over_pi", "printed_tan", "match"]
    rows, mismatches, report = [], [], []
    for i, (inputs, printed) in enumerate(TABLE1):
        p = table1_params(i)
        lam = effective.lambda_of(p)
        got = (lam, lam * p.T / math.pi, math.tan(lam * p.T))
        ok = all(_within_last_digit(g, v) for g, v in zip(got, printed))
        rows.append([i + 1, *inputs, *got, *printed, ok])
        if i in TABLE1_CHECKED:
            if not ok:
                mismatches.append(f"table 1 row {i + 1}: computed {got}, printed {printed}")
        elif not ok:
            lam_p = printed[0]
            report.append(
                f"table 1 row {i + 1} is internally inconsistent: the printed lambda={lam_p} gives "
                f"lambda T/pi={lam_p * p.T / math.pi:.4f}, but {printed[1]} is printed; "
                f"the row parameters give lambda={lam:.4f}, lambda T/pi={got[1]:.4f}, tan={got[2]:.4f}"
            )
    return TableCheck(Table(cols, rows, report), mismatches, report)


def reproduce_table2() -> TableCheck:
    cols = ["row", "T", "h", "l", "delta", "kappa", "C", "omega_p_sq", "lambda",
            "printed_omega_p_sq", "printed_lambda", "match"]
    rows, mismatches = [], []
    for i, (inputs, printed) in enumerate(TABLE2):
        p = table2_params(i)
        got = (p.amplitude, effective.lambda_of(p))
        ok = all(abs(round(g, PRINTED_DECIMALS) - v) < 0.5 * 10**-PRINTED_DECIMALS for g, v in zip(got, printed))
        rows.append([i + 1, *inputs, *got, *printed, ok])
        if not ok:
            mismatches.append(f"table 2 row {i + 1}: computed {got}, printed {printed}")
    return TableCheck(Table(cols, rows), mismatches)


def default_grid(T, samples=400):
    """Uniform grid on ``[-T/2, 3T/2]`` covering all three branches."""
    return np.linspace(-0.5 * T, 1.5 * T, samples)


@dataclass
class Comparison:
    params: RegimeParams
    traces: dict
    diffs: dict
    regime: effective.RegimeClass
    n_steps: int
    condition: float | None = None
    residual: float | None = None
    warnings: list = field(default_factory=list)


def trace_compare(params: RegimeParams, grid=None, n_cap=None, max_unknowns=foldy_lax.MAX_UNKNOWNS,
                  with_foldy_lax=True, resonance_c=1.0) -> Comparison:
    """Incident, oracle, Foldy-Lax and effective traces on a common grid."""
    grid = default_grid(params.T) if grid is None else np.asarray(grid, dtype=float)
    k = params.wavenumber
    profile = build_profile(params, n_cap=n_cap)
    traces = {
        "incident": oracle.incident_trace(k, grid),
        "oracle": oracle.trace(profile, k, grid),
    }
    sol = effective.effective_solution(params)
    traces["effective"] = oracle.FieldTrace(grid, effective.effective_field_at(sol, grid), "effective")
    warnings, cond, res = [], None, None
    if profile.truncated:
        warnings.append(f"profile truncated to {profile.n} of {profile.requested_n} steps")
    if with_foldy_lax:
        try:
            fl, system = foldy_lax.foldy_lax_trace(profile, params, grid, max_unknowns)
            traces["foldy_lax"] = fl
            cond = foldy_lax.condition_estimate(system)
            res = system.residual
        except CapacityError as exc:
            log.warning("foldy-lax trace skipped: %s", exc)
            warnings.append(f"foldy_lax skipped: {exc}")
    names = [n for n in ("incident", "oracle", "foldy_lax", "effective") if n in traces]
    diffs = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            diffs[f"{a}-{b}"] = traces[a].sup_diff(traces[b])
    return Comparison(params, traces, diffs, effective.classify(params, resonance_c), profile.n, cond, res, warnings)


@dataclass(frozen=True)
class SweepSpec:
    """A delta sweep.

    ``metric`` is ``"sup"`` (sup-norm difference between ``subject`` and
    ``reference`` traces on the default grid) or ``"coefficient"`` (``|C2|``
    of the effective slab). With ``resonance_n`` set, ``C`` is re-tuned at
    every point so that ``lambda T = n pi`` exactly.
    """

    base: RegimeParams
    values: tuple
    metric: str = "sup"
    reference: str = "oracle"
    subject: str = "foldy_lax"
    resonance_n: int | None = None
    name: str = "sweep"
    samples: int = 400

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 3:
            raise ValueError("a sweep needs at least three points")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly decreasing")
        if self.metric not in ("sup", "coefficient"):
            raise ValueError(f"unknown metric {self.metric!r}")
        for role in (self.reference, self.subject):
            if role not in ("oracle", "effective", "foldy_lax"):
                raise ValueError(f"unknown solver {role!r}")

    def point(self, delta) -> RegimeParams:
        p = self.base.replace(delta=delta)
        if self.resonance_n is not None and p.C > 0:
            lam = self.resonance_n * math.pi / p.T
            p = p.replace(C=(lam**2 - p.wavenumber**2) * delta**p.alpha)
        return p


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    predicted: float
    verdict: str
    deltas: tuple = ()
    errors: tuple = ()
    tolerance: float = 0.3

    @property
    def grows(self) -> bool:
        """True if the error increases by more than 20% anywhere as delta shrinks."""
        e = self.errors
        return any(b > 1.2 * a for a, b in zip(e, e[1:]))

    @property
    def monotone(self) -> bool:
        e = self.errors
        return all(b <= a for a, b in zip(e, e[1:]))


def predicted_slope(params: RegimeParams, metric="sup", resonance_c=1.0, pair=("foldy_lax", "effective")) -> float:
    """Rate exponent expected for ``metric`` between the two solvers in ``pair``.

    Point-interaction field against the exact solution: the remainder
    ``(3 - h - l) / 2``. Anything against the effective field: the rate of
    the regime ``params`` falls in.
    """
    h, l = params.h, params.l
    margin = 1.0 - h - l
    if metric == "coefficient":
        return margin
    if set(pair) == {"foldy_lax", "oracle"}:
        return (3 - h - l) / 2
    if margin >= -1e-12:
        return min((1 - h + 2 * l) / 2, 1 - h)
    rc = effective.classify(params, resonance_c)
    if rc.kind is effective.RegimeKind.NEAR_RESONANCE:
        return 2 - 2 * h - l
    return (3 - 3 * h - l) / 2


def _solver_trace(role, profile, params, grid):
    k = params.wavenumber
    if role == "oracle":
        return oracle.trace(profile, k, grid)
    if role == "effective":
        sol = effective.effective_solution(params)
        return oracle.FieldTrace(grid, effective.effective_field_at(sol, grid), "effective")
    trace, _ = foldy_lax.foldy_lax_trace(profile, params, grid)
    return trace


def sweep_errors(spec: SweepSpec):
    errors = []
    for delta in spec.values:
        p = spec.point(delta)
        if spec.metric == "coefficient":
            errors.append(abs(effective.effective_solution(p).C2))
            continue
        grid = default_grid(p.T, spec.samples)
        profile = build_profile(p)
        a = _solver_trace(spec.subject, profile, p, grid)
        b = _solver_trace(spec.reference, profile, p, grid)
        errors.append(a.sup_diff(b))
    return np.array(errors)


FLOOR = 1e-12


def convergence_sweep(spec: SweepSpec, tolerance=0.3, min_r2=0.9) -> SlopeFit:
    """Fit ``log error`` against ``log delta`` and compare with the predicted rate."""
    errors = sweep_errors(spec)
    deltas = np.array(spec.values)
    predicted = predicted_slope(spec.point(spec.values[0]), spec.metric, pair=(spec.subject, spec.reference))
    if np.all(errors < FLOOR):
        return SlopeFit(0.0, float("-inf"), 1.0, predicted, "pass", tuple(deltas), tuple(errors), tolerance)
    fit = linregress(np.log(deltas), np.log(np.maximum(errors, FLOOR)))
    r2 = float(fit.rvalue**2)
    monotone = all(b <= a for a, b in zip(errors, errors[1:]))
    if not monotone:
        verdict = "inconclusive"
    elif abs(fit.slope - predicted) <= tolerance and r2 >= min_r2:
        verdict = "pass"
    elif r2 < min_r2:
        verdict = "inconclusive"
    elif fit.slope > predicted + tolerance:
        # predicted rates are upper bounds; faster decay does not contradict them
        verdict = "exceeds"
    else:
        verdict = "fail"
    return SlopeFit(float(fit.slope), float(fit.intercept), r2, predicted, verdict, tuple(deltas), tuple(errors), tolerance)


def off_resonance_point(h=0.538, l=0.9, delta=1e-7, T=10.0, kappa=1.0, C=1.0) -> RegimeParams:
    """Adjust ``l`` so that ``lambda T`` sits midway between two multiples of pi."""
    base = RegimeParams(T=T, delta=delta, h=h, l=l, C=C, kappa=kappa)
    n = math.floor(effective.lambda_of(base) * T / math.pi)
    lam = (n + 0.5) * math.pi / T
    alpha = -math.log((lam**2 - base.wavenumber**2) / C) / math.log(delta)
    return base.replace(l=alpha + 1.0 - h)


def slab_check(params: RegimeParams):
    """Effective coefficients next to the oracle on the equivalent single slab."""
    sol = effective.effective_solution(params)
    sc = oracle.solve_scattering(Layout.slab(params.T, params.effective_amplitude), params.wavenumber)
    return sol, sc


def default_sweeps():
    return [
        SweepSpec(RegimeParams(h=0.1, l=0.1), (1e-2, 1e-3, 1e-4), metric="coefficient", name="transparent_c2"),
        SweepSpec(RegimeParams(h=0.1, l=0.1), (4e-3, 2e-3, 1e-3), name="foldy_lax_vs_oracle"),
        SweepSpec(RegimeParams(h=0.3, l=0.8), (1e-2, 3e-3, 1e-3, 5e-4), reference="effective",
                  resonance_n=5, name="near_resonance_h0.3_l0.8"),
    ]


def _write_comparison(cmp: Comparison, out: Path, name):
    for label, tr in cmp.traces.items():
        emit_csv(tr, out / "traces" / f"{name}_{label}.csv")
    emit_svg(cmp.traces.values(), out / "traces" / f"{name}.svg", title=name)
    rows = [[k, v] for k, v in cmp.diffs.items()]
    rows += [["n_steps", cmp.n_steps], ["regime", cmp.regime.kind.value], ["behavior", cmp.regime.behavior]]
    if cmp.condition is not None:
        rows += [["condition_estimate", cmp.condition], ["solve_residual", cmp.residual]]
    write_rows(out / "traces" / f"{name}_summary.csv", ["quantity", "value"], rows)


def run_default_suite(out_dir, with_foldy_lax=True) -> dict:
    """Regenerate every table, trace and sweep under ``out_dir``."""
    out = Path(out_dir)
    results = {}

    t1, t2 = reproduce_table1(), reproduce_table2()
    emit_csv(t1.table, out / "tables" / "table1.csv")
    emit_csv(t2.table, out / "tables" / "table2.csv")
    write_rows(out / "tables" / "table1_report.csv", ["note"], [[r] for r in t1.report])
    results["table1"], results["table2"] = t1, t2

    fig1 = build_profile(RegimeParams(C=1, h=0.5, delta=0.05, l=0.5))
    t, w = profile_samples(fig1)
    write_rows(out / "traces" / "figure1_profile.csv", ["t", "omega_p_sq"], zip(t, w))

    coeff_rows = []
    grid = default_grid(10.0)
    for i in range(len(TABLE1)):
        p = table1_params(i)
        sol = effective.effective_solution(p)
        rc = effective.classify(p)
        tr = oracle.FieldTrace(grid, effective.effective_field_at(sol, grid), "effective")
        emit_csv(tr, out / "traces" / f"table1_row{i + 1}_effective.csv")
        emit_svg([tr], out / "traces" / f"table1_row{i + 1}_effective.svg", title=f"table 1 row {i + 1}")
        coeff_rows.append([sol.lam, sol.lam * sol.T / math.pi, math.tan(sol.lam * sol.T),
                           abs(sol.C2), abs(sol.C5), rc.kind.value])
    write_rows(out / "tables" / "coefficients.csv",
               ["lambda", "lambdaT_over_pi", "tan_lambdaT", "abs_C2", "abs_C5", "regime"], coeff_rows)

    for i in range(len(TABLE2)):
        cmp = trace_compare(table2_params(i), with_foldy_lax=with_foldy_lax)
        _write_comparison(cmp, out, f"table2_row{i + 1}")
        results[f"table2_row{i + 1}"] = cmp

    for spec in default_sweeps():
        fit = convergence_sweep(spec)
        write_rows(out / "sweeps" / f"{spec.name}.csv", ["delta", "error"], zip(fit.deltas, fit.errors))
        write_rows(out / "sweeps" / f"{spec.name}_fit.csv",
                   ["slope", "intercept", "r2", "predicted", "verdict"],
                   [[fit.slope, fit.intercept, fit.r2, fit.predicted, fit.verdict]])
        results[spec.name] = fit
    return results
