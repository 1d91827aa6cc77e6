"""Paired physical/lifted experiments and their reports."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectral
from .config import ExperimentConfig
from .diagnostics import (
    ENERGY_TOL,
    LIFTED,
    PHYSICAL,
    DiagnosticSeries,
    InvarianceReport,
    compare_runs,
)
from .lift import LiftMap, RateParams, run_lifted
from .solver import DivergedError, SolverParams, integrate_physical

log = logging.getLogger(__name__)

PANEL_A_HEADER = ("t", "u_l2sq", "cum_dissipation", "tau", "U_l2sq", "cum_dissipation_weighted")
PANEL_B_HEADER = ("t", "bkm_physical", "tau", "bkm_lifted_weighted", "abs_diff")


def rate_params(cfg: ExperimentConfig) -> RateParams:
    return RateParams(cfg.rate_mode, cfg.r0, cfg.r1, cfg.norm_kind, cfg.r_min, cfg.r_max)


def solver_params(cfg: ExperimentConfig) -> SolverParams:
    return SolverParams(cfg.nu, cfg.dt)


def tolerances(cfg: ExperimentConfig) -> dict:
    """Acceptance tolerances implied by the lift configuration.

    Constant rates on the physical sample grid make every lifted quadrature the
    same sum as its physical twin, so only roundoff is allowed. Varying rates
    leave an O(dt^2) trapezoid discrepancy, and free-running lifts add
    resampling error to the row-by-row energy columns.
    """
    constant = cfg.rate_mode == "constant"
    exact = constant and cfg.lift_mode == "locked"
    identity = exact and cfg.r0 == 1.0
    locked = cfg.lift_mode == "locked"
    return {
        "energy_rel": 1e-12 if identity else (1e-8 if locked else 1e-6),
        "dissipation_rel": 1e-12 if identity else (1e-8 if exact else 1e-6),
        "integral_abs": 1e-12 if exact else 1e-6,
        "slack": ENERGY_TOL,
        "tau_map": 1e-12,
    }


@dataclass(frozen=True)
class PhysicalRun:
    """Physical-time diagnostics plus the final state, shareable across validations."""

    series: DiagnosticSeries
    final: spectral.SpectralVelocity
    seconds: float = 0.0


def physical_run(cfg: ExperimentConfig) -> PhysicalRun:
    start = time.perf_counter()
    grid = spectral.make_grid(cfg.grid_n, cfg.period)
    u0 = spectral.taylor_green(grid, cfg.tg_amplitude)
    qs = sorted({q for _, q in cfg.pq})
    snaps, series = integrate_physical(u0, solver_params(cfg), cfg.T, cfg.sample_every, qs=qs)
    return PhysicalRun(series, snaps[-1].u, time.perf_counter() - start)


@dataclass
class RunReport:
    config: ExperimentConfig
    physical: DiagnosticSeries | None = None
    lifted: DiagnosticSeries | None = None
    lift_map: LiftMap | None = None
    invariance: InvarianceReport | None = None
    physical_final: spectral.SpectralVelocity | None = None
    lifted_final: spectral.SpectralVelocity | None = None
    checks: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    error: str | None = None
    diverged: bool = False

    @property
    def final_state_rel_diff(self) -> float:
        """``|U(tau(T)) - u(T)| / |u(T)|`` over all coefficients."""
        a, b = self.physical_final.coeffs, self.lifted_final.coeffs
        scale = np.linalg.norm(a)
        return float(np.linalg.norm(b - a) / scale) if scale > 0 else float(np.linalg.norm(b))

    @property
    def flags(self) -> dict:
        return {name: c["ok"] for name, c in self.checks.items()}

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(self.flags.values())

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAILED"

    @property
    def panel_a(self) -> list[tuple]:
        inv = self.invariance
        if inv is None:
            return []
        return list(
            zip(
                inv.t,
                inv.energy_physical,
                inv.dissipation_physical,
                inv.tau,
                inv.energy_lifted,
                inv.dissipation_lifted,
            )
        )

    @property
    def panel_b(self) -> list[tuple]:
        inv = self.invariance
        if inv is None:
            return []
        return list(zip(inv.t, inv.bkm_physical_cum, inv.tau, inv.bkm_lifted_cum, inv.bkm_row_diff))


def _check(value, tol, upper=True):
    ok = bool(value <= tol) if upper else bool(value >= -tol)
    return {"value": float(value), "tol": float(tol), "ok": ok}


def build_checks(cfg: ExperimentConfig, inv: InvarianceReport, lift_map: LiftMap) -> dict:
    tol = tolerances(cfg)
    checks = {
        "energy_inequality_physical": _check(inv.energy_slack[PHYSICAL], tol["slack"], upper=False),
        "energy_inequality_lifted": _check(inv.energy_slack[LIFTED], tol["slack"], upper=False),
        "energy_match": _check(inv.energy_rel_diff, tol["energy_rel"]),
        "dissipation_match": _check(inv.dissipation_rel_diff, tol["dissipation_rel"]),
        "bkm_invariance": _check(
            max(inv.bkm_diff, float(np.max(inv.bkm_row_diff))), tol["integral_abs"]
        ),
        "prodi_serrin_invariance": _check(inv.ps_max_diff, tol["integral_abs"]),
    }
    if cfg.rate_mode == "constant" and len(lift_map) > 1:
        err = float(np.max(np.abs(lift_map.tau - cfg.r0 * lift_map.t)))
        checks["constant_rate_map"] = _check(err, tol["tau_map"])
    return checks


def run_validation(cfg: ExperimentConfig, hook=None, physical: PhysicalRun | None = None) -> RunReport:
    """Physical run, lifted run with the configured rate, and their comparison.

    ``hook(step, coeffs) -> coeffs`` is handed to the lifted run (fault
    injection). A precomputed ``physical`` series for the same config skips the
    physical integration; several validations of one trajectory can share it.
    """
    report = RunReport(cfg)
    grid = spectral.make_grid(cfg.grid_n, cfg.period)
    u0 = spectral.taylor_green(grid, cfg.tg_amplitude)
    qs = sorted({q for _, q in cfg.pq})

    try:
        if physical is None:
            physical = physical_run(cfg)
        report.physical = physical.series
        report.physical_final = physical.final
        report.timings["physical_s"] = physical.seconds

        start = time.perf_counter()
        report.lift_map, snaps, report.lifted = run_lifted(
            u0, rate_params(cfg), solver_params(cfg), cfg.T, mode=cfg.lift_mode, dtau=cfg.dtau,
            sample_every=cfg.sample_every, qs=qs, hook=hook,
        )
        report.lifted_final = snaps[-1][1].U
        report.timings["lifted_s"] = time.perf_counter() - start
    except DivergedError as e:
        log.warning("%s", e)
        report.error = str(e)
        report.diverged = True
        return report

    report.invariance = compare_runs(report.physical, report.lifted, report.lift_map, cfg.nu, cfg.pq)
    report.checks = build_checks(cfg, report.invariance, report.lift_map)
    return report


# --- output -------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def _series_rows(name: str, s: DiagnosticSeries, qs):
    cum = s.cum_dissipation
    for i in range(len(s)):
        yield (name, int(s.step[i]), s.t[i], s.tau[i], s.phi_prime[i], s.energy[i], s.grad_sq[i],
               cum[i], s.vort_sup[i], *(s.lq[q][i] for q in qs))


def emit_csv(report: RunReport, out_dir) -> list[Path]:
    """Write ``panel_a.csv``, ``panel_b.csv`` and ``diagnostics.csv``; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out}: {e}") from e
    paths = [out / "panel_a.csv", out / "panel_b.csv", out / "diagnostics.csv"]
    _write_csv(paths[0], PANEL_A_HEADER, report.panel_a)
    _write_csv(paths[1], PANEL_B_HEADER, report.panel_b)

    qs = sorted({q for _, q in report.config.pq})
    header = ["run", "step", "t", "tau", "phi_prime", "u_l2sq", "grad_l2sq", "cum_dissipation",
              "vort_sup"] + [f"l{_fmt(q)}_norm" for q in qs]
    rows = []
    for name, s in ((PHYSICAL, report.physical), (LIFTED, report.lifted)):
        if s is not None:
            rows.extend(_series_rows(name, s, qs))
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join([row[0], str(row[1])] + [_fmt(v) for v in row[2:]]))
    paths[2].write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    return paths


def table_indices(t: np.ndarray, rows: int) -> list[int]:
    """Sample indices nearest to ``T k / rows``, k = 1..rows (just ``[0]`` when T = 0)."""
    if t.size <= 1:
        return [0]
    targets = t[-1] * np.arange(1, rows + 1) / rows
    idx = sorted({int(np.argmin(np.abs(t - x))) for x in targets})
    return idx


def render_table(report: RunReport) -> str:
    cfg = report.config
    lines = []
    rule = "-" * 86
    lines.append(f"Temporal lift validation  n={cfg.grid_n}  nu={_short(cfg.nu)}  dt={_short(cfg.dt)}  "
                 f"T={_short(cfg.T)}  rate={cfg.rate_mode}  lift={cfg.lift_mode}")
    if report.error:
        lines.append(f"ERROR: {report.error}")
        lines.append(f"STATUS: {report.status}")
        return "\n".join(lines) + "\n"

    inv = report.invariance
    half = cfg.energy_convention == "half"
    scale = 0.5 if half else 1.0
    e_label = ("0.5||u||^2", "0.5||U||^2") if half else ("||u||_L2^2", "||U||_L2^2")
    idx = table_indices(inv.t, cfg.table_rows)
    e0 = scale * inv.energy_physical[0]

    lines += [rule, "Panel A: Energy Conservation", rule]
    lines.append(f"{'Physical time':^40}|{'Lifted time':^45}")
    lines.append(f"{'t':>8} {e_label[0]:>12} {'int ||grad u||^2':>17} |"
                 f"{'tau':>8} {e_label[1]:>12} {'int ||grad U||^2 phi_prime':>27}")
    for i in idx:
        lines.append(
            f"{inv.t[i]:8.3f} {scale * inv.energy_physical[i]:12.3f} {inv.dissipation_physical[i]:17.3f} |"
            f"{inv.tau[i]:8.3f} {scale * inv.energy_lifted[i]:12.3f} {inv.dissipation_lifted[i]:27.3f}"
        )
    lines += [rule, "Panel B: Beale-Kato-Majda Criterion", rule]
    lines.append(f"{'t':>8} {'int ||omega||_Linf':>20} |{'tau':>8} {'int ||Omega||_Linf phi_prime^-1':>33} | {'|Diff|':>9}")
    for i in idx:
        lines.append(
            f"{inv.t[i]:8.3f} {inv.bkm_physical_cum[i]:20.3f} |{inv.tau[i]:8.3f} "
            f"{inv.bkm_lifted_cum[i]:33.3f} | {inv.bkm_row_diff[i]:9.1e}"
        )
    lines.append(rule)
    lines.append(f"initial energy E0 = {e0:.3f} ({'0.5' if half else ''}||u||^2 convention)")
    lines.append("Panel A weights by phi_prime = dt/dtau; the Panel B header writes phi_prime for the")
    lines.append("rate dtau/dt, so phi_prime^-1 there is the same weight dt/dtau.")
    lines.append(f"BKM: physical {inv.bkm_physical:.12g}  lifted {inv.bkm_lifted:.12g}  |diff| {inv.bkm_diff:.3e}")
    for (p, q), v in inv.ps.items():
        lines.append(
            f"Prodi-Serrin (p={_short(p)}, q={_short(q)}): physical {v['physical']:.12g}  "
            f"lifted {v['lifted']:.12g}  |diff| {v['diff']:.3e}"
        )
    for coord in (PHYSICAL, LIFTED):
        lines.append(f"energy inequality ({coord}): slack {inv.energy_slack[coord]:.3e}")
    lines.append(rule)
    for name, c in report.checks.items():
        lines.append(f"{'PASS' if c['ok'] else 'FAIL'}  {name:28s} value={c['value']:.3e}  tol={c['tol']:.1e}")
    lines.append(f"STATUS: {report.status}")
    return "\n".join(lines) + "\n"


def _short(x) -> str:
    return format(float(x), "g")


def summary(report: RunReport) -> dict:
    inv = report.invariance
    out = {
        "status": report.status,
        "error": report.error,
        "config": report.config.to_text(),
        "checks": report.checks,
        "timings": report.timings,
    }
    if inv is not None:
        out["bkm"] = {"physical": inv.bkm_physical, "lifted": inv.bkm_lifted, "diff": inv.bkm_diff}
        out["prodi_serrin"] = [{"p": p, "q": q, **v} for (p, q), v in inv.ps.items()]
        out["energy_slack"] = inv.energy_slack
        out["final_state_rel_diff"] = report.final_state_rel_diff
    return out


def write_outputs(report: RunReport, out_dir) -> list[Path]:
    paths = emit_csv(report, out_dir)
    out = Path(out_dir)
    (out / "report.txt").write_text(render_table(report), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(summary(report), indent=2, sort_keys=True) + "\n")
    return paths + [out / "report.txt", out / "summary.json"]
