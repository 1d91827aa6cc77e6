"""Build verification: quick n=8 checks and optional n=32 paired runs."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracles, spectral
from .config import ExperimentConfig
from .interp import Pchip
from .lift import LiftMap, RateParams, run_lifted
from .solver import SolverParams, SolverState, integrate_physical, step_physical


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0


def _mask_count():
    g = spectral.make_grid(8)
    return g.retained_modes == 125, f"retained modes {g.retained_modes} (expect 125)"


def _convolution_oracle(trials=20):
    g = spectral.make_grid(8)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(trials):
        u = spectral.random_field(g, rng, amplitude=2.0)
        ref = oracles.convolution_advection(u.full_coeffs(), g)
        worst = max(worst, float(np.max(np.abs(ref - spectral.nonlinear_term(u).full_coeffs()))))
    return worst <= 1e-10, f"max |diff| {worst:.2e} over {trials} fields"


def _projector():
    g = spectral.make_grid(8)
    rng = np.random.default_rng(1)
    c = spectral.forward(rng.standard_normal((3,) + g.shape), g)
    p1 = spectral.leray(c, g)
    p2 = spectral.leray(p1, g)
    idem = float(np.max(np.abs(p2 - p1)))
    div = float(np.max(np.abs(g.kx * p1[0] + g.ky * p1[1] + g.kz * p1[2])))
    return idem <= 1e-14 and div <= 1e-13, f"idempotency {idem:.1e}, divergence {div:.1e}"


def _stokes():
    # A shear wave u = (sin 2z, 0, 0) has no advective term and decays exactly.
    g = spectral.make_grid(8)
    x, y, z = g.coordinates()
    values = np.stack([np.sin(2 * z), np.zeros_like(z), np.zeros_like(z)])
    u0 = spectral.SpectralVelocity.from_physical(spectral.PhysicalField(g, values))
    params = SolverParams(nu=0.1, dt=0.05)
    state = SolverState(u0)
    for _ in range(20):
        state = step_physical(state, params)
    exact = u0.coeffs * np.exp(-0.1 * 4.0 * state.t)
    err = float(np.max(np.abs(state.u.coeffs - exact)) / np.max(np.abs(exact)))
    return err <= 1e-12, f"relative error {err:.1e} at t={state.t:g}"


def _identity_lift():
    g = spectral.make_grid(8)
    u0 = spectral.taylor_green(g, 1.0)
    params = SolverParams(nu=0.05, dt=0.01)
    snaps, _ = integrate_physical(u0, params, 0.5, qs=())
    _, lifted, _ = run_lifted(u0, RateParams("constant", 1.0), params, 0.5, qs=())
    err = float(np.max(np.abs(snaps[-1].u.coeffs - lifted[-1][1].U.coeffs)))
    return err <= 1e-12, f"coefficient diff {err:.1e} after 50 steps"


def _constant_map():
    m = LiftMap(0.1, 10.0)
    for _ in range(1000):
        m.advance(2.0, 1e-3)
    m.finalize()
    err = float(np.max(np.abs(m.tau - 2.0 * m.t)))
    inv = float(np.max(np.abs(m.invert(m.tau[::7]) - m.t[::7])))
    return err <= 1e-12 and inv <= 1e-9, f"|tau - 2t| {err:.1e}, inversion {inv:.1e}"


def _pchip():
    from scipy.interpolate import PchipInterpolator

    rng = np.random.default_rng(2)
    x = np.cumsum(rng.uniform(0.1, 1.0, 30))
    y = np.cumsum(rng.uniform(0.0, 2.0, 30))
    xq = np.linspace(x[0], x[-1], 997)
    err = float(np.max(np.abs(Pchip(x, y)(xq) - PchipInterpolator(x, y)(xq))))
    return err <= 1e-12, f"max diff vs scipy {err:.1e}"


QUICK = (
    ("dealias_mask_count", _mask_count),
    ("convolution_oracle", _convolution_oracle),
    ("leray_projector", _projector),
    ("stokes_exactness", _stokes),
    ("identity_lift", _identity_lift),
    ("constant_rate_map", _constant_map),
    ("pchip_matches_scipy", _pchip),
)


def _full_checks():
    from .harness import physical_run, run_validation

    base = ExperimentConfig()
    shared = physical_run(base)
    constant = run_validation(base, physical=shared)
    affine = run_validation(
        base.with_(rate_mode="affine", r0=1.0, r1=0.5, lift_mode="free", dtau=2e-3),
        physical=shared,
    )
    out = []
    for label, rep in (("n32_constant_rate", constant), ("n32_affine_free", affine)):
        inv = rep.invariance
        detail = rep.error or f"BKM diff {inv.bkm_diff:.1e}, energy rel {inv.energy_rel_diff:.1e}"
        out.append((label, rep.passed, detail))
    return out


def run_selftest(level: str = "quick", echo=print) -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError("level must be quick or full")
    results = []
    for name, fn in QUICK:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as e:  # a crashing check is a failing check
            ok, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
        _echo(results[-1], echo)
    if level == "full":
        start = time.perf_counter()
        for name, ok, detail in _full_checks():
            results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
            _echo(results[-1], echo)
    return results


def _echo(r: CheckResult, echo):
    if echo is not None:
        echo(f"{'PASS' if r.ok else 'FAIL'}  {r.name:22s} {r.detail}  ({r.seconds:.2f}s)")
