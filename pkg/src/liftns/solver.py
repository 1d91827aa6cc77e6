"""Physical-time integration: RK4 with an exact viscous integrating factor."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import spectral
from .diagnostics import DiagnosticSeries, measure
from .spectral import SpectralVelocity

log = logging.getLogger(__name__)

SCHEMES = ("rk4-if",)


class DivergedError(RuntimeError):
    """Non-finite coefficients; ``last_state`` is the last finite state."""

    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = last_state


class CFLWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverParams:
    nu: float
    dt: float
    scheme: str = "rk4-if"

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class SolverState:
    u: SpectralVelocity
    t: float = 0.0
    step_count: int = 0


def cfl_number(u: SpectralVelocity, dt: float) -> float:
    """dt * max|u| * k_max, the advective stability number of a spectral scheme."""
    values = spectral.inverse(u.coeffs, u.grid)
    umax = float(np.sqrt(np.max(np.sum(values * values, axis=0))))
    return dt * umax * u.grid.kmax * 2.0 * np.pi / u.grid.period


def check_cfl(u: SpectralVelocity, dt: float, limit: float = 1.0) -> float:
    c = cfl_number(u, dt)
    if c > limit:
        warnings.warn(f"advective CFL number {c:.3g} exceeds {limit}", CFLWarning, stacklevel=2)
    return c


def if_rk4(c, box, nu, h, weights, half, full):
    """One integrating-factor RK4 step of ``dU/ds = w(s) * (-P[(U.grad)U] + nu Lap U)``.

    ``c`` holds box coefficients (see :class:`spectral.Box`). ``h`` is the step
    in the integration variable ``s`` and ``weights`` holds ``w`` at the start,
    midpoint and end of the step. ``half`` and ``full`` are the integrals of
    ``w`` from the start to the midpoint and to the end, so the diffusive decay
    between any two stages is applied exactly. Physical time is the case
    ``w = 1``, ``half = h/2``, ``full = h``.
    """
    w0, wm, w1 = weights
    with np.errstate(over="ignore", invalid="ignore"):
        # Overflow in a blowing-up run surfaces as non-finite output, which
        # the callers turn into DivergedError.
        return _if_rk4(c, box, nu, h, w0, wm, w1, half, full)


def _if_rk4(c, box, nu, h, w0, wm, w1, half, full):
    lap = nu * box.k2
    e_half = np.exp(-lap * half)
    e_full = np.exp(-lap * full)
    e_rest = np.exp(-lap * (full - half))

    n1 = -box.advection(c)
    n2 = -box.advection(e_half * (c + (0.5 * h * w0) * n1))
    n3 = -box.advection(e_half * c + (0.5 * h * wm) * n2)
    n4 = -box.advection(e_full * c + (h * wm) * (e_rest * n3))
    out = e_full * c + (h / 6.0) * (w0 * (e_full * n1) + (2.0 * wm) * (e_rest * (n2 + n3)) + w1 * n4)
    # Re-project once per step so roundoff cannot accumulate a divergent part.
    return box.leray(out)


def step_physical(state: SolverState, params: SolverParams, dt: float | None = None) -> SolverState:
    h = params.dt if dt is None else dt
    if not h > 0:
        raise ValueError("dt must be > 0")
    grid = state.u.grid
    box = grid.box
    c = if_rk4(box.gather(state.u.coeffs), box, params.nu, h, (1.0, 1.0, 1.0), 0.5 * h, h)
    if not np.all(np.isfinite(c)):
        raise DivergedError(f"diverged at step {state.step_count + 1}", state)
    return SolverState(SpectralVelocity(grid, box.scatter(c)), state.t + h, state.step_count + 1)


def next_step(t: float, T: float, dt: float) -> float:
    """Step size toward ``T``; the last step is shortened to land exactly on ``T``."""
    remaining = T - t
    if remaining <= dt * (1.0 + 1e-6):
        return remaining
    return dt


def integrate_physical(
    u0: SpectralVelocity,
    params: SolverParams,
    T: float,
    sample_every: int = 1,
    snapshot_every: int | None = None,
    qs=(6.0,),
) -> tuple[list[SolverState], DiagnosticSeries]:
    """Integrate to ``T`` recording diagnostics every ``sample_every`` steps and at ``T``.

    Only the initial and final states are kept unless ``snapshot_every`` is given.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    grid = u0.grid
    check_cfl(u0, params.dt)

    state = SolverState(u0, 0.0, 0)
    snapshots = [state]
    records = [measure(u0.coeffs, grid, qs)]
    times, steps = [0.0], [0]
    while state.t < T:
        h = next_step(state.t, T, params.dt)
        state = step_physical(state, params, h)
        last = state.t >= T
        if state.step_count % sample_every == 0 or last:
            records.append(measure(state.u.coeffs, grid, qs))
            times.append(state.t)
            steps.append(state.step_count)
        if (snapshot_every and state.step_count % snapshot_every == 0) or last:
            snapshots.append(state)
    if snapshots[-1] is not state:
        snapshots.append(state)
    log.debug("physical run: %d steps to t=%g", state.step_count, state.t)
    return snapshots, DiagnosticSeries.from_records(records, times, step=steps)
