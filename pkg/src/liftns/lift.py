"""Adaptive temporal lifting of Navier-Stokes trajectories.

Conventions
-----------
``rate``       r(t) = dtau/dt, produced by :func:`rate_function` and accumulated
               into lifted time as ``tau += r * dt``.
``phi_prime``  dt/dtau = phi'(tau) for the map ``t = phi(tau)``; between samples
               it is the derivative of the monotone cubic through the knots.

With ``U(tau) = u(phi(tau))`` the lifted system integrated here is

    dU/dtau = phi'(tau) * ( -P[(U.grad)U] + nu Lap U ),

i.e. a velocity equation whose time derivative carries the factor 1/phi'.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass

import numpy as np

from . import spectral
from .diagnostics import DiagnosticSeries, measure
from .interp import hermite_derivative, hermite_increment, slopes_from_steps
from .solver import DivergedError, SolverParams, SolverState, check_cfl, if_rk4, next_step
from .spectral import SpectralVelocity

log = logging.getLogger(__name__)

RATE_MODES = ("constant", "affine")
NORM_KINDS = ("grad-L2", "vort-sup")
LIFT_MODES = ("locked", "free")


class MapRangeError(ValueError):
    pass


@dataclass(frozen=True)
class RateParams:
    mode: str = "constant"
    r0: float = 2.0
    r1: float = 0.0
    norm_kind: str = "grad-L2"
    r_min: float = 0.1
    r_max: float = 10.0

    def __post_init__(self):
        if self.mode not in RATE_MODES:
            raise ValueError(f"rate mode must be one of {RATE_MODES}, got {self.mode!r}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")
        if not self.r_min > 0:
            raise ValueError("r_min must be > 0 (a vanishing rate leaves the uniformly parabolic class)")
        if not np.isfinite(self.r_max):
            raise ValueError("r_max must be finite")
        if self.mode == "constant" and not self.r_min <= self.r0 <= self.r_max:
            raise ValueError("need r_min <= r0 <= r_max for a constant rate")
        if not np.isfinite(self.r1):
            raise ValueError("r1 must be finite")

    @property
    def c_bound(self) -> float:
        return 1.0 / self.r_max

    @property
    def C_bound(self) -> float:
        return 1.0 / self.r_min


def rate_function(diag: tuple[float, float], params: RateParams) -> float:
    """dtau/dt from ``(||grad u||_{L2}, ||omega||_inf)``."""
    if params.mode == "constant":
        return params.r0
    grad_l2, vort_sup = diag
    norm = grad_l2 if params.norm_kind == "grad-L2" else vort_sup
    if not (np.isfinite(norm) and norm >= 0):
        raise ValueError(f"gradient norm must be finite and nonnegative, got {norm}")
    return float(min(max(params.r0 + params.r1 * norm, params.r_min), params.r_max))


def _rate_input(coeffs, grid, params: RateParams) -> tuple[float, float]:
    if params.mode == "constant":
        return (0.0, 0.0)
    if params.norm_kind == "grad-L2":
        return (float(np.sqrt(spectral.grad_l2_squared(coeffs, grid))), 0.0)
    return (0.0, spectral.vorticity_sup(coeffs, grid))


class LiftMap:
    """Append-only sampled map between physical time ``t`` and lifted time ``tau``.

    Each sample is ``(t, tau, rate)``; sample 0 is ``(0, 0)`` and carries the
    rate of the first step. Exact step increments are kept alongside the
    cumulative times so that a full lifted step covers exactly the physical
    step that produced it.
    """

    def __init__(self, c_bound: float, C_bound: float):
        if not 0 < c_bound <= C_bound < np.inf:
            raise ValueError("need 0 < c_bound <= C_bound < inf")
        self.c_bound = float(c_bound)
        self.C_bound = float(C_bound)
        self._t = [0.0]
        self._tau = [0.0]
        self._rate = [np.nan]
        self._dt = []
        self._dtau = []
        self._cache = None
        self.frozen = False

    @classmethod
    def for_rates(cls, params: RateParams) -> LiftMap:
        return cls(params.c_bound, params.C_bound)

    def __len__(self) -> int:
        return len(self._t)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self._t, self._tau, self._rate))

    @property
    def t(self) -> np.ndarray:
        return np.array(self._t)

    @property
    def tau(self) -> np.ndarray:
        return np.array(self._tau)

    @property
    def rate(self) -> np.ndarray:
        return np.array(self._rate)

    @property
    def t_end(self) -> float:
        return self._t[-1]

    @property
    def tau_end(self) -> float:
        return self._tau[-1]

    def advance(self, rate: float, dt: float) -> LiftMap:
        if self.frozen:
            raise RuntimeError("lift map is finalized")
        if not (rate > 0 and np.isfinite(rate)):
            raise ValueError(f"rate must be positive and finite, got {rate}")
        if not (dt > 0 and np.isfinite(dt)):
            raise ValueError(f"dt must be positive and finite, got {dt}")
        if not self.c_bound <= 1.0 / rate <= self.C_bound:
            raise ValueError(
                f"phi' = 1/rate = {1.0 / rate} outside [{self.c_bound}, {self.C_bound}]"
            )
        dtau = rate * dt
        if len(self._t) == 1:
            self._rate[0] = rate
        self._dt.append(dt)
        self._dtau.append(dtau)
        self._t.append(self._t[-1] + dt)
        self._tau.append(self._tau[-1] + dtau)
        self._rate.append(rate)
        self._cache = None
        return self

    def finalize(self) -> LiftMap:
        self.frozen = True
        return self

    # --- slopes -----------------------------------------------------------

    def _clip(self, d):
        return np.clip(d, self.c_bound, self.C_bound)

    def _slopes(self):
        """phi' = dt/dtau at every knot, cached until the next append."""
        if self._cache is None:
            if len(self._dt) == 0:
                raise MapRangeError("lift map has a single sample")
            self._cache = self._clip(slopes_from_steps(np.array(self._dtau), np.array(self._dt)))
        return self._cache

    def _local_slopes(self, i: int) -> tuple[float, float]:
        """phi' at knots ``i`` and ``i + 1`` from at most four neighbouring knots."""
        lo = max(0, i - 1)
        hi = min(len(self._dt), i + 2)
        d = self._clip(slopes_from_steps(self._dtau[lo:hi], self._dt[lo:hi]))
        return float(d[i - lo]), float(d[i + 1 - lo])

    def phi_prime_knots(self) -> np.ndarray:
        return self._slopes()

    # --- evaluation -------------------------------------------------------

    def _check_tau(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < 0) or np.any(tau > self._tau[-1]) or np.any(~np.isfinite(tau)):
            raise MapRangeError(f"tau outside sampled range [0, {self._tau[-1]}]")
        return tau

    def invert(self, tau_query):
        """t = phi(tau) by monotone cubic interpolation; exact at the knots."""
        tau_query = self._check_tau(tau_query)
        d = self._slopes()
        return _eval(self.tau, self.t, np.array(self._dtau), np.array(self._dt), d, tau_query)

    def tau_of(self, t_query):
        """Inverse of :meth:`invert`, solved to roundoff on each cubic piece.

        The cubic on a piece is nondecreasing, so bisection on its local
        coordinate converges unconditionally; 60 halvings exhaust binary64.
        """
        t_query = np.asarray(t_query, dtype=float)
        if np.any(t_query < 0) or np.any(t_query > self._t[-1]) or np.any(~np.isfinite(t_query)):
            raise MapRangeError(f"t outside sampled range [0, {self._t[-1]}]")
        t_knots, tau_knots = self.t, self.tau
        h_all, dy_all = np.array(self._dtau), np.array(self._dt)
        d = self._slopes()
        i = np.clip(np.searchsorted(t_knots, t_query, side="right") - 1, 0, t_knots.size - 2)
        h, dy, d0, d1 = h_all[i], dy_all[i], d[i], d[i + 1]
        target = t_query - t_knots[i]
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = hermite_increment(h, dy, d0, d1, mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = tau_knots[i] + 0.5 * (lo + hi) * h
        out = np.where(t_query == t_knots[i], tau_knots[i], np.where(t_query == t_knots[i + 1], tau_knots[i + 1], out))
        return out if out.ndim else float(out)

    def phi_prime(self, tau_query):
        tau_query = self._check_tau(tau_query)
        knots = self.tau
        i = np.clip(np.searchsorted(knots, tau_query, side="right") - 1, 0, knots.size - 2)
        h = np.array(self._dtau)[i]
        dy = np.array(self._dt)[i]
        d = self._slopes()
        s = (tau_query - knots[i]) / h
        return hermite_derivative(h, dy, d[i], d[i + 1], s)

    # --- local forms used by the lifted stepper ---------------------------

    def _interval_of(self, tau: float, right: bool) -> tuple[int, float]:
        """Interval index and local coordinate; knots hit exactly give s = 0 or 1."""
        knots = self._tau
        if right:
            i = bisect.bisect_left(knots, tau) - 1
        else:
            i = bisect.bisect_right(knots, tau) - 1
        i = min(max(i, 0), len(knots) - 2)
        if tau == knots[i]:
            return i, 0.0
        if tau == knots[i + 1]:
            return i, 1.0
        return i, (tau - knots[i]) / self._dtau[i]

    def local_phi_prime(self, tau: float) -> float:
        i, s = self._interval_of(tau, right=False)
        d0, d1 = self._local_slopes(i)
        return float(hermite_derivative(self._dtau[i], self._dt[i], d0, d1, s))

    def phi_increment(self, tau_a: float, tau_b: float) -> float:
        """phi(tau_b) - phi(tau_a) summed from exact per-interval increments."""
        i, sa = self._interval_of(tau_a, right=False)
        j, sb = self._interval_of(tau_b, right=True)

        def inc(k, s):
            if s == 0.0:
                return 0.0
            if s == 1.0:
                return self._dt[k]
            d0, d1 = self._local_slopes(k)
            return float(hermite_increment(self._dtau[k], self._dt[k], d0, d1, s))

        if i == j:
            return inc(i, sb) - inc(i, sa)
        total = self._dt[i] - inc(i, sa)
        for k in range(i + 1, j):
            total += self._dt[k]
        return total + inc(j, sb)


def _eval(x, y, h_all, dy_all, d, xq):
    i = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = h_all[i]
    s = (xq - x[i]) / h
    out = y[i] + hermite_increment(h, dy_all[i], d[i], d[i + 1], s)
    out = np.where(xq == x[i], y[i], np.where(xq == x[i + 1], y[i + 1], out))
    return out if out.ndim else float(out)


def advance_lift(lift_map: LiftMap, rate: float, dt: float) -> LiftMap:
    return lift_map.advance(rate, dt)


def invert_map(lift_map: LiftMap, tau_query):
    return lift_map.invert(tau_query)


@dataclass(frozen=True)
class LiftedState:
    U: SpectralVelocity
    tau: float = 0.0
    phi_prime: float = 1.0
    step_count: int = 0


def step_lifted(
    state: LiftedState, lift_map: LiftMap, dtau: float, params: SolverParams
) -> LiftedState:
    """Advance lifted time by ``dtau``; the map must already cover ``[tau, tau + dtau]``."""
    if not dtau > 0:
        raise ValueError("dtau must be > 0")
    tau_a = state.tau
    tau_b = tau_a + dtau
    end = lift_map.tau_end
    if tau_b > end:
        if tau_b - end > 4.0 * np.finfo(float).eps * max(1.0, end):
            raise MapRangeError(f"step to tau={tau_b} overruns lift map ending at {end}")
        tau_b = end
        dtau = tau_b - tau_a
    tau_m = tau_a + 0.5 * dtau

    weights = (
        lift_map.local_phi_prime(tau_a),
        lift_map.local_phi_prime(tau_m),
        lift_map.local_phi_prime(tau_b),
    )
    half = lift_map.phi_increment(tau_a, tau_m)
    full = lift_map.phi_increment(tau_a, tau_b)
    grid = state.U.grid
    box = grid.box
    c = if_rk4(box.gather(state.U.coeffs), box, params.nu, dtau, weights, half, full)
    if not np.all(np.isfinite(c)):
        raise DivergedError(f"lifted run diverged at tau={tau_b}", state)
    return LiftedState(SpectralVelocity(grid, box.scatter(c)), tau_b, weights[2], state.step_count + 1)


def run_lifted(
    u0: SpectralVelocity,
    rate_params: RateParams,
    solver_params: SolverParams,
    T_physical: float,
    mode: str = "locked",
    dtau: float | None = None,
    sample_every: int = 1,
    snapshot_every: int | None = None,
    qs=(6.0,),
    hook=None,
):
    """Adaptive lifting loop: rate from the current field, extend the map, step in tau.

    ``mode="locked"`` takes physical steps of ``solver_params.dt`` so every
    lifted sample sits on the physical run's grid. ``mode="free"`` takes fixed
    lifted steps ``dtau`` and lets the physical step float as ``dtau / rate``.
    In both modes the final step is shortened to land exactly on ``T_physical``.
    ``hook(step, coeffs) -> coeffs`` may alter the field after each step.

    Returns ``(lift_map, snapshots, series)``; snapshots are ``(t, LiftedState)``.
    """
    if mode not in LIFT_MODES:
        raise ValueError(f"lift mode must be one of {LIFT_MODES}")
    if T_physical < 0:
        raise ValueError("T must be >= 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    if mode == "free":
        dtau = rate_params.r0 * solver_params.dt if dtau is None else dtau
        if not dtau > 0:
            raise ValueError("dtau must be > 0")
    grid = u0.grid
    check_cfl(u0, solver_params.dt)

    lift_map = LiftMap.for_rates(rate_params)
    state = LiftedState(u0, 0.0, 1.0 / rate_params.r0, 0)
    snapshots = [(0.0, state)]
    records = [measure(u0.coeffs, grid, qs)]
    knots = [0]
    t = 0.0
    while t < T_physical:
        rate = rate_function(_rate_input(state.U.coeffs, grid, rate_params), rate_params)
        nominal = solver_params.dt if mode == "locked" else dtau / rate
        lift_map.advance(rate, next_step(t, T_physical, nominal))
        state = step_lifted(state, lift_map, lift_map._dtau[-1], solver_params)
        t = lift_map.t_end
        if hook is not None:
            coeffs = hook(state.step_count, state.U.coeffs.copy())
            state = LiftedState(SpectralVelocity(grid, coeffs), state.tau, state.phi_prime, state.step_count)
        last = t >= T_physical
        if state.step_count % sample_every == 0 or last:
            records.append(measure(state.U.coeffs, grid, qs))
            knots.append(state.step_count)
        if (snapshot_every and state.step_count % snapshot_every == 0) or last:
            snapshots.append((t, state))
    lift_map.finalize()

    knots = np.asarray(knots)
    if len(lift_map) > 1:
        phi_prime = lift_map.phi_prime_knots()[knots]
    else:
        phi_prime = np.array([1.0 / rate_params.r0])
    series = DiagnosticSeries.from_records(
        records, lift_map.t[knots], tau=lift_map.tau[knots], phi_prime=phi_prime, step=knots
    )
    log.debug("lifted run: %d steps, t=%g, tau=%g", state.step_count, t, state.tau)
    return lift_map, snapshots, series


def lift_trajectory(samples: list[SolverState], lift_map: LiftMap) -> list[LiftedState]:
    """Relabel physical samples as lifted ones, U(tau(t)) = u(t); no re-integration."""
    out = []
    for s in samples:
        tau = float(lift_map.tau_of(s.t)) if len(lift_map) > 1 else 0.0
        out.append(LiftedState(s.u, tau, float(lift_map.phi_prime(tau)) if len(lift_map) > 1 else 1.0, s.step_count))
    return out
