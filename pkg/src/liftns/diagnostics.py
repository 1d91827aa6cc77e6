"""Energy, dissipation, vorticity and Prodi-Serrin diagnostics in both time coordinates.

Time weights follow one convention throughout: ``phi_prime = dt/dtau`` at each
sample, the derivative of the map ``t = phi(tau)``. A quantity integrated in
lifted time picks up that factor, so

    int ||U||(tau) phi_prime(tau) dtau  ==  int ||u||(t) dt

and on a shared sample grid the two trapezoid sums agree to roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .interp import Pchip
from .spectral import SpectralVelocity

PHYSICAL = "physical"
LIFTED = "lifted"
ENERGY_TOL = 1e-8


def kinetic_energy(u: SpectralVelocity, convention: str = "full") -> float:
    """``||u||^2_{L2}`` (``convention="full"``) or ``0.5 ||u||^2`` (``"half"``)."""
    g = u.grid
    e = float(g.volume * np.sum(g.weights * np.sum(np.abs(u.coeffs) ** 2, axis=0)))
    if convention == "full":
        return e
    if convention == "half":
        return 0.5 * e
    raise ValueError(f"unknown energy convention {convention!r}")


def lq_norm(values: np.ndarray, grid: spectral.Grid, q: float) -> float:
    """Collocation L^q norm of a physical vector field ``(3, n, n, n)``."""
    mag2 = np.sum(values * values, axis=0)
    cell = (grid.period / grid.n) ** 3
    with np.errstate(over="ignore"):
        return float((cell * np.sum(mag2 ** (0.5 * q))) ** (1.0 / q))


def measure(coeffs: np.ndarray, grid: spectral.Grid, qs=(6.0,)) -> dict:
    """All per-sample diagnostics of one field."""
    box = grid.box
    c = box.gather(coeffs)
    power = box.power(c)
    w = box.to_physical(box.curl(c))
    out = {
        "energy": float(grid.volume * np.sum(box.weights * power)),
        "grad_sq": float(grid.volume * np.sum(box.weights * box.k2 * power)),
        "vort_sup": float(np.sqrt(np.max(np.sum(w * w, axis=0)))),
        "lq": {},
    }
    if qs:
        u = box.to_physical(c)
        out["lq"] = {float(q): lq_norm(u, grid, q) for q in qs}
    return out


def cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


@dataclass(frozen=True, eq=False)
class DiagnosticSeries:
    """Time-indexed diagnostics. Energies are ``||u||^2_{L2}`` (no one-half)."""

    t: np.ndarray
    tau: np.ndarray
    phi_prime: np.ndarray
    energy: np.ndarray
    grad_sq: np.ndarray
    vort_sup: np.ndarray
    lq: dict = field(default_factory=dict)
    step: np.ndarray | None = None

    def __post_init__(self):
        for name in ("t", "tau", "phi_prime", "energy", "grad_sq", "vort_sup"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "lq", {float(q): np.asarray(v, dtype=float) for q, v in self.lq.items()})
        if self.step is None:
            object.__setattr__(self, "step", np.arange(self.t.size))
        if self.t.size > 1 and (np.any(np.diff(self.t) <= 0) or np.any(np.diff(self.tau) <= 0)):
            raise ValueError("t and tau must be strictly increasing")

    def __len__(self) -> int:
        return self.t.size

    @property
    def cum_dissipation(self) -> np.ndarray:
        """Running ``int ||grad U||^2 phi' dtau``; equals the physical integral when ``tau = t``."""
        return cumulative_trapezoid(self.grad_sq * self.phi_prime, self.tau)

    @classmethod
    def from_records(cls, records: list[dict], t, tau=None, phi_prime=None, step=None):
        t = np.asarray(t, dtype=float)
        tau = t if tau is None else tau
        phi_prime = np.ones_like(t) if phi_prime is None else phi_prime
        qs = records[0]["lq"].keys() if records else ()
        return cls(
            t=t,
            tau=tau,
            phi_prime=phi_prime,
            energy=[r["energy"] for r in records],
            grad_sq=[r["grad_sq"] for r in records],
            vort_sup=[r["vort_sup"] for r in records],
            lq={q: [r["lq"][q] for r in records] for q in qs},
            step=None if step is None else np.asarray(step),
        )


def _integrand(series: DiagnosticSeries, values: np.ndarray, coordinate: str):
    if coordinate == PHYSICAL:
        return values, series.t
    if coordinate == LIFTED:
        return values * series.phi_prime, series.tau
    raise ValueError(f"unknown coordinate {coordinate!r}")


def time_integral(series: DiagnosticSeries, values: np.ndarray, coordinate: str) -> np.ndarray:
    """Running trapezoid integral of ``values`` in the chosen time coordinate."""
    y, x = _integrand(series, values, coordinate)
    return cumulative_trapezoid(y, x)


def dissipation_integral(series: DiagnosticSeries, coordinate: str) -> np.ndarray:
    return time_integral(series, series.grad_sq, coordinate)


def bkm_cumulative(series: DiagnosticSeries, coordinate: str) -> np.ndarray:
    return time_integral(series, series.vort_sup, coordinate)


def bkm_integral(series: DiagnosticSeries, coordinate: str) -> float:
    """``int ||omega||_inf dt`` or ``int ||Omega||_inf phi' dtau``."""
    return float(bkm_cumulative(series, coordinate)[-1]) if len(series) else 0.0


def admissible(p: float, q: float) -> bool:
    return 2.0 / p + 3.0 / q <= 1.0 + 1e-12


def prodi_serrin_cumulative(series: DiagnosticSeries, p: float, q: float, coordinate: str):
    if float(q) not in series.lq:
        raise KeyError(f"series has no L^{q} samples")
    if not admissible(p, q):
        warnings.warn(f"(p, q) = ({p}, {q}) is not Prodi-Serrin admissible (2/p + 3/q > 1)")
    return time_integral(series, series.lq[float(q)] ** p, coordinate)


def prodi_serrin_integral(series: DiagnosticSeries, p: float, q: float, coordinate: str) -> float:
    if len(series) == 0:
        return 0.0
    return float(prodi_serrin_cumulative(series, p, q, coordinate)[-1])


def energy_inequality_check(
    series: DiagnosticSeries, coordinate: str, nu: float, tol: float = ENERGY_TOL
) -> tuple[bool, float]:
    """Check ``0.5 E(end) + nu Q <= 0.5 E(0)``; returns ``(ok, slack)``, slack = RHS - LHS."""
    if len(series) == 0:
        return True, 0.0
    q = dissipation_integral(series, coordinate)[-1]
    slack = 0.5 * series.energy[0] - (0.5 * series.energy[-1] + nu * q)
    return bool(slack >= -tol), float(slack)


class AlignmentError(ValueError):
    pass


@dataclass
class InvarianceReport:
    t: np.ndarray
    tau: np.ndarray
    aligned: bool
    energy_physical: np.ndarray
    energy_lifted: np.ndarray
    dissipation_physical: np.ndarray
    dissipation_lifted: np.ndarray
    bkm_physical_cum: np.ndarray
    bkm_lifted_cum: np.ndarray
    bkm_physical: float
    bkm_lifted: float
    bkm_diff: float
    ps: dict
    energy_inequality_ok: dict
    energy_slack: dict

    @property
    def energy_rel_diff(self) -> float:
        return _max_rel(self.energy_physical, self.energy_lifted)

    @property
    def dissipation_rel_diff(self) -> float:
        return _max_rel(self.dissipation_physical, self.dissipation_lifted)

    @property
    def bkm_row_diff(self) -> np.ndarray:
        return np.abs(self.bkm_lifted_cum - self.bkm_physical_cum)

    @property
    def ps_max_diff(self) -> float:
        return max((v["diff"] for v in self.ps.values()), default=0.0)

    def __len__(self) -> int:
        return self.t.size


def _max_rel(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.abs(a), np.finfo(float).tiny)
    diff = np.abs(a - b)
    rel = np.where(diff == 0, 0.0, diff / scale)
    return float(np.max(rel))


def compare_runs(
    physical: DiagnosticSeries,
    lifted: DiagnosticSeries,
    lift_map,
    nu: float,
    pq_pairs=((4.0, 6.0),),
) -> InvarianceReport:
    """Pair a physical-time run with a lifted run over the same physical horizon.

    Rows follow the physical samples. When the lifted samples sit on the same
    physical times the pairing is direct; otherwise each physical time is mapped
    to ``tau`` through the lift map and the lifted columns are resampled there by
    monotone cubic interpolation (all resampled columns are monotone in ``tau``).
    """
    if len(physical) == 0 or len(lifted) == 0:
        raise AlignmentError("empty series")
    horizon = max(1.0, abs(physical.t[-1]))
    if abs(physical.t[-1] - lifted.t[-1]) > 1e-9 * horizon or physical.t[0] != lifted.t[0]:
        raise AlignmentError(
            f"horizons differ: physical [{physical.t[0]}, {physical.t[-1]}], "
            f"lifted [{lifted.t[0]}, {lifted.t[-1]}]"
        )

    aligned = len(physical) == len(lifted) and np.array_equal(physical.t, lifted.t)
    e_lift = lifted.energy
    d_phys = dissipation_integral(physical, PHYSICAL)
    d_lift = dissipation_integral(lifted, LIFTED)
    b_phys = bkm_cumulative(physical, PHYSICAL)
    b_lift = bkm_cumulative(lifted, LIFTED)
    bkm_p, bkm_l = float(b_phys[-1]), float(b_lift[-1])
    if aligned:
        tau = lifted.tau
    elif len(physical) == 1:
        tau = lifted.tau[:1]
        e_lift, d_lift, b_lift = e_lift[:1], d_lift[:1], b_lift[:1]
    else:
        tau = np.asarray(lift_map.tau_of(physical.t))
        # Energy decreases and the running integrals increase; interpolate on
        # negated energy so every resampled column is increasing.
        e_lift = -Pchip(lifted.tau, -lifted.energy)(tau)
        d_lift = Pchip(lifted.tau, d_lift)(tau)
        b_lift = Pchip(lifted.tau, b_lift)(tau)

    ps = {}
    for p, q in pq_pairs:
        a = prodi_serrin_integral(physical, p, q, PHYSICAL)
        b = prodi_serrin_integral(lifted, p, q, LIFTED)
        ps[(float(p), float(q))] = {"physical": a, "lifted": b, "diff": abs(a - b)}

    ok_p, slack_p = energy_inequality_check(physical, PHYSICAL, nu)
    ok_l, slack_l = energy_inequality_check(lifted, LIFTED, nu)
    return InvarianceReport(
        t=physical.t,
        tau=np.asarray(tau, dtype=float),
        aligned=aligned,
        energy_physical=physical.energy,
        energy_lifted=np.asarray(e_lift, dtype=float),
        dissipation_physical=d_phys,
        dissipation_lifted=np.asarray(d_lift, dtype=float),
        bkm_physical_cum=b_phys,
        bkm_lifted_cum=np.asarray(b_lift, dtype=float),
        bkm_physical=bkm_p,
        bkm_lifted=bkm_l,
        bkm_diff=abs(bkm_p - bkm_l),
        ps=ps,
        energy_inequality_ok={PHYSICAL: ok_p, LIFTED: ok_l},
        energy_slack={PHYSICAL: slack_p, LIFTED: slack_l},
    )
