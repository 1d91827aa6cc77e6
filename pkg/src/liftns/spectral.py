"""Fourier representation of periodic, divergence-free velocity fields on the 3-torus.

Coefficients follow the Fourier-series convention

    u(x) = sum_k  u_k exp(i k.x),        u_k = rfftn(u) / n**3,

and are stored on the real-FFT half grid ``(3, n, n, n//2 + 1)``; the negative
``kz`` half is implied by Hermitian symmetry. ``SpectralVelocity.full_coeffs``
expands to the full cube when a test or oracle needs every mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class Grid:
    """Cubic collocation grid with wavenumbers and a two-thirds-rule dealias mask."""

    n: int
    period: float = TWO_PI
    wavenumbers: np.ndarray = field(init=False, repr=False)
    kx: np.ndarray = field(init=False, repr=False)
    ky: np.ndarray = field(init=False, repr=False)
    kz: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    box: "Box" = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError("n must be an integer")
        if n % 2:
            raise ValueError("n must be even")
        if n < 8:
            raise ValueError("n must be >= 8")
        if not (self.period > 0 and np.isfinite(self.period)):
            raise ValueError("period must be positive and finite")

        scale = TWO_PI / self.period
        index = np.fft.fftfreq(n, 1.0 / n)  # 0, 1, ..., n/2-1, -n/2, ..., -1
        index_z = np.arange(n // 2 + 1, dtype=float)
        kx = (scale * index)[:, None, None]
        ky = (scale * index)[None, :, None]
        kz = (scale * index_z)[None, None, :]

        # 3|k_i| < n keeps every quadratic product alias free.
        keep = 3 * np.abs(index) < n
        keep_z = 3 * index_z < n
        mask = keep[:, None, None] & keep[None, :, None] & keep_z[None, None, :]

        # Parseval multiplicity on the half grid: interior kz planes stand for +/- kz.
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0

        for name, value in (
            ("wavenumbers", scale * index),
            ("kx", kx),
            ("ky", ky),
            ("kz", kz),
            ("k2", kx**2 + ky**2 + kz**2),
            ("dealias_mask", mask),
            ("weights", np.broadcast_to(w[None, None, :], mask.shape)),
        ):
            if isinstance(value, np.ndarray):
                value.flags.writeable = False
            object.__setattr__(self, name, value)
        object.__setattr__(self, "box", Box(self))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def volume(self) -> float:
        return self.period**3

    @property
    def kmax(self) -> int:
        """Largest retained integer mode index per axis."""
        return (self.n - 1) // 3

    def full_mask(self) -> np.ndarray:
        """Dealias mask on the full ``(n, n, n)`` wavenumber cube."""
        keep = 3 * np.abs(np.fft.fftfreq(self.n, 1.0 / self.n)) < self.n
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @property
    def retained_modes(self) -> int:
        return int(self.full_mask().sum())

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.arange(self.n) * (self.period / self.n)
        return np.meshgrid(x, x, x, indexing="ij")

    def full_wavevectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.wavenumbers
        return np.meshgrid(k, k, k, indexing="ij")


def make_grid(n: int, period: float = TWO_PI) -> Grid:
    return Grid(n, float(period))


def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Physical ``(..., n, n, n)`` real array to normalized half-grid coefficients."""
    return sfft.rfftn(values, axes=(-3, -2, -1), norm="forward")


def inverse(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(coeffs, s=grid.shape, axes=(-3, -2, -1), norm="forward")


class Box:
    """The retained modes as a dense ``(2K+1, 2K+1, K+1)`` block of the half grid.

    The two-thirds mask is a product of per-axis index sets, so the retained
    coefficients form a box. Solver arithmetic runs on the box and the
    transforms skip the zero planes outside it.
    """

    def __init__(self, grid: Grid):
        n = grid.n
        K = grid.kmax
        self.n = n
        self.K = K
        self.index = np.concatenate([np.arange(K + 1), np.arange(n - K, n)])
        scale = TWO_PI / grid.period
        k = scale * np.concatenate([np.arange(K + 1), np.arange(-K, 0)]).astype(float)
        self.kx = k[:, None, None]
        self.ky = k[None, :, None]
        self.kz = scale * np.arange(K + 1, dtype=float)[None, None, :]
        self.k2 = self.kx**2 + self.ky**2 + self.kz**2
        w = np.full(K + 1, 2.0)
        w[0] = 1.0  # kz = n/2 never lies inside the box
        self.weights = np.broadcast_to(w[None, None, :], self.k2.shape)
        self.shape = (2 * K + 1, 2 * K + 1, K + 1)
        self._ix = np.ix_(self.index, self.index, np.arange(K + 1))

    def gather(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs[(...,) + self._ix]

    def scatter(self, box: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros(box.shape[:-3] + (n, n, n // 2 + 1), dtype=complex)
        out[(...,) + self._ix] = box
        return out

    def to_physical(self, box: np.ndarray) -> np.ndarray:
        n, K = self.n, self.K
        lead = box.shape[:-3]
        a = np.zeros(lead + (2 * K + 1, n, K + 1), dtype=complex)
        a[..., : K + 1, :] = box[..., : K + 1, :]
        a[..., n - K :, :] = box[..., K + 1 :, :]
        a = sfft.ifft(a, axis=-2, norm="forward", overwrite_x=True)
        b = np.zeros(lead + (n, n, K + 1), dtype=complex)
        b[..., : K + 1, :, :] = a[..., : K + 1, :, :]
        b[..., n - K :, :, :] = a[..., K + 1 :, :, :]
        b = sfft.ifft(b, axis=-3, norm="forward", overwrite_x=True)
        return sfft.irfft(b, n=n, axis=-1, norm="forward")

    def from_physical(self, values: np.ndarray) -> np.ndarray:
        n, K = self.n, self.K
        f = sfft.rfft(values, axis=-1, norm="forward")[..., : K + 1]
        f = sfft.fft(f, axis=-2, norm="forward", overwrite_x=True)
        f = np.concatenate([f[..., : K + 1, :], f[..., n - K :, :]], axis=-2)
        f = sfft.fft(f, axis=-3, norm="forward", overwrite_x=True)
        return np.concatenate([f[..., : K + 1, :, :], f[..., n - K :, :, :]], axis=-3)

    def leray(self, c: np.ndarray) -> np.ndarray:
        kx, ky, kz = self.kx, self.ky, self.kz
        kdotc = kx * c[0] + ky * c[1] + kz * c[2]
        k2 = self.k2
        scale = np.divide(kdotc, k2, out=np.zeros_like(kdotc), where=k2 > 0)
        out = np.empty_like(c)
        np.subtract(c[0], kx * scale, out=out[0])
        np.subtract(c[1], ky * scale, out=out[1])
        np.subtract(c[2], kz * scale, out=out[2])
        return out

    def advection(self, c: np.ndarray) -> np.ndarray:
        """P[(u.grad)u] on the box, via div(u u) with alias-free products."""
        u = self.to_physical(c)
        uu = np.empty((6,) + u.shape[1:])
        for m, (i, j) in enumerate(((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))):
            np.multiply(u[i], u[j], out=uu[m])
        t = self.from_physical(uu)
        kx, ky, kz = self.kx, self.ky, self.kz
        out = np.empty((3,) + self.shape, dtype=complex)
        out[0] = kx * t[0] + ky * t[3] + kz * t[4]
        out[1] = kx * t[3] + ky * t[1] + kz * t[5]
        out[2] = kx * t[4] + ky * t[5] + kz * t[2]
        out *= 1j
        return self.leray(out)

    def curl(self, c: np.ndarray) -> np.ndarray:
        kx, ky, kz = self.kx, self.ky, self.kz
        return 1j * np.stack([ky * c[2] - kz * c[1], kz * c[0] - kx * c[2], kx * c[1] - ky * c[0]])

    def power(self, c: np.ndarray) -> np.ndarray:
        return np.sum(c.real**2 + c.imag**2, axis=0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected shape {(3,) + self.grid.shape}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("physical field contains NaN or Inf")
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))


@dataclass(frozen=True, eq=False)
class SpectralVelocity:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.spectral_shape:
            raise ValueError(
                f"expected shape {(3,) + self.grid.spectral_shape}, got {self.coeffs.shape}"
            )
        object.__setattr__(self, "coeffs", _frozen(np.asarray(self.coeffs, dtype=complex)))

    @classmethod
    def zeros(cls, grid: Grid) -> SpectralVelocity:
        return cls(grid, np.zeros((3,) + grid.spectral_shape, dtype=complex))

    @classmethod
    def from_physical(cls, field: PhysicalField) -> SpectralVelocity:
        grid = field.grid
        return cls(grid, forward(field.values, grid) * grid.dealias_mask)

    def to_physical(self) -> PhysicalField:
        return PhysicalField(self.grid, inverse(self.coeffs, self.grid))

    def full_coeffs(self) -> np.ndarray:
        """All ``(3, n, n, n)`` Fourier coefficients, negative kz included."""
        return sfft.fftn(inverse(self.coeffs, self.grid), axes=(1, 2, 3), norm="forward")

    def divergence_residual(self) -> float:
        """max_k |k.u_k| over the stored modes."""
        g = self.grid
        c = self.coeffs
        return float(np.max(np.abs(g.kx * c[0] + g.ky * c[1] + g.kz * c[2])))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


def leray(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Array-level Leray projector; the k = 0 mode passes through."""
    kdotc = grid.kx * coeffs[0] + grid.ky * coeffs[1] + grid.kz * coeffs[2]
    k2 = grid.k2
    scale = np.divide(kdotc, k2, out=np.zeros_like(kdotc), where=k2 > 0)
    return np.stack(
        [coeffs[0] - grid.kx * scale, coeffs[1] - grid.ky * scale, coeffs[2] - grid.kz * scale]
    )


def project_div_free(v: SpectralVelocity) -> SpectralVelocity:
    return SpectralVelocity(v.grid, leray(v.coeffs, v.grid))


def advection(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Projected, dealiased coefficients of (u.grad)u on the half grid."""
    box = grid.box
    return box.scatter(box.advection(box.gather(coeffs)))


def nonlinear_term(u: SpectralVelocity) -> SpectralVelocity:
    return SpectralVelocity(u.grid, advection(u.coeffs, u.grid))


def curl(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    kx, ky, kz = grid.kx, grid.ky, grid.kz
    c = coeffs
    return 1j * np.stack(
        [ky * c[2] - kz * c[1], kz * c[0] - kx * c[2], kx * c[1] - ky * c[0]]
    )


def grad_l2_squared(coeffs: np.ndarray, grid: Grid) -> float:
    """||grad u||^2_{L2} by Parseval."""
    power = np.sum(np.abs(coeffs) ** 2, axis=0)
    return float(grid.volume * np.sum(grid.weights * grid.k2 * power))


def vorticity_sup(coeffs: np.ndarray, grid: Grid) -> float:
    """max over collocation points of the vorticity magnitude."""
    box = grid.box
    w = box.to_physical(box.curl(box.gather(coeffs)))
    return float(np.sqrt(np.max(np.sum(w * w, axis=0))))


def gradient_diagnostics(u: SpectralVelocity) -> tuple[float, float]:
    """Return ``(||grad u||_{L2}, ||curl u||_{L_inf})``."""
    return (
        float(np.sqrt(grad_l2_squared(u.coeffs, u.grid))),
        vorticity_sup(u.coeffs, u.grid),
    )


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralVelocity:
    """u = A (sin x cos y cos z, -cos x sin y cos z, 0) in units of the box period."""
    x, y, z = (TWO_PI / grid.period * c for c in grid.coordinates())
    values = amplitude * np.stack(
        [np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)]
    )
    c = forward(values, grid) * grid.dealias_mask
    c[:, 0, 0, 0] = 0.0
    return SpectralVelocity(grid, leray(c, grid))


def random_field(grid: Grid, rng: np.random.Generator, amplitude: float = 1.0) -> SpectralVelocity:
    """Random real, dealiased, divergence-free field with zero mean."""
    values = rng.standard_normal((3,) + grid.shape)
    c = forward(values, grid) * grid.dealias_mask
    c[:, 0, 0, 0] = 0.0
    c = leray(c, grid)
    # Real-FFT planes kz = 0 carry both +/- ky; round-trip to enforce Hermitian symmetry.
    c = forward(inverse(c, grid), grid) * grid.dealias_mask
    norm = np.sqrt(np.sum(grid.weights * np.sum(np.abs(c) ** 2, axis=0)))
    return SpectralVelocity(grid, c * (amplitude / norm))
