"""Slow reference computations used to cross-check the fast spectral paths."""

from __future__ import annotations

import numpy as np

from .spectral import Grid


def retained_wavevectors(grid: Grid) -> np.ndarray:
    """Integer mode indices ``(m, 3)`` kept by the dealias mask, full cube."""
    k = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int)
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
    mask = grid.full_mask()
    return np.stack([kx[mask], ky[mask], kz[mask]], axis=1)


def convolution_advection(full_coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Leray-projected ``(u.grad)u`` by explicit triadic sums over retained modes.

    ``[(u.grad)u]_k = sum_{p+q=k} (u_p . i q) u_q`` with the output truncated
    to the retained set. No transforms are involved. Input and output are full
    ``(3, n, n, n)`` coefficient cubes.
    """
    n = grid.n
    scale = 2.0 * np.pi / grid.period
    modes = retained_wavevectors(grid)
    idx = tuple((modes % n).T)
    u = full_coeffs[:, idx[0], idx[1], idx[2]].T  # (m, 3)
    q = scale * modes.astype(float)

    # Pair every p with every q; a_pq = u_p . i q.
    a = 1j * (u @ q.T)  # (p, q)
    ksum = modes[:, None, :] + modes[None, :, :]
    kmax = grid.kmax
    keep = np.all(np.abs(ksum) <= kmax, axis=2)
    out = np.zeros((3, n, n, n), dtype=complex)
    target = ksum[keep] % n
    contrib = a[keep][:, None] * np.broadcast_to(u[None, :, :], a.shape + (3,))[keep]
    for c in range(3):
        np.add.at(out[c], (target[:, 0], target[:, 1], target[:, 2]), contrib[:, c])

    kx, ky, kz = (scale * np.fft.fftfreq(n, 1.0 / n)[s] for s in
                  ((slice(None), None, None), (None, slice(None), None), (None, None, slice(None))))
    k2 = kx**2 + ky**2 + kz**2
    kdot = kx * out[0] + ky * out[1] + kz * out[2]
    proj = np.divide(kdot, k2, out=np.zeros_like(kdot), where=k2 > 0)
    return np.stack([out[0] - kx * proj, out[1] - ky * proj, out[2] - kz * proj])
