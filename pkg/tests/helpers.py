"""Independent oracles shared across the test modules.

These deliberately avoid the library's own assembly paths: dense matrix
products, explicit double loops, and direct tridiagonal diagonalization.
"""

import numpy as np
from scipy.linalg import eigh_tridiagonal

from waveaction import Wavefunction, make_grid


def dense_momentum_matrix(grid, a_values, hbar=1.0, charge=1.0):
    """Explicit matrix of -i hbar D - q A (central stencil, boundary rules)."""
    n = grid.n_points
    m = np.zeros((n, n), dtype=complex)
    c = -1j * hbar / (2.0 * grid.dx)
    for j in range(n):
        if grid.is_periodic:
            m[j, (j + 1) % n] += c
            m[j, (j - 1) % n] -= c
        elif 0 < j < n - 1:
            m[j, j + 1] += c
            m[j, j - 1] -= c
        m[j, j] -= charge * a_values[j]
    if not grid.is_periodic:
        m[0, :] = 0.0
        m[-1, :] = 0.0
    return m


def dense_ground_energy(grid, v_values, hbar=1.0, mass=1.0, n_states=1):
    """Lowest eigenvalues of the discrete -hbar^2 lap / 2m + V (A = 0 only)."""
    kin = hbar**2 / (2.0 * mass * grid.dx**2)
    if grid.is_periodic:
        n = grid.n_points
        h = np.zeros((n, n))
        for j in range(n):
            h[j, j] = 2.0 * kin + v_values[j]
            h[j, (j + 1) % n] -= kin
            h[j, (j - 1) % n] -= kin
        return np.sort(np.linalg.eigvalsh(h))[:n_states]
    diag = 2.0 * kin + v_values[1:-1]
    off = -kin * np.ones(grid.n_points - 3)
    vals = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_states - 1))[0]
    return vals


def richardson_order(errors):
    """Observed convergence order from errors on successively halved steps."""
    errors = np.asarray(errors, dtype=float)
    return np.log2(errors[:-1] / errors[1:])


def random_state(grid, seed, smooth=True):
    """Seeded random normalized wavefunction (optionally band-limited)."""
    rng = np.random.default_rng(seed)
    amp = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    if smooth:
        k = 2.0 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.dx)
        amp = np.fft.ifft(np.fft.fft(amp) * np.exp(-0.5 * k**2))
    psi = Wavefunction(grid, amp)
    w = grid.weights
    scale = np.sqrt(np.sum(w * np.abs(psi.amplitudes) ** 2))
    return Wavefunction(grid, psi.amplitudes / scale)


def loop_inner_product(bra, ket):
    """Plain-Python quadrature sum, independent of the vectorized path."""
    total = 0.0 + 0.0j
    w = bra.grid.weights
    for j in range(bra.grid.n_points):
        total += w[j] * np.conj(bra.amplitudes[j]) * ket.amplitudes[j]
    return total
