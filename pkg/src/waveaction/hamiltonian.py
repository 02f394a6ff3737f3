"""Minimal-coupling Hamiltonian assembly and energy functionals.

The Hamiltonian is H = P^2/2m + q A0 + V1 (+ mean field), with the
mechanical momentum P = -i hbar d/dx - q A.  The kinetic-plus-coupling
block is discretized in the expanded, symmetric tridiagonal form

    P^2 psi = -hbar^2 lap(psi) + i hbar q [D(A psi) + A D(psi)] + q^2 A^2 psi

(central stencils D and lap), which keeps every operator tridiagonal in
1-D and Hermitian under the grid quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grids import (
    DIRICHLET,
    Grid,
    Wavefunction,
    central_difference,
    norm,
    quadrature,
)


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, particle mass, and charge; defaults are natural units."""

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError("hbar must be positive and finite")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        if not np.isfinite(self.charge):
            raise ValueError("charge must be finite")


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Scalar field on the grid: named analytic form, samples, or callable of time.

    Kinds: "free", "harmonic" (0.5 * omega^2 (x-c)^2), "quartic"
    (strength (x-c)^4), "box" (height outside |x-c| <= half_width),
    "sampled" (fixed array), "callable" (f(x, t) -> array).
    """

    kind: str
    params: tuple = ()
    values: Optional[np.ndarray] = None
    func: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    @classmethod
    def free(cls) -> "PotentialField":
        return cls("free")

    @classmethod
    def harmonic(cls, omega: float = 1.0, center: float = 0.0) -> "PotentialField":
        _check_finite_params(omega, center)
        return cls("harmonic", (float(omega), float(center)))

    @classmethod
    def quartic(cls, strength: float = 1.0, center: float = 0.0) -> "PotentialField":
        _check_finite_params(strength, center)
        return cls("quartic", (float(strength), float(center)))

    @classmethod
    def box(cls, height: float, half_width: float, center: float = 0.0) -> "PotentialField":
        _check_finite_params(height, half_width, center)
        if half_width <= 0:
            raise ValueError("box half_width must be positive")
        return cls("box", (float(height), float(half_width), float(center)))

    @classmethod
    def from_samples(cls, values) -> "PotentialField":
        arr = np.asarray(values, dtype=float).copy()
        if arr.ndim != 1:
            raise ValueError("sampled potential must be a 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sampled potential must be finite")
        arr.setflags(write=False)
        return cls("sampled", values=arr)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray, float], np.ndarray]) -> "PotentialField":
        return cls("callable", func=func)

    @property
    def is_static(self) -> bool:
        return self.kind != "callable"

    def evaluate(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        x = grid.x
        if self.kind == "free":
            return np.zeros(grid.n_points)
        if self.kind == "harmonic":
            omega, center = self.params
            return 0.5 * omega**2 * (x - center) ** 2
        if self.kind == "quartic":
            strength, center = self.params
            return strength * (x - center) ** 4
        if self.kind == "box":
            height, half_width, center = self.params
            return np.where(np.abs(x - center) > half_width, height, 0.0)
        if self.kind == "sampled":
            if len(self.values) != grid.n_points:
                raise ValueError(
                    f"sampled potential has {len(self.values)} points, grid has {grid.n_points}"
                )
            return self.values
        if self.kind == "callable":
            out = np.asarray(self.func(x, t), dtype=float)
            if out.shape != x.shape:
                raise ValueError("callable potential returned wrong shape")
            if not np.all(np.isfinite(out)):
                raise ValueError("callable potential returned non-finite values")
            return out
        raise ValueError(f"unknown potential kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class TwoBodyInteraction:
    """Pair interaction: contact strength g or a symmetric kernel matrix."""

    kind: str
    n_particles: int
    g: float = 0.0
    kernel: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")
        if self.kind == "contact":
            if not np.isfinite(self.g):
                raise ValueError("contact strength must be finite")
        elif self.kind == "kernel":
            k = self.kernel
            if k is None or k.ndim != 2 or k.shape[0] != k.shape[1]:
                raise ValueError("kernel must be a square matrix")
            if not np.array_equal(k, k.T):
                raise ValueError("two-body kernel must be symmetric")
        else:
            raise ValueError(f"unknown interaction kind {self.kind!r}")

    @classmethod
    def contact(cls, g: float, n_particles: int) -> "TwoBodyInteraction":
        return cls("contact", int(n_particles), g=float(g))

    @classmethod
    def from_kernel(cls, kernel, n_particles: int) -> "TwoBodyInteraction":
        arr = np.asarray(kernel, dtype=float).copy()
        arr.setflags(write=False)
        return cls("kernel", int(n_particles), kernel=arr)


@dataclass(frozen=True, eq=False)
class HamiltonianConfig:
    """One-body potential, electromagnetic potentials, and optional interaction."""

    constants: PhysicalConstants = PhysicalConstants()
    v1: PotentialField = PotentialField.free()
    a0: PotentialField = PotentialField.free()
    a_vec: PotentialField = PotentialField.free()
    interaction: Optional[TwoBodyInteraction] = None

    @property
    def is_static(self) -> bool:
        return self.v1.is_static and self.a0.is_static and self.a_vec.is_static


def _check_finite_params(*vals: float) -> None:
    if not all(np.isfinite(v) for v in vals):
        raise ValueError("potential parameters must be finite")


def mean_field_density_values(
    interaction: TwoBodyInteraction, grid: Grid, density: np.ndarray
) -> np.ndarray:
    """(N-1)-weighted mean-field potential from a given density array."""
    n_minus_1 = interaction.n_particles - 1
    if interaction.kind == "contact":
        return n_minus_1 * interaction.g * density
    if interaction.kernel.shape[0] != grid.n_points:
        raise ValueError(
            f"kernel is {interaction.kernel.shape[0]}x{interaction.kernel.shape[0]}, "
            f"grid has {grid.n_points} points"
        )
    return n_minus_1 * (interaction.kernel @ (grid.weights * density))


def mean_field_potential(interaction: TwoBodyInteraction, phi: Wavefunction) -> PotentialField:
    """Average potential on one particle due to the other N-1, from orbital phi.

    Contact kind gives (N-1) g |phi|^2; kernel kind the quadrature
    (N-1) sum_x' V2(x, x') |phi(x')|^2.  Real-valued by construction.
    """
    n = norm(phi)
    if abs(n - 1.0) > 1e-6:
        warnings.warn(
            f"mean-field source norm is {n:.6g}, expected 1 (proceeding anyway)",
            RuntimeWarning,
            stacklevel=2,
        )
    density = np.abs(phi.amplitudes) ** 2
    return PotentialField.from_samples(mean_field_density_values(interaction, phi.grid, density))


class TridiagonalHamiltonian:
    """Matrix view of H on the grid: diagonal, off-diagonals, periodic corners.

    upper[j] = H[j, j+1], lower[j] = H[j+1, j]; for periodic grids
    corner_first_last = H[0, n-1] and corner_last_first = H[n-1, 0].
    The operator acts on the interior for Dirichlet grids (endpoints clamped).
    """

    def __init__(self, grid: Grid, diag, upper, lower, corner_first_last=0j, corner_last_first=0j):
        self.grid = grid
        self.diag = diag
        self.upper = upper
        self.lower = lower
        self.corner_first_last = corner_first_last
        self.corner_last_first = corner_last_first

    def matvec(self, amp: np.ndarray) -> np.ndarray:
        out = self.diag * amp
        out[:-1] += self.upper * amp[1:]
        out[1:] += self.lower * amp[:-1]
        if self.grid.is_periodic:
            out[0] += self.corner_first_last * amp[-1]
            out[-1] += self.corner_last_first * amp[0]
        else:
            out[0] = 0.0
            out[-1] = 0.0
        return out


def hamiltonian_matrix(
    cfg: HamiltonianConfig,
    grid: Grid,
    t: float = 0.0,
    extra_diagonal: Optional[np.ndarray] = None,
) -> TridiagonalHamiltonian:
    """Assemble the tridiagonal matrix of H at time t.

    extra_diagonal adds a real potential to the diagonal (used for the
    mean-field term and for weighting choices in energy functionals).
    """
    c = cfg.constants
    dx = grid.dx
    kin = c.hbar**2 / (2.0 * c.mass * dx**2)
    v = cfg.v1.evaluate(grid, t) + c.charge * cfg.a0.evaluate(grid, t)
    a = cfg.a_vec.evaluate(grid, t)

    diag = (2.0 * kin + c.charge**2 * a**2 / (2.0 * c.mass) + v).astype(complex)
    if extra_diagonal is not None:
        diag = diag + extra_diagonal

    coup = 1j * c.hbar * c.charge / (4.0 * c.mass * dx)
    a_link = a[:-1] + a[1:]
    upper = -kin + coup * a_link
    lower = -kin - coup * a_link
    if grid.is_periodic:
        a_wrap = a[-1] + a[0]
        corner_fl = -kin - coup * a_wrap  # H[0, n-1]
        corner_lf = -kin + coup * a_wrap  # H[n-1, 0]
        return TridiagonalHamiltonian(grid, diag, upper, lower, corner_fl, corner_lf)
    return TridiagonalHamiltonian(grid, diag, upper, lower)


def _mean_field_diag(
    cfg: HamiltonianConfig, psi: Wavefunction, source: Optional[Wavefunction], weight: float
) -> Optional[np.ndarray]:
    if cfg.interaction is None:
        return None
    if source is None:
        raise ValueError("interaction configured but no mean-field source supplied")
    density = np.abs(source.amplitudes) ** 2
    return weight * mean_field_density_values(cfg.interaction, psi.grid, density)


def apply_mechanical_momentum(
    cfg: HamiltonianConfig, psi: Wavefunction, t: float = 0.0
) -> Wavefunction:
    """P psi = (-i hbar d/dx - q A(x, t)) psi with the central stencil."""
    c = cfg.constants
    a = cfg.a_vec.evaluate(psi.grid, t)
    out = -1j * c.hbar * central_difference(psi.grid, psi.amplitudes) - c.charge * a * psi.amplitudes
    return Wavefunction(psi.grid, out, psi.time)


def apply_hamiltonian(
    cfg: HamiltonianConfig,
    psi: Wavefunction,
    t: float = 0.0,
    mean_field_source: Optional[Wavefunction] = None,
) -> Wavefunction:
    """H psi, with the full-weight mean field when an interaction is configured.

    Reduces exactly to the linear Schrodinger Hamiltonian when the
    interaction is absent or N = 1.
    """
    extra = _mean_field_diag(cfg, psi, mean_field_source, 1.0)
    h = hamiltonian_matrix(cfg, psi.grid, t, extra)
    return Wavefunction(psi.grid, h.matvec(psi.amplitudes), psi.time)


def _expectation(cfg, psi, t, weight: float, source: Wavefunction) -> float:
    extra = _mean_field_diag(cfg, psi, source, weight)
    h = hamiltonian_matrix(cfg, psi.grid, t, extra)
    val = quadrature(psi.grid, np.conj(psi.amplitudes) * h.matvec(psi.amplitudes))
    if abs(val.imag) > 1e-8:
        raise RuntimeError(
            f"energy has imaginary part {val.imag:.3e}; Hamiltonian assembly is not Hermitian"
        )
    return float(val.real)


def energy(cfg: HamiltonianConfig, psi: Wavefunction, t: float = 0.0) -> float:
    """Energy functional <psi|H|psi> per particle.

    For mean-field configurations the interaction enters with weight 1/2,
    the weighting under which the energy is conserved by the mean-field
    dynamics.  Expects a normalized state.
    """
    return _expectation(cfg, psi, t, 0.5, psi)


def chemical_potential(cfg: HamiltonianConfig, phi: Wavefunction, t: float = 0.0) -> float:
    """<phi|H|phi> with the full-weight mean field (the nonlinear eigenvalue)."""
    return _expectation(cfg, phi, t, 1.0, phi)
