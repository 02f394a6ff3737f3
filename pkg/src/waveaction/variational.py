"""Action-functional machinery: the two Lagrangian densities, action
integrals over trajectories, stationarity probes, and Rayleigh-Ritz
minimization over parameterized trial families.

Two pointwise densities are computed.  The compact one,

    L = psi* (i hbar d_t - H) psi,

carries second spatial derivatives through H.  The first-order one,

    L1 = Re[psi* i hbar d_t psi] - |P psi|^2 / 2m - (V + q A0) |psi|^2,

is real by construction.  Its kinetic term is assembled from forward
(link) differences, which makes the spatial integrals of L and L1 agree
to rounding for zero vector potential: the discrete summation-by-parts
identity sum |D+ psi|^2 = -sum psi* lap psi holds exactly, so the two
actions differ only by the time-derivative total term and boundary
fluxes, exactly as in the continuum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .grids import (
    Grid,
    Wavefunction,
    central_difference,
    gaussian_wavepacket,
    normalize,
    quadrature,
)
from .hamiltonian import (
    HamiltonianConfig,
    apply_mechanical_momentum,
    energy,
    hamiltonian_matrix,
    mean_field_density_values,
)
from .propagation import Trajectory


@dataclass(frozen=True, eq=False)
class LagrangianSample:
    """Pointwise values of both densities and their divergence difference."""

    l_simple: np.ndarray
    l_standard: np.ndarray
    divergence_term: np.ndarray
    time: float

    @property
    def sil(self) -> np.ndarray:
        """The real-part density Re L (a derived view, not a separate assembly)."""
        return self.l_simple.real


@dataclass(frozen=True)
class ActionValue:
    value: float
    time_window: tuple
    dt: float
    which_density: str


@dataclass(frozen=True, eq=False)
class StationarityResult:
    """Action increments per perturbation amplitude and their log-log slope."""

    points: tuple
    slope: float


@dataclass(frozen=True, eq=False)
class TrialFamily:
    """Named map from a parameter vector to a normalized trial state."""

    name: str
    parameter_names: tuple
    build: Callable[[np.ndarray, Grid], Wavefunction]
    parameter_bounds: tuple


@dataclass(frozen=True, eq=False)
class RayleighRitzResult:
    params: np.ndarray
    energy: float
    history: np.ndarray
    converged: bool
    message: str


def _effective_hamiltonian(cfg: HamiltonianConfig, psi: Wavefunction, t: float):
    """H with the variational half-weight mean field (linear H if no interaction)."""
    extra = None
    if cfg.interaction is not None:
        density = np.abs(psi.amplitudes) ** 2
        extra = 0.5 * mean_field_density_values(cfg.interaction, psi.grid, density)
    return hamiltonian_matrix(cfg, psi.grid, t, extra), extra


def _forward_kinetic_density(cfg: HamiltonianConfig, psi: Wavefunction, t: float) -> np.ndarray:
    """|P psi|^2 / 2m per link, with P on forward differences (staggered A)."""
    c = cfg.constants
    grid = psi.grid
    amp = psi.amplitudes
    a = cfg.a_vec.evaluate(grid, t)
    if grid.is_periodic:
        d_plus = (np.roll(amp, -1) - amp) / grid.dx
        a_link = 0.5 * (a + np.roll(a, -1))
        amp_link = 0.5 * (amp + np.roll(amp, -1))
    else:
        d_plus = np.zeros_like(amp)
        d_plus[:-1] = (amp[1:] - amp[:-1]) / grid.dx
        a_link = np.zeros_like(a)
        a_link[:-1] = 0.5 * (a[:-1] + a[1:])
        amp_link = np.zeros_like(amp)
        amp_link[:-1] = 0.5 * (amp[:-1] + amp[1:])
    p_plus = -1j * c.hbar * d_plus - c.charge * a_link * amp_link
    return np.abs(p_plus) ** 2 / (2.0 * c.mass)


def lagrangian_densities(
    cfg: HamiltonianConfig,
    psi: Wavefunction,
    dpsi_dt: Wavefunction,
    t: float = 0.0,
) -> LagrangianSample:
    """Evaluate both densities at one instant, given the time derivative.

    The time derivative is supplied externally (finite differences on a
    trajectory, or an analytic rate).  For mean-field configurations the
    interaction enters with the variational half weight, so the action
    built from these densities is stationary on mean-field trajectories.
    """
    if dpsi_dt.grid is not psi.grid and dpsi_dt.grid.n_points != psi.grid.n_points:
        raise ValueError("state and its time derivative live on different grids")
    c = cfg.constants
    grid = psi.grid
    amp = psi.amplitudes
    damp = dpsi_dt.amplitudes

    h_eff, extra = _effective_hamiltonian(cfg, psi, t)
    h_psi = h_eff.matvec(amp)
    l_simple = np.conj(amp) * (1j * c.hbar * damp - h_psi)

    time_part = -c.hbar * np.imag(np.conj(amp) * damp)
    kinetic = _forward_kinetic_density(cfg, psi, t)
    scalar = cfg.v1.evaluate(grid, t) + c.charge * cfg.a0.evaluate(grid, t)
    if extra is not None:
        scalar = scalar + extra
    l_standard = time_part - kinetic - scalar * np.abs(amp) ** 2

    flux = np.imag(np.conj(amp) * apply_mechanical_momentum(cfg, psi, t).amplitudes)
    divergence_term = -(c.hbar / (2.0 * c.mass)) * central_difference(grid, flux)
    return LagrangianSample(l_simple, l_standard, divergence_term, t)


def _time_derivatives(states, times) -> list:
    """Centered differences at interior snapshots, one-sided at the ends."""
    k_last = len(states) - 1
    out = []
    for k in range(len(states)):
        if k == 0:
            d = (states[1].amplitudes - states[0].amplitudes) / (times[1] - times[0])
        elif k == k_last:
            d = (states[k].amplitudes - states[k - 1].amplitudes) / (times[k] - times[k - 1])
        else:
            d = (states[k + 1].amplitudes - states[k - 1].amplitudes) / (times[k + 1] - times[k - 1])
        out.append(d)
    return out


def _check_uniform(times: np.ndarray) -> float:
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("trajectory snapshots must be uniformly spaced in time")
    return float(steps[0])


def _density_integrals(cfg: HamiltonianConfig, traj: Trajectory):
    """Per-snapshot spatial integrals of both densities."""
    states = traj.states
    times = traj.times
    if len(states) < 3:
        raise ValueError("need at least 3 snapshots to integrate the action")
    _check_uniform(times)
    grid = traj.grid
    simple = np.empty(len(states), dtype=complex)
    standard = np.empty(len(states))
    derivs = _time_derivatives(states, times)
    for k, (state, damp) in enumerate(zip(states, derivs)):
        sample = lagrangian_densities(
            cfg, state, Wavefunction(grid, damp, times[k]), times[k]
        )
        simple[k] = quadrature(grid, sample.l_simple)
        standard[k] = quadrature(grid, sample.l_standard).real
    return simple, standard, times


def action(cfg: HamiltonianConfig, traj: Trajectory, which: str = "simple") -> ActionValue:
    """Trapezoidal time integral of the spatial integral of the chosen density.

    The stored value is the real part; the imaginary part of the compact
    density integrates to the norm change and vanishes on unitary
    trajectories (see lagrangian_reality_deviations).
    """
    if which not in ("simple", "standard"):
        raise ValueError("which must be 'simple' or 'standard'")
    simple, standard, times = _density_integrals(cfg, traj)
    series = simple.real if which == "simple" else standard
    value = float(np.trapezoid(series, times))
    return ActionValue(
        value=value,
        time_window=(float(times[0]), float(times[-1])),
        dt=float(times[1] - times[0]),
        which_density=which,
    )


def lagrangian_reality_deviations(cfg: HamiltonianConfig, traj: Trajectory) -> np.ndarray:
    """|Im integral of the compact density| at each interior snapshot.

    Interior snapshots only: the one-sided time derivatives at the window
    endpoints carry a first-order phase error that is not a statement
    about the density itself.
    """
    simple, _, _ = _density_integrals(cfg, traj)
    return np.abs(simple.imag[1:-1])


def stationarity_test(
    cfg: HamiltonianConfig,
    traj: Trajectory,
    perturbation: Wavefunction,
    epsilons: Sequence[float],
) -> StationarityResult:
    """Measure how the action responds to psi -> psi + eps * window * eta.

    The spatial envelope eta is supplied; a sin^2 window in time makes the
    perturbation vanish at both endpoints of the trajectory, as the
    variational boundary conditions require.  Returns the action change
    for each epsilon and the least-squares slope of log|dS| vs log eps
    (2 on solution trajectories, 1 off-shell).
    """
    eps_list = [float(e) for e in epsilons]
    positive = sorted({e for e in eps_list if e > 0})
    if len(positive) < 2:
        raise ValueError("need at least two distinct positive epsilons for a slope")
    if perturbation.grid.n_points != traj.grid.n_points:
        raise ValueError("perturbation envelope lives on a different grid")
    states = traj.states
    times = traj.times
    grid = traj.grid
    window = np.sin(np.pi * (times - times[0]) / (times[-1] - times[0])) ** 2
    base = action(cfg, traj, "simple").value

    def perturbed_action(eps: float) -> float:
        snaps = tuple(
            (times[k], Wavefunction(grid, states[k].amplitudes + eps * window[k] * perturbation.amplitudes, times[k]))
            for k in range(len(states))
        )
        return action(cfg, Trajectory(snaps, traj.record_stride), "simple").value

    points = []
    for eps in eps_list:
        delta = perturbed_action(eps) - base if eps != 0.0 else 0.0
        points.append((eps, delta))
    fit_points = [(e, d) for e, d in points if e > 0]
    if any(d == 0.0 for _, d in fit_points):
        raise ValueError("degenerate epsilon list: zero action change at nonzero epsilon")
    log_e = np.log([e for e, _ in fit_points])
    log_d = np.log([abs(d) for _, d in fit_points])
    slope = float(np.polyfit(log_e, log_d, 1)[0])
    return StationarityResult(points=tuple(points), slope=slope)


def gaussian_family(
    center_bounds=(-5.0, 5.0), width_bounds=(0.05, 20.0)
) -> TrialFamily:
    """Normalized Gaussians exp(-(x-c)^2 / 4 w^2) with free center and width."""

    def build(params: np.ndarray, grid: Grid) -> Wavefunction:
        center, width = params
        return gaussian_wavepacket(grid, center=center, width=width)

    return TrialFamily(
        name="gaussian",
        parameter_names=("center", "width"),
        build=build,
        parameter_bounds=(tuple(center_bounds), tuple(width_bounds)),
    )


def gaussian_phase_family(
    center_bounds=(-5.0, 5.0), width_bounds=(0.05, 20.0), wavenumber_bounds=(-10.0, 10.0)
) -> TrialFamily:
    """Gaussians with an extra plane-wave phase (a velocity parameter)."""

    def build(params: np.ndarray, grid: Grid) -> Wavefunction:
        center, width, wavenumber = params
        return gaussian_wavepacket(grid, center=center, width=width, wavenumber=wavenumber)

    return TrialFamily(
        name="gaussian-phase",
        parameter_names=("center", "width", "wavenumber"),
        build=build,
        parameter_bounds=(tuple(center_bounds), tuple(width_bounds), tuple(wavenumber_bounds)),
    )


def box_sine_family(coefficient_bounds=(-5.0, 5.0)) -> TrialFamily:
    """Mixture of the three lowest box sine modes, first coefficient fixed to 1."""

    def build(params: np.ndarray, grid: Grid) -> Wavefunction:
        c2, c3 = params
        length = grid.x_max - grid.x_min
        xi = (grid.x - grid.x_min) / length
        amp = np.sin(np.pi * xi) + c2 * np.sin(2 * np.pi * xi) + c3 * np.sin(3 * np.pi * xi)
        return normalize(Wavefunction(grid, amp.astype(complex)))

    return TrialFamily(
        name="box-sine",
        parameter_names=("c2", "c3"),
        build=build,
        parameter_bounds=(tuple(coefficient_bounds), tuple(coefficient_bounds)),
    )


def rayleigh_ritz_minimize(
    cfg: HamiltonianConfig,
    family: TrialFamily,
    initial_params,
    *,
    grid: Grid,
    t: float = 0.0,
    max_iter: int = 500,
    energy_tol: float = 1e-10,
    param_tol: float = 1e-8,
) -> RayleighRitzResult:
    """Minimize <phi|H|phi> over the family by Nelder-Mead simplex.

    The family builds normalized states, so the normalization constraint
    is enforced by construction and the returned energy is an upper bound
    on the ground-state energy of the discretized Hamiltonian.  Parameter
    vectors that fail to build (or give non-finite energy) are treated as
    infinitely bad vertices, which shrinks the simplex and continues.
    """
    x0 = np.asarray(initial_params, dtype=float)
    if x0.shape != (len(family.parameter_names),):
        raise ValueError(
            f"family {family.name!r} takes {len(family.parameter_names)} parameters"
        )
    for value, (lo, hi) in zip(x0, family.parameter_bounds):
        if not (lo <= value <= hi):
            raise ValueError(f"initial parameters outside bounds {family.parameter_bounds}")

    history = []

    def objective(params: np.ndarray) -> float:
        try:
            e = energy(cfg, family.build(params, grid), t)
        except (ValueError, FloatingPointError, ZeroDivisionError):
            return np.inf
        if not np.isfinite(e):
            return np.inf
        history.append(e)
        return e

    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=family.parameter_bounds,
        options={"maxiter": max_iter, "fatol": energy_tol, "xatol": param_tol},
    )
    best = float(result.fun)
    return RayleighRitzResult(
        params=np.asarray(result.x, dtype=float),
        energy=best,
        history=np.array(history),
        converged=bool(result.success and np.isfinite(best)),
        message=str(result.message),
    )
