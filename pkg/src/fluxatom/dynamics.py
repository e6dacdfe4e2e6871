"""Bloch-vector dynamics, equilibrium and mean photon counting.

The rotating-frame atomic state is parametrized as

    rho = [[u, v], [conj(v), 1 - u]]

and evolves by the affine system ``d/dt (u, v, conj v) = G (u, v, conj v) - w``.
The cumulative photon count is carried as a fourth component so that RK4
integrates it with the same order as the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ClosedFormMismatch, StateOutOfDomain, ZeroDrive
from .model import Drive, GSystem, HPModel, RotatingGenerators, g_system, rotating_generators
from .numerics import SIGMA_Z, rk4_affine_evolve, solve_linear3

DOMAIN_SLACK = 1e-9
CLOSED_FORM_RTOL = 1e-9


@dataclass(frozen=True)
class BlochState:
    """Atomic density matrix in ``(u, v)`` form at time ``t``."""

    u: float
    v: complex
    t: float = 0.0

    def __post_init__(self):
        u, v = float(self.u), complex(self.v)
        if not (-DOMAIN_SLACK <= u <= 1 + DOMAIN_SLACK) or u - u * u - abs(v) ** 2 < -DOMAIN_SLACK:
            raise StateOutOfDomain(f"(u, v) = ({u}, {v}) is not a density matrix")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def excited(cls) -> "BlochState":
        return cls(1.0, 0.0)

    @classmethod
    def ground(cls) -> "BlochState":
        return cls(0.0, 0.0)

    @classmethod
    def from_pure(cls, psi: ArrayLike) -> "BlochState":
        """State of the normalized vector ``psi = (c_plus, c_minus)``."""
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(abs(psi[0]) ** 2, psi[0] * np.conj(psi[1]))

    @classmethod
    def from_density(cls, rho: ArrayLike, t: float = 0.0) -> "BlochState":
        rho = np.asarray(rho, dtype=complex)
        return cls(rho[0, 0].real, rho[0, 1], t)

    @property
    def density(self) -> NDArray[np.complex128]:
        return np.array([[self.u, self.v], [np.conj(self.v), 1 - self.u]], dtype=complex)

    @property
    def vector(self) -> NDArray[np.complex128]:
        return np.array([self.u, self.v, np.conj(self.v)], dtype=complex)


def densities(u: NDArray, v: NDArray) -> NDArray[np.complex128]:
    """Stack of 2x2 density matrices for arrays ``u``, ``v``."""
    rho = np.empty(np.shape(u) + (2, 2), dtype=complex)
    rho[..., 0, 0] = u
    rho[..., 0, 1] = v
    rho[..., 1, 0] = np.conj(v)
    rho[..., 1, 1] = 1 - np.asarray(u)
    return rho


@dataclass(frozen=True)
class BlochTrajectory:
    times: NDArray[np.float64]
    u: NDArray[np.float64]
    v: NDArray[np.complex128]

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> BlochState:
        return BlochState(self.u[i], self.v[i], self.times[i])

    @property
    def final(self) -> BlochState:
        return self[-1]

    def densities(self) -> NDArray[np.complex128]:
        return densities(self.u, self.v)


@dataclass(frozen=True)
class SteadyState:
    u_inf: float
    v_inf: complex
    rho_eq: NDArray[np.complex128]
    u_closed: float
    v_closed: complex

    @property
    def closed_form_residual(self) -> float:
        """Relative disagreement between the linear solve and the closed forms."""
        scale = max(abs(self.u_inf) + abs(self.v_inf), abs(self.u_closed) + abs(self.v_closed))
        if scale == 0:
            return 0.0
        return (abs(self.u_inf - self.u_closed) + abs(self.v_inf - self.v_closed)) / scale

    @property
    def state(self) -> BlochState:
        return BlochState(self.u_inf, self.v_inf, np.inf)


@dataclass(frozen=True)
class CountingRecord:
    """Mean photon counting along a trajectory.

    ``emission_rate`` is the mean rate of outgoing photons (scattered plus
    transmitted beam); ``scattered_rate`` the rate generated by the jump
    operators ``R_j`` alone; ``Y`` the balance residual.
    """

    times: NDArray[np.float64]
    u: NDArray[np.float64]
    v: NDArray[np.complex128]
    N_mean: NDArray[np.float64]
    emission_rate: NDArray[np.float64]
    scattered_rate: NDArray[np.float64]
    Y: NDArray[np.float64]
    flux: float


def default_step(model: HPModel, drive: Drive, gs: GSystem | None = None) -> float:
    """Step resolving the fastest scale of the Bloch system."""
    gs = gs or g_system(model, drive)
    scale = max(
        model.alpha_norm2,
        gs.kappa2,
        abs(gs.delta_omega),
        abs(model.omega0 - drive.omega),
        gs.rabi,
        1.0,
    )
    return 0.01 / scale


def _rate_row(op: NDArray) -> tuple[NDArray, complex]:
    # Tr(op rho) = (op00 - op11) u + op10 v + op01 conj(v) + op11
    return np.array([op[0, 0] - op[1, 1], op[1, 0], op[0, 1]]), op[1, 1]


def _expectation(op: NDArray, u: NDArray, v: NDArray) -> NDArray[np.float64]:
    row, const = _rate_row(op)
    return (row[0] * u + row[1] * v + row[2] * np.conj(v) + const).real


def _integrate(model: HPModel, drive: Drive, initial: BlochState, t_end: float, h: float | None):
    gs = g_system(model, drive)
    gens = rotating_generators(model, drive)
    if h is None:
        h = default_step(model, drive, gs)
    row, const = _rate_row(gens.counting_operator)
    A = np.zeros((4, 4), dtype=complex)
    A[:3, :3] = gs.G
    A[3, :3] = row
    c = np.concatenate([-gs.w, [const]])
    y0 = np.concatenate([initial.vector, [0.0]])
    times, ys = rk4_affine_evolve(A, c, y0, t_end, h)
    u = ys[:, 0].real
    v = ys[:, 1]
    _check_domain(times, u, v)
    return times + initial.t, u, v, ys[:, 3].real, gs, gens


def _check_domain(times: NDArray, u: NDArray, v: NDArray) -> None:
    bad = (u < -DOMAIN_SLACK) | (u > 1 + DOMAIN_SLACK) | (u - u * u - np.abs(v) ** 2 < -DOMAIN_SLACK)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise StateOutOfDomain(
            f"state left the density-matrix domain at t = {times[i]:.6g} "
            f"(u = {u[i]:.12g}, |v| = {abs(v[i]):.12g}); reduce the step"
        )


def evolve(
    model: HPModel,
    drive: Drive,
    initial: BlochState,
    t_end: float,
    h: float | None = None,
) -> BlochTrajectory:
    """Integrate the Bloch system from ``initial`` over ``[0, t_end]`` with RK4."""
    times, u, v, _, _, _ = _integrate(model, drive, initial, t_end, h)
    return BlochTrajectory(times, u, v)


def steady_state(model: HPModel, drive: Drive) -> SteadyState:
    """Equilibrium ``(u, v)`` from ``G^{-1} w``, cross-checked against the closed forms."""
    gs = g_system(model, drive)
    x = solve_linear3(gs.G, gs.w)
    u_inf, v_inf = float(x[0].real), complex(x[1])

    denom = gs.delta_omega**2 + gs.Gamma2 / 4
    u_cf = gs.kappa2 * gs.Pa_Sm_lam_norm2 / denom
    v_cf = -gs.alpha_Sm_lam / denom * (gs.kappa2 / 2 + 1j * gs.delta_omega + 1j * gs.im_shift_alpha)

    ss = SteadyState(u_inf, v_inf, densities(u_inf, v_inf), float(u_cf), complex(v_cf))
    if ss.closed_form_residual > CLOSED_FORM_RTOL:
        raise ClosedFormMismatch(
            f"steady state: solve ({u_inf}, {v_inf}) vs closed form ({u_cf}, {v_cf})"
        )
    return ss


def photon_count(
    model: HPModel,
    drive: Drive,
    initial: BlochState,
    t_end: float,
    h: float | None = None,
) -> CountingRecord:
    """Mean cumulative photon number and the balance residual ``Y(t)``."""
    times, u, v, N, _, gens = _integrate(model, drive, initial, t_end, h)
    rate = _expectation(gens.counting_operator, u, v)
    scattered = _expectation(gens.decay_operator, u, v)
    elapsed = times - times[0]
    half_sz = 0.5 * np.trace(SIGMA_Z @ densities(u, v), axis1=-2, axis2=-1).real
    Y = N + half_sz - half_sz[0] - drive.flux * elapsed
    return CountingRecord(times, u, v, N, rate, scattered, Y, drive.flux)


def flux_ratio(
    model: HPModel,
    drive: Drive,
    initial: BlochState,
    t_end: float,
    h: float | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``<N(t)> / (||lambda||^2 t)`` at every positive sample time."""
    if drive.flux == 0:
        raise ZeroDrive("flux ratio needs a nonzero drive")
    rec = photon_count(model, drive, initial, t_end, h)
    elapsed = rec.times - rec.times[0]
    keep = elapsed > 0
    return rec.times[keep], rec.N_mean[keep] / (drive.flux * elapsed[keep])
