"""Quantum-jump Monte Carlo unraveling, used as a brute-force oracle.

Each trajectory is a pure state of the atom. Over a step ``dt`` a photon is
emitted into channel ``j`` with probability ``dt |C_j psi|^2``, where
``C_j = R_j + lambda_j`` is the outgoing-field jump operator; otherwise the
state is propagated with ``1 - i dt K`` and renormalized. Averaging
``|psi><psi|`` over trajectories reproduces the master-equation solution up
to O(dt) bias and statistical error, and the mean jump count reproduces the
mean photon number.

Random numbers: trajectory ``i`` owns the stream seeded by
``SeedSequence(seed, spawn_key=(i,))``, so adding trajectories never
reshuffles the earlier ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .dynamics import BlochState, photon_count, default_step
from .errors import NonFinite, StepTooLarge
from .model import Drive, HPModel, rotating_generators
from .numerics import trace_distance

STEP_LIMIT = 0.05
_CHUNK = 1024


@dataclass(frozen=True)
class TrajectoryEnsemble:
    times: NDArray[np.float64]
    rho: NDArray[np.complex128]  # (samples, 2, 2)
    mean_jumps: NDArray[np.float64]  # (samples, channels)
    final_counts: NDArray[np.int64]  # (n_traj, channels)
    n_traj: int
    seed: int
    dt: float

    @property
    def mean_total_jumps(self) -> NDArray[np.float64]:
        return self.mean_jumps.sum(axis=1)

    @property
    def u(self) -> NDArray[np.float64]:
        return self.rho[:, 0, 0].real

    @property
    def v(self) -> NDArray[np.complex128]:
        return self.rho[:, 0, 1]


def step_limit(model: HPModel, drive: Drive) -> float:
    """Largest ``dt`` with ``max_j ||C_j^dagger C_j|| dt <= 0.05``."""
    C = rotating_generators(model, drive).counting_jumps
    rate = max(np.linalg.norm(c.conj().T @ c, ord=2) for c in C)
    return STEP_LIMIT / rate


def default_dt(model: HPModel, drive: Drive) -> float:
    return 0.01 * step_limit(model, drive)


def _streams(seed: int, n_traj: int) -> list[np.random.Generator]:
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))) for i in range(n_traj)]


def jump_monte_carlo(
    model: HPModel,
    drive: Drive,
    initial: BlochState,
    t_end: float,
    dt: float | None = None,
    n_traj: int = 1000,
    seed: int = 0,
    n_samples: int = 50,
) -> TrajectoryEnsemble:
    """Run ``n_traj`` first-order jump trajectories over ``[0, t_end]``.

    ``dt`` is shrunk so that an integer number of steps lands on ``t_end``;
    ensemble averages are recorded on ``n_samples + 1`` equally spaced times.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    gens = rotating_generators(model, drive)
    C = gens.counting_jumps
    if dt is None:
        dt = default_dt(model, drive)
    limit = step_limit(model, drive)
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt:.3g} exceeds the jump-probability limit {limit:.3g}")

    n_samples = max(1, int(n_samples))
    steps_per_sample = max(1, int(np.ceil(t_end / (dt * n_samples))))
    n_steps = steps_per_sample * n_samples
    dt = t_end / n_steps if t_end > 0 else dt
    times = dt * steps_per_sample * np.arange(n_samples + 1)

    no_jump = np.eye(2) - 1j * dt * gens.counting_hamiltonian - 0.5 * dt * gens.counting_operator
    n_ch = C.shape[0]

    rngs = _streams(seed, n_traj)
    # initial pure states drawn from the eigen-decomposition of rho(0)
    evals, evecs = np.linalg.eigh(initial.density)
    evals = np.clip(evals, 0, None)
    cum = np.cumsum(evals) / evals.sum()
    first = np.array([g.random() for g in rngs])
    pick = np.minimum(np.searchsorted(cum, first, side="right"), 1)
    psi = evecs[:, pick].T.astype(complex)  # (n_traj, 2)

    counts = np.zeros((n_traj, n_ch), dtype=np.int64)
    rho_s = np.empty((n_samples + 1, 2, 2), dtype=complex)
    jumps_s = np.empty((n_samples + 1, n_ch))
    rho_s[0] = np.einsum("ta,tb->ab", psi, psi.conj()) / n_traj
    jumps_s[0] = 0.0

    rows = np.arange(n_traj)
    draws = np.empty((n_traj, 0))
    for step in range(n_steps):
        k = step % _CHUNK
        if k == 0:
            width = min(_CHUNK, n_steps - step)
            draws = np.stack([g.random(width) for g in rngs])
        r = draws[:, k]
        Cpsi = np.einsum("jab,tb->tja", C, psi)
        p = dt * np.sum(np.abs(Cpsi) ** 2, axis=2)  # (n_traj, n_ch)
        cp = np.cumsum(p, axis=1)
        jumped = r < cp[:, -1]
        new = psi @ no_jump.T
        if np.any(jumped):
            idx = rows[jumped]
            ch = np.argmax(cp[idx] > r[idx, None], axis=1)
            new[idx] = Cpsi[idx, ch]
            np.add.at(counts, (idx, ch), 1)
        psi = new / np.linalg.norm(new, axis=1, keepdims=True)
        if (step + 1) % steps_per_sample == 0:
            s = (step + 1) // steps_per_sample
            if not np.all(np.isfinite(psi)):
                raise NonFinite(f"trajectory state became non-finite at t = {times[s]:.6g}")
            rho_s[s] = np.einsum("ta,tb->ab", psi, psi.conj()) / n_traj
            jumps_s[s] = counts.mean(axis=0)

    rho_s = (rho_s + rho_s.conj().transpose(0, 2, 1)) / 2
    return TrajectoryEnsemble(times, rho_s, jumps_s, counts, n_traj, seed, dt)


@dataclass(frozen=True)
class OracleReport:
    times: NDArray[np.float64]
    trace_distance: NDArray[np.float64]
    u_rk4: NDArray[np.float64]
    u_mc: NDArray[np.float64]
    N_rk4: NDArray[np.float64]
    N_mc: NDArray[np.float64]
    bound: float

    @property
    def count_error(self) -> NDArray[np.float64]:
        return np.abs(self.N_mc - self.N_rk4)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.trace_distance <= self.bound) and np.all(self.count_error <= self.bound))


def compare_with_rk4(
    model: HPModel,
    drive: Drive,
    initial: BlochState,
    t_end: float,
    n_traj: int = 2000,
    seed: int = 0,
    dt: float | None = None,
    n_samples: int = 50,
) -> OracleReport:
    """Jump ensemble against the deterministic integrator at common sample times.

    The bound is ``4 / sqrt(n_traj)``.
    """
    ens = jump_monte_carlo(model, drive, initial, t_end, dt, n_traj, seed, n_samples)
    interval = ens.times[1] - ens.times[0]
    sub = int(np.ceil(interval / default_step(model, drive)))
    rec = photon_count(model, drive, initial, t_end, interval / sub)
    idx = np.rint(ens.times / (interval / sub)).astype(int)
    idx = np.minimum(idx, len(rec.times) - 1)
    rho_rk = np.array([[[u, v], [np.conj(v), 1 - u]] for u, v in zip(rec.u[idx], rec.v[idx])])
    td = np.array([trace_distance(a, b) for a, b in zip(ens.rho, rho_rk)])
    return OracleReport(
        ens.times, td, rec.u[idx], ens.u, rec.N_mean[idx], ens.mean_total_jumps, 4 / np.sqrt(n_traj)
    )
