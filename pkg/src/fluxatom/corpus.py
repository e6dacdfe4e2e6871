"""Seeded random model corpora for identity checks and the CLI ``validate`` command."""

from __future__ import annotations

import numpy as np

from .model import Drive, HPModel
from .numerics import haar_unitary

DIMENSIONS = (1, 2, 3, 5)


def _complex_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)


def random_model(seed: int, n: int | None = None, drive_scale: float = 1.0) -> tuple[HPModel, Drive]:
    """One random (model, drive) pair.

    ``||alpha||^2`` lies in [0.5, 2], omega0 in [0.5, 2], the laser detuning
    within a few linewidths of omega0, and ``||lambda||^2`` in
    ``drive_scale * [0.1, 2] * ||alpha||^2``.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    if n is None:
        n = int(rng.choice(DIMENSIONS))
    a = _complex_normal(rng, n)
    alpha_norm2 = rng.uniform(0.5, 2.0)
    alpha = a / np.linalg.norm(a) * np.sqrt(alpha_norm2)
    l = _complex_normal(rng, n)
    flux = drive_scale * rng.uniform(0.1, 2.0) * alpha_norm2
    lam = l / np.linalg.norm(l) * np.sqrt(flux)
    omega0 = rng.uniform(0.5, 2.0)
    omega = omega0 + rng.uniform(-2.0, 2.0) * alpha_norm2
    omega = max(omega, 0.05)
    S_plus = haar_unitary(n, int(rng.integers(2**31)))
    S_minus = haar_unitary(n, int(rng.integers(2**31)))
    return HPModel(omega0, alpha, S_plus, S_minus), Drive(lam, omega)


def random_corpus(size: int, seed: int = 0, drive_scale: float = 1.0) -> list[tuple[HPModel, Drive]]:
    """``size`` models cycling through the dimensions 1, 2, 3, 5."""
    return [
        random_model(seed * 1_000_003 + k, n=DIMENSIONS[k % len(DIMENSIONS)], drive_scale=drive_scale)
        for k in range(size)
    ]


def random_spherical_model(seed: int, L: int = 4, eta_range: tuple[float, float] = (0.1, 2.0)):
    """Spherical model built from random phase shifts (so g+- respect unitarity).

    Phase shifts fall off with l; s-wave phases are uniform on (-pi, pi).
    """
    from .spherical import spherical_from_phase_shifts

    rng = np.random.default_rng([seed, 0x5FE4])
    decay = 0.6 ** np.arange(L + 1)
    dp = rng.uniform(-np.pi / 2, np.pi / 2, L + 1) * decay
    dm = rng.uniform(-np.pi / 2, np.pi / 2, L + 1) * decay
    alpha_norm = np.sqrt(rng.uniform(0.5, 2.0))
    eta = rng.uniform(*eta_range) * alpha_norm
    omega0 = rng.uniform(0.5, 2.0)
    return spherical_from_phase_shifts(
        dp, dm, alpha_norm, eta, omega0, omega0, delta=rng.uniform(0, 2 * np.pi), c_light=1.0
    )


def random_spherical_corpus(size: int, seed: int = 0, **kwargs) -> list:
    return [random_spherical_model(seed * 1_000_003 + k, **kwargs) for k in range(size)]
