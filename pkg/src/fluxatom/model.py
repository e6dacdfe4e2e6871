"""Atom-field coefficient model and its rotating-frame generators.

The one-particle space is C^n with the canonical basis. The scattering
matrix has the block form ``P+ (x) S+  +  P- (x) S-``; there is no slot for
off-diagonal blocks, so that structure holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatch,
    Gamma2Mismatch,
    NonPositiveFrequency,
    NonUnitaryS,
    ZeroAlpha,
)
from .numerics import (
    P_MINUS,
    P_PLUS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    as_finite_array,
    unitarity_defect,
)

UNITARITY_TOL = 1e-10
GAMMA2_RTOL = 1e-10


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HPModel:
    """Coefficients ``(omega0, alpha, S+, S-)`` of the two-level source."""

    omega0: float
    alpha: NDArray[np.complex128]
    S_plus: NDArray[np.complex128]
    S_minus: NDArray[np.complex128]

    def __post_init__(self):
        alpha = as_finite_array(self.alpha, name="alpha").reshape(-1)
        n = alpha.shape[0]
        S_plus = as_finite_array(self.S_plus, name="S_plus")
        S_minus = as_finite_array(self.S_minus, name="S_minus")
        for name, S in (("S_plus", S_plus), ("S_minus", S_minus)):
            if S.shape != (n, n):
                raise DimensionMismatch(f"{name} has shape {S.shape}, expected ({n}, {n})")
            defect = unitarity_defect(S)
            if defect > UNITARITY_TOL:
                raise NonUnitaryS(f"{name} unitarity defect {defect:.3e} exceeds {UNITARITY_TOL:g}")
        if not np.isfinite(self.omega0) or self.omega0 <= 0:
            raise NonPositiveFrequency(f"omega0 must be > 0, got {self.omega0}")
        if np.linalg.norm(alpha) == 0:
            raise ZeroAlpha("alpha must be nonzero: the atom has to decay to its ground state")
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "S_plus", _frozen(S_plus))
        object.__setattr__(self, "S_minus", _frozen(S_minus))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def alpha_norm2(self) -> float:
        return float(np.vdot(self.alpha, self.alpha).real)


@dataclass(frozen=True)
class Drive:
    """Monochromatic coherent drive ``f(t) = exp(-i omega t) lambda``."""

    lam: NDArray[np.complex128]
    omega: float

    def __post_init__(self):
        lam = as_finite_array(self.lam, name="lambda").reshape(-1)
        if not np.isfinite(self.omega) or self.omega <= 0:
            raise NonPositiveFrequency(f"laser frequency must be > 0, got {self.omega}")
        object.__setattr__(self, "lam", _frozen(lam))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def flux(self) -> float:
        """Mean number of injected photons per unit time, ``||lambda||^2``."""
        return float(np.vdot(self.lam, self.lam).real)

    def with_phase(self, phase: float) -> "Drive":
        return Drive(np.exp(1j * phase) * self.lam, self.omega)

    @classmethod
    def undriven(cls, n: int, omega: float) -> "Drive":
        return cls(np.zeros(n, dtype=complex), omega)


def validate_model(n: int, omega0: float, alpha: ArrayLike, S_plus: ArrayLike, S_minus: ArrayLike) -> HPModel:
    """Build a checked :class:`HPModel` from raw fields.

    Raises NonUnitaryS, ZeroAlpha, NonPositiveFrequency or DimensionMismatch.
    """
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if alpha.shape[0] != n:
        raise DimensionMismatch(f"alpha has {alpha.shape[0]} components, expected n = {n}")
    return HPModel(omega0, alpha, S_plus, S_minus)


def _check_dims(model: HPModel, drive: Drive) -> None:
    if drive.lam.shape[0] != model.n:
        raise DimensionMismatch(f"drive has dimension {drive.lam.shape[0]}, model has {model.n}")


@dataclass(frozen=True)
class RotatingGenerators:
    """Jump operators and Hamiltonian of the rotating-frame Liouvillian."""

    R_tilde: NDArray[np.complex128]  # shape (n, 2, 2)
    H_lambda: NDArray[np.complex128]
    lam: NDArray[np.complex128] = field(repr=False)

    @property
    def K_eff(self) -> NDArray[np.complex128]:
        return self.H_lambda - 0.5j * self.decay_operator

    @property
    def decay_operator(self) -> NDArray[np.complex128]:
        """``sum_j R_j^dagger R_j``."""
        return np.einsum("jki,jkl->il", self.R_tilde.conj(), self.R_tilde)

    @property
    def counting_jumps(self) -> NDArray[np.complex128]:
        """Jump operators ``R_j + lambda_j`` of the outgoing field.

        The counted field is the scattered part plus the transmitted coherent
        beam, so these (not ``R_j``) generate the photon count whose mean
        obeys the balance equation.
        """
        return self.R_tilde + self.lam[:, None, None] * np.eye(2)

    @property
    def counting_hamiltonian(self) -> NDArray[np.complex128]:
        """Hamiltonian that pairs with :attr:`counting_jumps` to give the same Liouvillian."""
        shift = np.einsum("j,jkl->kl", self.lam.conj(), self.R_tilde)
        return self.H_lambda - 0.5j * (shift - shift.conj().T)

    @property
    def counting_operator(self) -> NDArray[np.complex128]:
        C = self.counting_jumps
        return np.einsum("jki,jkl->il", C.conj(), C)

    def liouvillian(self, rho: NDArray) -> NDArray:
        H, R = self.H_lambda, self.R_tilde
        Rd = R.conj().transpose(0, 2, 1)
        out = -1j * (H @ rho - rho @ H)
        out += np.einsum("jab,bc,jcd->ad", R, rho, Rd)
        D = self.decay_operator
        out -= 0.5 * (D @ rho + rho @ D)
        return out


def rotating_generators(model: HPModel, drive: Drive) -> RotatingGenerators:
    """Jump operators ``R_j`` and Hamiltonian ``H_lambda`` in the frame rotating at ``omega``."""
    _check_dims(model, drive)
    lam = drive.lam
    alpha, Sp, Sm = model.alpha, model.S_plus, model.S_minus
    a_plus = Sp @ lam - lam
    a_minus = Sm @ lam - lam
    R = (
        alpha[:, None, None] * SIGMA_MINUS
        + a_plus[:, None, None] * P_PLUS
        + a_minus[:, None, None] * P_MINUS
    )
    Sm1_lam = Sm @ lam + lam
    H = (
        0.5 * (model.omega0 - drive.omega) * SIGMA_Z
        - np.vdot(lam, Sp @ lam).imag * P_PLUS
        - np.vdot(lam, Sm @ lam).imag * P_MINUS
        + 0.5j * np.vdot(Sm1_lam, alpha) * SIGMA_MINUS
        - 0.5j * np.vdot(alpha, Sm1_lam) * SIGMA_PLUS
    )
    return RotatingGenerators(_frozen(R), _frozen(H), _frozen(lam))


@dataclass(frozen=True)
class GSystem:
    """Affine Bloch system ``du/dt = G u - w`` with its derived scalars."""

    G: NDArray[np.complex128]
    w: NDArray[np.complex128]
    b: complex
    kappa2: float
    mu2: float
    delta_omega: float
    Gamma2: float
    Gamma2_alt: float
    alpha_norm2: float
    alpha_hat: NDArray[np.complex128]
    DeltaS: NDArray[np.complex128]
    P_alpha: NDArray[np.complex128]
    P_perp: NDArray[np.complex128]
    # <alpha|S- lambda>, ||P_alpha S- lambda||^2 and Im<S+ lambda|P_alpha S- lambda>
    alpha_Sm_lam: complex
    Pa_Sm_lam_norm2: float
    im_shift_alpha: float
    rabi: float

    @property
    def det_G_closed(self) -> float:
        """``-||alpha||^2 (delta_omega^2 + Gamma^2/4)``."""
        return -self.alpha_norm2 * (self.delta_omega**2 + self.Gamma2 / 4)

    @property
    def Gamma(self) -> float:
        return float(np.sqrt(self.Gamma2))


def g_system(model: HPModel, drive: Drive, check: bool = True) -> GSystem:
    """Assemble ``G``, ``w`` and the scalars ``kappa^2, mu^2, Delta omega, Gamma^2``.

    ``Gamma^2`` is computed from both of its closed forms; with ``check`` the
    two must agree to 1e-10 relative or :class:`Gamma2Mismatch` is raised.
    The second (sum-of-squares) form is the one returned.
    """
    _check_dims(model, drive)
    lam = drive.lam
    alpha, Sp, Sm = model.alpha, model.S_plus, model.S_minus
    na2 = model.alpha_norm2
    a_hat = alpha / np.sqrt(na2)
    P_a = np.outer(a_hat, a_hat.conj())
    P_perp = np.eye(model.n) - P_a
    DS = Sp - Sm

    Sp_lam = Sp @ lam
    Sm_lam = Sm @ lam
    DS_lam = DS @ lam
    sum_lam = Sp_lam + Sm_lam

    mu2 = na2 + float(np.linalg.norm(P_perp @ DS_lam) ** 2)
    kappa2 = mu2 + abs(np.vdot(a_hat, DS_lam)) ** 2
    delta_omega = drive.omega - (model.omega0 + np.vdot(Sp_lam, P_perp @ Sm_lam).imag)
    shift_alpha = np.vdot(Sp_lam, P_a @ Sm_lam)
    b = 0.5 * kappa2 - 1j * (delta_omega - shift_alpha.imag)

    alpha_Sm = np.vdot(alpha, Sm_lam)
    alpha_sum = np.vdot(alpha, sum_lam)
    G = np.array(
        [
            [-na2, -np.conj(alpha_Sm), -alpha_Sm],
            [alpha_sum, -b, 0],
            [np.conj(alpha_sum), 0, -np.conj(b)],
        ],
        dtype=complex,
    )
    w = np.array([0, alpha_Sm, np.conj(alpha_Sm)], dtype=complex)

    gamma2_a = (
        kappa2**2
        + 4 * kappa2 * np.vdot(Sm_lam, P_a @ sum_lam).real
        - 4 * shift_alpha.imag**2
    )
    gamma2_b = (
        mu2 + 2 * abs(np.vdot(a_hat, Sm_lam)) ** 2 - 2 * shift_alpha.real
    ) ** 2 + abs(np.vdot(a_hat, sum_lam)) ** 2 * (2 * mu2 + abs(np.vdot(a_hat, DS_lam)) ** 2)
    if check and abs(gamma2_a - gamma2_b) > GAMMA2_RTOL * max(abs(gamma2_b), 1e-300):
        raise Gamma2Mismatch(f"Gamma^2 forms disagree: {gamma2_a!r} vs {gamma2_b!r}")

    return GSystem(
        G=_frozen(G),
        w=_frozen(w),
        b=complex(b),
        kappa2=float(kappa2),
        mu2=float(mu2),
        delta_omega=float(delta_omega),
        Gamma2=float(gamma2_b),
        Gamma2_alt=float(gamma2_a),
        alpha_norm2=na2,
        alpha_hat=_frozen(a_hat),
        DeltaS=_frozen(DS),
        P_alpha=_frozen(P_a),
        P_perp=_frozen(P_perp),
        alpha_Sm_lam=complex(alpha_Sm),
        Pa_Sm_lam_norm2=float(abs(np.vdot(a_hat, Sm_lam)) ** 2),
        im_shift_alpha=float(shift_alpha.imag),
        rabi=float(abs(alpha_sum)),
    )
