"""Scattering observables of a spherically symmetric atom in a collimated beam.

The non-s-wave scattering amplitudes ``g_plus(theta)``, ``g_minus(theta)`` are
stored as Legendre series ``sum_{l>=1} c_l P_l(cos theta)``, so every norm and
inner product reduces to a finite sum with weights ``4 pi / (2l + 1)``.
All cross sections are also reported in the unit-free form

    sigma_hat = (2 pi / 3) (omega / (2 pi c))^2 sigma.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import FanoIdentityMismatch, ForwardDirection, ModelError, NonPositiveFrequency, TruncationTooCoarse
from .model import Drive, HPModel
from .numerics import P_MINUS, P_PLUS, SIGMA_MINUS, gauss_legendre

SQRT_PI = np.sqrt(np.pi)
FORWARD_CUTOFF = 1e-6
FANO_RTOL = 1e-10


def _coeffs(c: ArrayLike | None) -> NDArray[np.complex128]:
    arr = np.zeros(0, dtype=complex) if c is None else np.asarray(c, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ModelError("Legendre coefficients must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _legendre_weights(L: int) -> NDArray[np.float64]:
    ell = np.arange(1, L + 1)
    return 4 * np.pi / (2 * ell + 1)


@dataclass(frozen=True)
class SphericalModel:
    """Inputs of the collimated-beam, spherically symmetric limit.

    ``g_plus[k]`` / ``g_minus[k]`` is the coefficient of ``P_{k+1}``; the
    ``l = 0`` term is absent by construction, so both amplitudes are
    orthogonal to the isotropic emission profile.
    """

    alpha_norm: float
    eta: float
    omega0: float
    omega: float
    s_plus: float = 0.0
    s_minus: float = 0.0
    g_plus: NDArray[np.complex128] = field(default=None)
    g_minus: NDArray[np.complex128] = field(default=None)
    delta: float = 0.0
    c_light: float = 1.0

    def __post_init__(self):
        if not self.alpha_norm > 0:
            raise ModelError(f"alpha_norm must be > 0, got {self.alpha_norm}")
        if not self.eta > 0:
            raise ModelError(f"eta must be > 0, got {self.eta}")
        if not self.omega0 > 0 or not self.omega > 0:
            raise NonPositiveFrequency("omega0 and omega must be > 0")
        if not self.c_light > 0:
            raise ModelError("wave speed must be > 0")
        gp, gm = _coeffs(self.g_plus), _coeffs(self.g_minus)
        L = max(len(gp), len(gm))
        gp = np.pad(gp, (0, L - len(gp)))
        gm = np.pad(gm, (0, L - len(gm)))
        gp.setflags(write=False)
        gm.setflags(write=False)
        object.__setattr__(self, "g_plus", gp)
        object.__setattr__(self, "g_minus", gm)
        for name in ("alpha_norm", "eta", "omega0", "omega", "s_plus", "s_minus", "delta", "c_light"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def L(self) -> int:
        return len(self.g_plus)

    def at(self, omega: float) -> "SphericalModel":
        return replace(self, omega=omega)

    def g_norm2(self, which: str) -> float:
        c = self.g_plus if which == "+" else self.g_minus
        return float(np.sum(np.abs(c) ** 2 * _legendre_weights(self.L)))

    @property
    def inner_gp_gm(self) -> complex:
        """``<g_plus | g_minus>``."""
        return complex(np.sum(self.g_plus.conj() * self.g_minus * _legendre_weights(self.L)))

    @property
    def delta_g_norm2(self) -> float:
        d = self.g_plus - self.g_minus
        return float(np.sum(np.abs(d) ** 2 * _legendre_weights(self.L)))

    @property
    def delta_g_forward(self) -> complex:
        """``(g_plus - g_minus)(theta = 0)``, using ``P_l(1) = 1``."""
        return complex(np.sum(self.g_plus - self.g_minus))

    def g_at(self, which: str, theta: ArrayLike) -> NDArray[np.complex128]:
        c = self.g_plus if which == "+" else self.g_minus
        x = np.cos(np.asarray(theta, dtype=float))
        return np.polynomial.legendre.legval(x, np.concatenate([[0], c])) if self.L else np.zeros_like(x, dtype=complex)


def partial_wave_amplitudes(phase_shifts: ArrayLike) -> tuple[float, NDArray[np.complex128]]:
    """s-wave phase ``s = 2 delta_0`` and Legendre coefficients of ``g`` from phase shifts.

    A collimated beam has overlap ``sqrt(2l+1)/2`` with the normalized
    harmonic ``Y_l0``, so ``g = sum_{l>=1} (exp(2i delta_l) - 1) (2l+1)/(4 sqrt(pi)) P_l``.
    """
    d = np.asarray(phase_shifts, dtype=float).reshape(-1)
    ell = np.arange(len(d))
    c = (np.exp(2j * d) - 1) * (2 * ell + 1) / (4 * SQRT_PI)
    return float(2 * d[0]), c[1:]


def spherical_from_phase_shifts(
    deltas_plus: ArrayLike,
    deltas_minus: ArrayLike,
    alpha_norm: float,
    eta: float,
    omega0: float,
    omega: float,
    delta: float = 0.0,
    c_light: float = 1.0,
) -> SphericalModel:
    s_p, c_p = partial_wave_amplitudes(deltas_plus)
    s_m, c_m = partial_wave_amplitudes(deltas_minus)
    return SphericalModel(alpha_norm, eta, omega0, omega, s_p, s_m, c_p, c_m, delta, c_light)


@dataclass(frozen=True)
class SphericalScalars:
    kappa2: float
    mu2: float
    Gamma2: float
    delta_omega: float
    epsilon: float

    @property
    def Gamma(self) -> float:
        return float(np.sqrt(self.Gamma2))


def lamp_shift(sm: SphericalModel) -> float:
    """Intensity-dependent resonance shift ``epsilon``.

    ``eta^2 Im<g+|g-> - sqrt(pi) eta^2 Im (g+ - g-)(0)``, which is the
    collimated limit of ``Im <S+ lambda | P_perp S- lambda>``. Only non-s-wave
    amplitudes contribute and the shift is homogeneous of degree 2 in ``eta``.
    """
    eta2 = sm.eta**2
    return eta2 * sm.inner_gp_gm.imag - SQRT_PI * eta2 * sm.delta_g_forward.imag


def spherical_scalars(sm: SphericalModel) -> SphericalScalars:
    eta2 = sm.eta**2
    ds = sm.s_plus - sm.s_minus
    mu2 = sm.alpha_norm**2 + eta2 * sm.delta_g_norm2
    kappa2 = mu2 + 0.5 * eta2 * (1 - np.cos(ds))
    Gamma2 = mu2**2 + 2 * mu2 * eta2 + 0.5 * eta2**2 * (1 - np.cos(ds))
    eps = lamp_shift(sm)
    return SphericalScalars(kappa2, mu2, Gamma2, sm.omega - (sm.omega0 + eps), eps)


def steady_state_spherical(sm: SphericalModel, sc: SphericalScalars | None = None) -> tuple[float, complex]:
    """Equilibrium ``(u, v)`` of the atom in the collimated-beam limit."""
    sc = sc or spherical_scalars(sm)
    eta2 = sm.eta**2
    denom = sc.delta_omega**2 + sc.Gamma2 / 4
    u = sc.kappa2 * eta2 / 4 / denom
    ds = sm.s_plus - sm.s_minus
    v = (
        -0.5 * np.exp(1j * (sm.delta + sm.s_minus)) * sm.alpha_norm * sm.eta / denom
        * (sc.kappa2 / 2 + 1j * (sc.delta_omega - eta2 / 4 * np.sin(ds)))
    )
    return float(u), complex(v)


def _xs_prefactor(sm: SphericalModel) -> float:
    """``(3 / (2 pi)) (2 pi c / omega)^2``."""
    return 3 / (2 * np.pi) * (2 * np.pi * sm.c_light / sm.omega) ** 2


def _check_angles(theta: ArrayLike) -> NDArray[np.float64]:
    th = np.asarray(theta, dtype=float)
    if np.any(th < FORWARD_CUTOFF) or np.any(th > np.pi + 1e-12):
        raise ForwardDirection(f"theta must lie in [{FORWARD_CUTOFF:g}, pi]; the beam axis is excluded")
    return th


def differential_cross_section(sm: SphericalModel, theta: ArrayLike) -> NDArray[np.float64] | float:
    """``sigma(theta)`` for detection off the beam axis (area units).

    Small negative round-off (above -1e-12 in relative terms) is clamped to 0.
    """
    th = _check_angles(theta)
    u, v = steady_state_spherical(sm)
    na, eta = sm.alpha_norm, sm.eta
    gp = sm.g_at("+", th)
    gm = sm.g_at("-", th)
    up = na**2 / (4 * np.pi) + eta**2 * np.abs(gp + (np.exp(1j * sm.s_plus) - 1) / (4 * SQRT_PI)) ** 2
    down = eta**2 * np.abs(gm + (np.exp(1j * sm.s_minus) - 1) / (4 * SQRT_PI)) ** 2
    cross = eta * na / SQRT_PI * (
        np.exp(-1j * sm.delta) * v * (np.conj(gm) + (np.exp(-1j * sm.s_minus) - 1) / (4 * SQRT_PI))
    ).real
    raw = _xs_prefactor(sm) / eta**2 * (up * u + down * (1 - u) + cross)
    scale = _xs_prefactor(sm) / eta**2 * (up + down)
    if np.any(raw < -1e-12 * np.maximum(scale, 1e-300)):
        raise FanoIdentityMismatch("differential cross section is negative beyond round-off")
    out = np.maximum(raw, 0.0)
    return float(out) if out.ndim == 0 else out


def emission_operator(sm: SphericalModel, theta: float) -> NDArray[np.complex128]:
    """2x2 operator ``R(theta)`` whose ``Tr(R^dagger R rho)`` is the photon rate per solid angle."""
    th = float(_check_angles(theta))
    lam_phase = sm.eta * np.exp(1j * sm.delta)
    amp_p = lam_phase * (sm.g_at("+", th) + (np.exp(1j * sm.s_plus) - 1) / (4 * SQRT_PI))
    amp_m = lam_phase * (sm.g_at("-", th) + (np.exp(1j * sm.s_minus) - 1) / (4 * SQRT_PI))
    return sm.alpha_norm / np.sqrt(4 * np.pi) * SIGMA_MINUS + amp_p * P_PLUS + amp_m * P_MINUS


def differential_cross_section_trace(sm: SphericalModel, theta: float) -> float:
    """Independent route: ``sigma = (2 pi c/omega)^2 3/(2 pi eta^2) Tr(R^dagger R rho_eq)``."""
    u, v = steady_state_spherical(sm)
    rho = np.array([[u, v], [np.conj(v), 1 - u]])
    R = emission_operator(sm, theta)
    return float(_xs_prefactor(sm) / sm.eta**2 * np.trace(R.conj().T @ R @ rho).real)


@dataclass(frozen=True)
class LineShape:
    """Fano coefficients ``sigma_hat = A + (B + C x) / (x^2 + 1)``."""

    A: float
    B: float
    C: float
    Gamma: float
    epsilon: float
    omega0: float

    @property
    def resonance_omega(self) -> float:
        return self.omega0 + self.epsilon

    def x(self, omega: ArrayLike) -> NDArray[np.float64] | float:
        return 2 * (np.asarray(omega) - self.resonance_omega) / self.Gamma

    def profile(self, x: ArrayLike) -> NDArray[np.float64] | float:
        x = np.asarray(x, dtype=float)
        return self.A + (self.B + self.C * x) / (x**2 + 1)

    @property
    def positive(self) -> bool:
        """Positivity certificate for ``sigma_hat(x) >= 0`` on the whole real line."""
        A, B, C = self.A, self.B, self.C
        return (A > 0 and A * (A + B) >= C * C / 4) or (A == 0 and B > 0 and C == 0)


def line_shape(sm: SphericalModel, sc: SphericalScalars | None = None) -> LineShape:
    sc = sc or spherical_scalars(sm)
    na2, eta2 = sm.alpha_norm**2, sm.eta**2
    gp2, gm2 = sm.g_norm2("+"), sm.g_norm2("-")
    sp, smi = sm.s_plus, sm.s_minus
    ds = sp - smi
    A = gm2 + 0.5 * (1 - np.cos(smi))
    C = -na2 / sc.Gamma * np.sin(smi)
    B = eta2 * sc.kappa2 / sc.Gamma2 * (gp2 - gm2 + 0.5 * np.cos(smi) - 0.5 * np.cos(sp)) + na2 / sc.Gamma2 * (
        sc.kappa2 * np.cos(smi) + eta2 / 2 * np.sin(ds) * np.sin(smi)
    )
    return LineShape(float(A), float(B), float(C), sc.Gamma, sc.epsilon, sm.omega0)


@dataclass(frozen=True)
class TotalCrossSection:
    sigma_tot: float
    sigma_hat: float
    line: LineShape
    x: float
    fano_residual: float


def total_cross_section(sm: SphericalModel) -> TotalCrossSection:
    """Total cross section from its direct closed form, checked against the Fano reduction."""
    sc = spherical_scalars(sm)
    u, _ = steady_state_spherical(sm, sc)
    na2, eta2 = sm.alpha_norm**2, sm.eta**2
    sp, smi = sm.s_plus, sm.s_minus
    ds = sp - smi
    down = sm.g_norm2("-") + 0.5 * (1 - np.cos(smi))
    up = (
        sm.g_norm2("+")
        + 0.5 * (1 - np.cos(sp))
        + na2 / eta2 * np.cos(smi)
        - 2 * na2 * sc.delta_omega / (eta2 * sc.kappa2) * np.sin(smi)
        + na2 / (2 * sc.kappa2) * np.sin(ds) * np.sin(smi)
    )
    sigma_tot = _xs_prefactor(sm) * (down * (1 - u) + up * u)
    sigma_hat = sigma_tot / _xs_prefactor(sm)

    line = line_shape(sm, sc)
    x = 2 * sc.delta_omega / sc.Gamma
    fano = float(line.profile(x))
    scale = abs(line.A) + abs(line.B) + abs(line.C)
    residual = abs(sigma_hat - fano) / scale if scale else abs(sigma_hat - fano)
    if residual > FANO_RTOL:
        raise FanoIdentityMismatch(f"direct {sigma_hat!r} vs Fano form {fano!r}")
    return TotalCrossSection(float(sigma_tot), float(sigma_hat), line, float(x), float(residual))


def angular_integral(sm: SphericalModel, order: int = 32) -> float:
    """``2 pi int sigma(theta) sin(theta) d theta`` by Gauss-Legendre in ``cos theta``.

    The open rule never samples the beam axis.
    """
    rule = gauss_legendre(order)
    theta = np.arccos(rule.nodes)
    return float(2 * np.pi * np.sum(rule.weights * differential_cross_section(sm, theta)))


@dataclass(frozen=True)
class LineshapeScan:
    omega: NDArray[np.float64]
    delta_omega: NDArray[np.float64]
    x: NDArray[np.float64]
    sigma_hat: NDArray[np.float64]
    sigma_tot: NDArray[np.float64]
    u_inf: NDArray[np.float64]
    v_inf: NDArray[np.complex128]
    line: LineShape
    positive: bool
    max_fano_residual: float

    @property
    def peak_omega(self) -> float:
        return float(self.omega[np.argmax(self.sigma_hat)])

    @property
    def steepest_omega(self) -> float:
        """Grid point of largest ``|d sigma_hat / d omega|`` (finite differences)."""
        slope = np.gradient(self.sigma_hat, self.omega)
        return float(self.omega[np.argmax(np.abs(slope))])

    @property
    def predicted_resonance(self) -> float:
        return self.line.resonance_omega


def lineshape_scan(sm: SphericalModel, omega_min: float, omega_max: float, n_points: int) -> LineshapeScan:
    """Evaluate the total cross section and equilibrium on a linear ``omega`` grid."""
    if not 0 < omega_min < omega_max:
        raise ModelError(f"scan bounds must satisfy 0 < min < max, got ({omega_min}, {omega_max})")
    if n_points < 2:
        raise ModelError("a scan needs at least 2 points")
    omegas = np.linspace(omega_min, omega_max, int(n_points))
    rows = []
    worst = 0.0
    for om in omegas:
        sm_w = sm.at(om)
        sc = spherical_scalars(sm_w)
        tcs = total_cross_section(sm_w)
        u, v = steady_state_spherical(sm_w, sc)
        worst = max(worst, tcs.fano_residual)
        rows.append((sc.delta_omega, tcs.x, tcs.sigma_hat, tcs.sigma_tot, u, v))
    dw, x, sh, st, u, v = (np.array(col) for col in zip(*rows))
    line = line_shape(sm)
    return LineshapeScan(omegas, dw, x, sh, st, u, v.astype(complex), line, line.positive, worst)


# -- partial-wave embedding into the generic model --------------------------


def _beam_overlaps(L: int, dtheta: float) -> NDArray[np.float64]:
    """``<Y_l0 | lambda_tilde>`` for l = 0..L at finite beam aperture."""
    one_minus_c = 2 * np.sin(dtheta / 2) ** 2
    rule = gauss_legendre(L // 2 + 2)
    x, wts = rule.mapped(1 - one_minus_c, 1.0)
    ell = np.arange(L + 1)
    P = np.polynomial.legendre.legvander(x, L)  # (nodes, L+1)
    integrals = wts @ P
    norm = dtheta * np.sqrt(2 * np.pi * one_minus_c)
    return np.sqrt((2 * ell + 1) / (4 * np.pi)) * 2 * np.pi * integrals / norm


@dataclass(frozen=True)
class Embedding:
    model: HPModel
    drive: Drive
    spherical: SphericalModel
    overlaps: NDArray[np.float64]


def embed_partial_waves(
    deltas_plus: ArrayLike,
    deltas_minus: ArrayLike,
    alpha_norm: float,
    eta: float,
    delta: float,
    omega0: float,
    omega: float,
    dtheta: float,
    overlap_rtol: float = 0.01,
) -> Embedding:
    """Realize the collimated beam at finite aperture ``dtheta`` as a generic model.

    Basis: the normalized harmonics ``Y_l0`` (l = 0..L) plus one extra unit
    vector carrying the part of the beam outside the retained partial waves,
    on which both scattering matrices act trivially. ``alpha`` points along
    ``Y_00`` and ``||lambda|| = eta / dtheta``.

    Raises :class:`TruncationTooCoarse` when, for some partial wave that
    scatters (nonzero phase shift, or l = 0), the finite-aperture beam overlap
    differs from its collimated limit ``sqrt(2l+1)/2`` by more than
    ``overlap_rtol``.
    """
    dp = np.asarray(deltas_plus, dtype=float).reshape(-1)
    dm = np.asarray(deltas_minus, dtype=float).reshape(-1)
    if len(dp) != len(dm) or len(dp) < 2:
        raise ModelError("need matching phase-shift lists with L >= 1")
    if not 0 < dtheta < 0.3:
        raise ModelError(f"aperture must lie in (0, 0.3), got {dtheta}")
    L = len(dp) - 1
    b = _beam_overlaps(L, dtheta)
    limit = np.sqrt(2 * np.arange(L + 1) + 1) / 2
    active = (dp != 0) | (dm != 0)
    active[0] = True
    rel = np.abs(b / limit - 1)
    if np.any(rel[active] > overlap_rtol):
        worst = int(np.argmax(np.where(active, rel, 0)))
        raise TruncationTooCoarse(
            f"beam overlap with l = {worst} is off its collimated value by {rel[worst]:.2%}; reduce dtheta"
        )
    tail2 = 1 / dtheta**2 - np.sum(b**2)
    lam_tilde = np.concatenate([b, [np.sqrt(max(tail2, 0.0))]])
    n = L + 2
    alpha = np.zeros(n, dtype=complex)
    alpha[0] = alpha_norm
    S_plus = np.diag(np.concatenate([np.exp(2j * dp), [1.0]]))
    S_minus = np.diag(np.concatenate([np.exp(2j * dm), [1.0]]))
    model = HPModel(omega0, alpha, S_plus, S_minus)
    drive = Drive(eta * np.exp(1j * delta) * lam_tilde, omega)
    sph = spherical_from_phase_shifts(dp, dm, alpha_norm, eta, omega0, omega, delta)
    return Embedding(model, drive, sph, b)
