"""Small dense linear algebra, quadrature, RK4 and random unitaries.

Everything here works in double precision on tiny dimensions (the Bloch
system is 3x3, the one-particle space a handful of modes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NonFinite, SingularMatrix

# Atom operators in the basis (|+>, |->).
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
P_PLUS = SIGMA_PLUS @ SIGMA_MINUS
P_MINUS = SIGMA_MINUS @ SIGMA_PLUS
IDENTITY2 = np.eye(2, dtype=complex)

for _op in (SIGMA_Z, SIGMA_PLUS, SIGMA_MINUS, P_PLUS, P_MINUS, IDENTITY2):
    _op.setflags(write=False)

SINGULAR_RTOL = 1e-14


def as_finite_array(x: ArrayLike, dtype=complex, name: str = "array") -> NDArray:
    """Coerce to an ndarray and reject NaN/Inf entries."""
    arr = np.array(x, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has non-finite entries")
    return arr


def solve_linear3(A: ArrayLike, b: ArrayLike) -> NDArray[np.complex128]:
    """Solve ``A x = b`` for a 3x3 complex system by Gaussian elimination.

    Partial pivoting is used. The matrix is declared singular when
    ``|det A| <= 1e-14 * ||A||_F**3``.
    """
    A = as_finite_array(A, name="A")
    b = as_finite_array(b, name="b")
    if A.shape != (3, 3) or b.shape != (3,):
        raise ValueError(f"expected a 3x3 system, got A{A.shape}, b{b.shape}")

    scale = np.linalg.norm(A)
    M = A.copy()
    x = b.copy()
    det = 1.0 + 0j
    for k in range(3):
        p = k + int(np.argmax(np.abs(M[k:, k])))
        if p != k:
            M[[k, p]] = M[[p, k]]
            x[[k, p]] = x[[p, k]]
            det = -det
        pivot = M[k, k]
        det *= pivot
        if pivot == 0:
            break
        for i in range(k + 1, 3):
            f = M[i, k] / pivot
            M[i, k:] -= f * M[k, k:]
            x[i] -= f * x[k]

    if scale == 0 or abs(det) <= SINGULAR_RTOL * scale**3:
        raise SingularMatrix(f"|det A| = {abs(det):.3e} below threshold for ||A|| = {scale:.3e}")

    for k in (2, 1, 0):
        x[k] = (x[k] - M[k, k + 1:] @ x[k + 1:]) / M[k, k]
    return x


def _time_grid(t_end: float, h: float) -> NDArray[np.float64]:
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if t_end < 0:
        raise ValueError(f"t_end must be non-negative, got {t_end}")
    n_full = int(np.floor(t_end / h * (1 + 1e-12)))
    times = h * np.arange(n_full + 1)
    if t_end - times[-1] > 1e-12 * max(t_end, 1.0):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end if n_full > 0 else times[-1]
    return times


def rk4_evolve(
    deriv: Callable[[float, NDArray], NDArray],
    y0: ArrayLike,
    t_end: float,
    h: float,
) -> tuple[NDArray[np.float64], NDArray]:
    """Integrate ``dy/dt = deriv(t, y)`` with classical fixed-step RK4.

    Returns ``(times, ys)`` with a sample at every step, including ``t = 0``
    and ``t = t_end``; the final step is shortened to land on ``t_end``.
    """
    y = as_finite_array(y0, dtype=np.result_type(np.asarray(y0), float), name="y0")
    times = _time_grid(t_end, h)
    ys = np.empty((len(times),) + y.shape, dtype=y.dtype)
    ys[0] = y
    for i in range(1, len(times)):
        t = times[i - 1]
        dt = times[i] - t
        k1 = deriv(t, y)
        k2 = deriv(t + dt / 2, y + dt / 2 * k1)
        k3 = deriv(t + dt / 2, y + dt / 2 * k2)
        k4 = deriv(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"state became non-finite at t = {times[i]:.6g}")
        ys[i] = y
    return times, ys


def rk4_affine_step(A: NDArray, c: NDArray, h: float) -> tuple[NDArray, NDArray]:
    """One RK4 step of ``dy/dt = A y + c`` written as ``y -> M y + d``.

    For an autonomous affine field the four RK4 stages compose into a fixed
    matrix polynomial; stepping with ``(M, d)`` is the same RK4 scheme.
    """
    n = A.shape[0]
    hA = h * A
    eye = np.eye(n, dtype=A.dtype)
    # M = 1 + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24 ; d = h (1 + hA/2 + (hA)^2/6 + (hA)^3/24) c
    M = eye + hA @ (eye + hA @ (eye / 2 + hA @ (eye / 6 + hA / 24)))
    d = h * (eye + hA @ (eye / 2 + hA @ (eye / 6 + hA / 24))) @ c
    return M, d


def rk4_affine_evolve(
    A: ArrayLike, c: ArrayLike, y0: ArrayLike, t_end: float, h: float
) -> tuple[NDArray[np.float64], NDArray]:
    """RK4 for ``dy/dt = A y + c`` on the same grid as :func:`rk4_evolve`."""
    A = as_finite_array(A, name="A")
    c = as_finite_array(c, name="c")
    y = as_finite_array(y0, name="y0")
    times = _time_grid(t_end, h)
    ys = np.empty((len(times), len(y)), dtype=complex)
    ys[0] = y
    M, d = rk4_affine_step(A, c, h)
    for i in range(1, len(times)):
        dt = times[i] - times[i - 1]
        if abs(dt - h) > 1e-12 * h:
            M_last, d_last = rk4_affine_step(A, c, dt)
            y = M_last @ y + d_last
        else:
            y = M @ y + d
        ys[i] = y
    if not np.all(np.isfinite(ys)):
        raise NonFinite("affine RK4 trajectory became non-finite")
    return times, ys


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1] in the variable cos(theta)."""

    order: int
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]

    def integrate(self, f: Callable[[NDArray], NDArray]) -> complex | float:
        return np.sum(self.weights * f(self.nodes))

    def mapped(self, a: float, b: float) -> tuple[NDArray, NDArray]:
        """Nodes and weights transported to ``[a, b]``."""
        half = (b - a) / 2
        return a + half * (self.nodes + 1), half * self.weights


def gauss_legendre(L: int) -> QuadratureRule:
    """L-point Gauss-Legendre rule (Golub-Welsch, via numpy)."""
    if int(L) != L or L < 1:
        raise ValueError(f"quadrature order must be a positive integer, got {L}")
    nodes, weights = np.polynomial.legendre.leggauss(int(L))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(int(L), nodes, weights)


def haar_unitary(n: int, seed: int) -> NDArray[np.complex128]:
    """Haar-distributed n x n unitary, deterministic in ``seed``.

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` moved into
    ``Q`` (Mezzadri's fix), so the distribution is exactly Haar.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def unitarity_defect(U: NDArray) -> float:
    """Spectral-norm distance of ``U^dagger U`` from the identity."""
    n = U.shape[0]
    return float(np.linalg.norm(U.conj().T @ U - np.eye(n), ord=2))


def trace_distance(rho: NDArray, sigma: NDArray) -> float:
    """Half the trace norm of ``rho - sigma`` for Hermitian matrices."""
    eig = np.linalg.eigvalsh((rho - sigma + (rho - sigma).conj().T) / 2)
    return float(np.sum(np.abs(eig)) / 2)
