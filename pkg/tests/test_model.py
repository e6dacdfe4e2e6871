import numpy as np
import pytest

from fluxatom.corpus import random_corpus, random_model
from fluxatom.errors import DimensionMismatch, NonPositiveFrequency, NonUnitaryS, ZeroAlpha
from fluxatom.model import Drive, HPModel, g_system, rotating_generators, validate_model
from fluxatom.numerics import P_MINUS, P_PLUS, SIGMA_MINUS, SIGMA_Z

from .conftest import lindblad_affine_map


class TestValidate:
    def test_minimal(self):
        m = validate_model(1, 1.0, [1.0], [[1.0]], [[1.0]])
        assert m.n == 1 and m.alpha_norm2 == 1.0

    def test_non_unitary(self):
        with pytest.raises(NonUnitaryS):
            validate_model(1, 1.0, [1.0], [[1.01]], [[1.0]])

    def test_zero_alpha(self):
        with pytest.raises(ZeroAlpha):
            validate_model(2, 1.0, [0.0, 0.0], np.eye(2), np.eye(2))

    @pytest.mark.parametrize("w0", [0.0, -1.0, np.inf])
    def test_frequency(self, w0):
        with pytest.raises(NonPositiveFrequency):
            validate_model(1, w0, [1.0], [[1.0]], [[1.0]])

    def test_drive_frequency(self):
        with pytest.raises(NonPositiveFrequency):
            Drive([1.0], 0.0)

    def test_dimensions(self):
        with pytest.raises(DimensionMismatch):
            validate_model(2, 1.0, [1.0], [[1.0]], [[1.0]])
        with pytest.raises(DimensionMismatch):
            HPModel(1.0, [1.0, 0.0], np.eye(3), np.eye(2))
        with pytest.raises(DimensionMismatch):
            rotating_generators(HPModel(1.0, [1.0], [[1.0]], [[1.0]]), Drive([1.0, 0.0], 1.0))

    def test_immutable(self):
        m = validate_model(1, 1.0, [1.0], [[1.0]], [[1.0]])
        with pytest.raises(ValueError):
            m.alpha[0] = 2.0


class TestGenerators:
    def test_undriven(self):
        m = HPModel(1.3, [0.6, 0.8j], np.eye(2), np.eye(2))
        g = rotating_generators(m, Drive.undriven(2, 1.0))
        assert np.allclose(g.R_tilde[0], 0.6 * SIGMA_MINUS)
        assert np.allclose(g.R_tilde[1], 0.8j * SIGMA_MINUS)
        assert np.allclose(g.H_lambda, 0.15 * SIGMA_Z)

    def test_hand_expanded_n1(self):
        a, sp, sm, ell, w0, w = 0.7 - 0.2j, 0.4, -1.1, 0.3 + 0.5j, 1.2, 0.9
        g = rotating_generators(HPModel(w0, [a], [[np.exp(1j * sp)]], [[np.exp(1j * sm)]]), Drive([ell], w))
        R = np.array([[(np.exp(1j * sp) - 1) * ell, 0], [a, (np.exp(1j * sm) - 1) * ell]])
        l2 = abs(ell) ** 2
        cross = np.conj((np.exp(1j * sm) + 1) * ell) * a
        H = np.array(
            [
                [(w0 - w) / 2 - l2 * np.sin(sp), -0.5j * np.conj(cross)],
                [0.5j * cross, -(w0 - w) / 2 - l2 * np.sin(sm)],
            ]
        )
        assert np.allclose(g.R_tilde[0], R, atol=1e-15)
        assert np.allclose(g.H_lambda, H, atol=1e-15)

    def test_hermitian_and_psd(self):
        for m, d in random_corpus(1000, seed=4):
            g = rotating_generators(m, d)
            assert np.max(np.abs(g.H_lambda - g.H_lambda.conj().T)) <= 1e-12
            assert np.linalg.eigvalsh(g.decay_operator).min() >= -1e-12

    def test_counting_unravelling_same_liouvillian(self):
        m, d = random_model(3, n=3)
        g = rotating_generators(m, d)
        rng = np.random.default_rng(0)
        X = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = X @ X.conj().T
        rho /= np.trace(rho)
        H, C = g.counting_hamiltonian, g.counting_jumps
        alt = -1j * (H @ rho - rho @ H)
        for c in C:
            cd = c.conj().T
            alt += c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c)
        assert np.max(np.abs(alt - g.liouvillian(rho))) <= 1e-13


class TestGSystem:
    def test_undriven_scalars(self):
        m = HPModel(1.4, [0.6, 0.3], np.eye(2), np.eye(2))
        gs = g_system(m, Drive.undriven(2, 1.1))
        a2 = 0.45
        assert gs.kappa2 == pytest.approx(a2) and gs.mu2 == pytest.approx(a2)
        assert gs.Gamma2 == pytest.approx(a2**2)
        assert gs.delta_omega == pytest.approx(1.1 - 1.4)
        assert np.linalg.det(gs.G).real == pytest.approx(-a2 * (0.3**2 + a2**2 / 4), rel=1e-12)

    def test_matches_liouvillian(self):
        for m, d in random_corpus(200, seed=5):
            gs = g_system(m, d)
            M, c = lindblad_affine_map(rotating_generators(m, d))
            assert np.max(np.abs(M - gs.G)) <= 1e-12 * (1 + np.abs(gs.G).max())
            assert np.max(np.abs(c + gs.w)) <= 1e-12 * (1 + np.abs(gs.w).max())

    def test_determinant_and_gamma_identities(self):
        for m, d in random_corpus(1000, seed=6):
            gs = g_system(m, d)
            det = np.linalg.det(gs.G)
            assert abs(det.imag) <= 1e-12 * abs(det)
            assert abs(det.real - gs.det_G_closed) <= 1e-10 * abs(gs.det_G_closed)
            assert abs(gs.Gamma2 - gs.Gamma2_alt) <= 1e-10 * gs.Gamma2
            assert det.real < 0 and gs.Gamma2 > 0

    def test_phase_invariance(self):
        for seed in range(50):
            m, d = random_model(seed)
            a, b = g_system(m, d), g_system(m, d.with_phase(0.83))
            for name in ("kappa2", "mu2", "delta_omega", "Gamma2"):
                assert getattr(b, name) == pytest.approx(getattr(a, name), abs=1e-12, rel=1e-12)
            assert np.linalg.det(b.G) == pytest.approx(np.linalg.det(a.G), abs=1e-12, rel=1e-12)
            assert b.w[1] == pytest.approx(np.exp(0.83j) * a.w[1], abs=1e-14)

    def test_elastic_off_reduction(self):
        # S+ = S- = 1: line 2 of the Gamma^2 pair reduces to ||a||^4 + |<a~|2 lam>|^2 2||a||^2
        m, d = random_model(8, n=3)
        m = HPModel(m.omega0, m.alpha, np.eye(3), np.eye(3))
        gs = g_system(m, d)
        a2 = m.alpha_norm2
        proj = abs(np.vdot(m.alpha / np.sqrt(a2), 2 * d.lam)) ** 2
        assert gs.kappa2 == pytest.approx(a2) and gs.mu2 == pytest.approx(a2)
        assert gs.delta_omega == pytest.approx(d.omega - m.omega0)
        assert gs.Gamma2 == pytest.approx(a2**2 + proj * 2 * a2, rel=1e-13)

    def test_rejects_mismatched_gamma(self, monkeypatch):
        import fluxatom.model as mod

        monkeypatch.setattr(mod, "GAMMA2_RTOL", -1.0)
        m, d = random_model(1)
        with pytest.raises(mod.Gamma2Mismatch):
            g_system(m, d)
