import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxatom.corpus import random_corpus, random_model
from fluxatom.dynamics import BlochState, evolve, flux_ratio, photon_count, steady_state
from fluxatom.errors import StateOutOfDomain, ZeroDrive
from fluxatom.model import Drive, HPModel, g_system, rotating_generators
from fluxatom.numerics import P_MINUS

from .conftest import lindblad_affine_map


def liouvillian_null_state(m, d):
    M, c = lindblad_affine_map(rotating_generators(m, d))
    return np.linalg.solve(M, -c)


class TestBlochState:
    def test_domain(self):
        with pytest.raises(StateOutOfDomain):
            BlochState(1.2, 0)
        with pytest.raises(StateOutOfDomain):
            BlochState(0.5, 0.6)

    def test_from_pure(self):
        s = BlochState.from_pure([1, 1j])
        assert s.u == pytest.approx(0.5) and s.v == pytest.approx(-0.5j)
        assert np.allclose(BlochState.from_density(s.density).vector, s.vector)


class TestDecay:
    def test_excited_decay(self, trivial_model, undriven):
        tr = evolve(trivial_model, undriven, BlochState.excited(), 5.0)
        assert np.max(np.abs(tr.u - np.exp(-tr.times))) <= 1e-9
        assert np.max(np.abs(tr.v)) == 0

    def test_coherence_decay(self):
        m = HPModel(1.0, [1.0], [[1.0]], [[1.0]])
        d = Drive([0.0], 1.3)
        s0 = BlochState.from_pure([1, 1])
        tr = evolve(m, d, s0, 4.0)
        exact = 0.5 * np.exp(-tr.times / 2 + 1j * 0.3 * tr.times)
        assert np.max(np.abs(tr.v - exact)) <= 1e-9

    def test_photon_number_in_decay(self, trivial_model, undriven):
        rec = photon_count(trivial_model, undriven, BlochState.excited(), 30.0)
        assert np.max(np.abs(rec.N_mean - (1 - np.exp(-rec.times)))) <= 1e-9
        assert abs(rec.N_mean[-1] - 1) <= 1e-9

    def test_ground_population_unitary_part(self):
        # with S+ = S- = 1 and lambda = 0 the P- expectation only grows through decay
        m, d = random_model(12, n=3)
        g = rotating_generators(m, Drive.undriven(3, d.omega))
        assert np.allclose(g.H_lambda @ P_MINUS, P_MINUS @ g.H_lambda)


class TestSteadyState:
    def test_resonant_simple(self):
        # ||alpha||^2 = 1, lambda = 1/2, S = 1: u = 1/3, v = -1/3
        m = HPModel(1.0, [1.0], [[1.0]], [[1.0]])
        ss = steady_state(m, Drive([0.5], 1.0))
        assert ss.u_inf == pytest.approx(1 / 3, abs=1e-14)
        assert ss.v_inf == pytest.approx(-1 / 3, abs=1e-14)

    def test_undriven_is_ground(self, trivial_model, undriven):
        ss = steady_state(trivial_model, undriven)
        assert ss.u_inf == 0 and ss.v_inf == 0

    def test_corpus_closed_forms_and_liouvillian(self):
        for m, d in random_corpus(200, seed=7):
            ss = steady_state(m, d)
            x = liouvillian_null_state(m, d)
            assert abs(ss.u_inf - x[0].real) <= 1e-10
            assert abs(ss.v_inf - x[1]) <= 1e-10
            assert ss.closed_form_residual <= 1e-9
            assert np.linalg.eigvalsh(ss.rho_eq).min() >= -1e-12

    def test_convergence_from_any_state(self):
        m, d = random_model(21, n=2)
        ss = steady_state(m, d)
        tend = 40 / g_system(m, d).kappa2
        for s0 in (BlochState.excited(), BlochState.ground(), BlochState.from_pure([1, 1j])):
            f = evolve(m, d, s0, tend).final
            assert abs(f.u - ss.u_inf) <= 1e-8 and abs(f.v - ss.v_inf) <= 1e-8

    def test_stationary(self):
        m, d = random_model(22, n=3)
        ss = steady_state(m, d)
        tr = evolve(m, d, ss.state, 5.0)
        assert np.max(np.abs(tr.u - ss.u_inf)) <= 1e-12
        assert np.max(np.abs(tr.v - ss.v_inf)) <= 1e-12

    def test_saturation(self):
        m = HPModel(1.0, [1.0], [[1.0]], [[1.0]])
        us = [steady_state(m, Drive([np.sqrt(f)], 1.0)).u_inf for f in (1, 10, 100, 1e4)]
        assert all(a < b for a, b in zip(us, us[1:]))
        assert us[-1] < 0.5 and us[-1] == pytest.approx(0.5, abs=1e-3)

    def test_phase_covariance(self):
        m, d = random_model(30, n=2)
        a, b = steady_state(m, d), steady_state(m, d.with_phase(1.1))
        assert b.u_inf == pytest.approx(a.u_inf, abs=1e-13)
        assert b.v_inf == pytest.approx(np.exp(1.1j) * a.v_inf, abs=1e-13)


class TestCounting:
    def test_balance_corpus(self):
        for m, d in random_corpus(30, seed=8):
            tend = 10 / m.alpha_norm2
            rec = photon_count(m, d, BlochState.excited(), tend)
            assert np.max(np.abs(rec.Y)) <= 1e-6 * (1 + d.flux * tend)
            assert np.all(np.diff(rec.N_mean) >= -1e-12)
            assert np.all(rec.emission_rate >= -1e-12)

    def test_flux_ratio_bound(self):
        m, d = random_model(40, n=2)
        t, r = flux_ratio(m, d, BlochState.excited(), 50.0)
        assert np.all(np.abs(r - 1) <= 1 / (d.flux * t) + 1e-9)
        assert abs(r[-1] - 1) <= 0.05

    def test_flux_ratio_zero_drive(self, trivial_model, undriven):
        with pytest.raises(ZeroDrive):
            flux_ratio(trivial_model, undriven, BlochState.excited(), 1.0)

    def test_scattered_rate_below_total_for_decay(self, trivial_model, undriven):
        rec = photon_count(trivial_model, undriven, BlochState.excited(), 1.0)
        assert np.allclose(rec.scattered_rate, rec.emission_rate)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), theta=st.floats(0, 2 * np.pi), p=st.floats(0, 1))
def test_positivity_preserved(seed, theta, p):
    m, d = random_model(seed)
    psi = [np.sqrt(p), np.sqrt(1 - p) * np.exp(1j * theta)]
    tr = evolve(m, d, BlochState.from_pure(psi), 3.0 / m.alpha_norm2)
    lo = np.linalg.eigvalsh(tr.densities()).min()
    assert lo >= -1e-9
