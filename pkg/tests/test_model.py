import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ropesway.basis import SineBasis
from ropesway.errors import ConfigurationError, DomainError
from ropesway.model import (STATIC, DisturbanceProfile, Forcing, KinematicState, ModalState,
                            RopeParams, assemble_matrices, derive_f2, eval_forcing,
                            natural_frequencies, s_terms, sway_at, tension, tension_gradient)

mp.mp.dps = 30


# ----------------------------------------------------------------- parameters

def test_defaults():
    p = RopeParams()
    assert (p.rho, p.l, p.H, p.c_p, p.m_e, p.n_ropes) == (2.11, 390.0, 402.8, 0.0315, 3500.0, 8)
    assert p.m_eff == 437.5
    assert replace(p, car_mass_share="full").m_eff == 3500.0
    assert p.xi_dp == pytest.approx(385 / 390)


@pytest.mark.parametrize("field,value,key", [
    ("rho", 0.0, "rope.rho"),
    ("l", 500.0, "rope.l"),
    ("l", -1.0, "rope.l"),
    ("c_p", -0.1, "rope.c_p"),
    ("m_e", 0.0, "rope.m_e"),
    ("M_cs", -1.0, "rope.M_cs"),
    ("n_ropes", 0, "rope.n_ropes"),
    ("l_dp", 0.0, "rope.l_dp"),
    ("l_dp", 390.0, "rope.l_dp"),
    ("car_mass_share", "half", "rope.car_mass_share"),
    ("g", math.nan, "rope.g"),
])
def test_invalid_params_name_key(field, value, key):
    with pytest.raises(ConfigurationError) as exc:
        replace(RopeParams(), **{field: value})
    assert exc.value.key == key


# --------------------------------------------------------------- scalar laws

def test_derive_f2_limits_and_value(params):
    assert derive_f2(0.2, replace(params, l=params.H)) == pytest.approx(0.0, abs=1e-17)
    oracle = mp.mpf("0.2") * mp.sin(mp.pi * (mp.mpf("402.8") - 390) / (2 * mp.mpf("402.8")))
    assert derive_f2(0.2, params) == pytest.approx(float(oracle), rel=1e-14)
    assert derive_f2(0.2, params) == pytest.approx(0.0099791, abs=1e-7)
    # l -> 0 limit of the factor
    assert math.sin(math.pi * (params.H - 0.0) / (2 * params.H)) == pytest.approx(1.0)


def test_tension_examples(params):
    assert tension(params.l, 0.0, params) == pytest.approx(437.5 * 9.81, rel=1e-14)
    assert tension(0.0, 0.0, params) == pytest.approx((437.5 + 2.11 * 390) * 9.81, rel=1e-14)
    assert tension(0.0, 0.0, params) == pytest.approx(12364, abs=1)
    p = replace(params, M_cs=100.0)
    free_fall = KinematicState(l_ddot=p.g)
    for y in (0.0, 100.0, 390.0):
        assert tension(y, 0.0, p, free_fall) == pytest.approx(0.5 * 100.0 * 9.81)


def test_tension_domain(params):
    with pytest.raises(DomainError):
        tension(-0.1, 0.0, params)
    with pytest.raises(DomainError):
        tension(390.1, 0.0, params)


def test_tension_gradient_matches_difference(params):
    d = (tension(200.0, 0, params) - tension(100.0, 0, params)) / 100.0
    assert tension_gradient(params) == pytest.approx(d, rel=1e-12)


def test_s_terms_zero_disturbance(params):
    assert s_terms(3.0, params, STATIC, DisturbanceProfile.zero()) == (0.0, 0.0, 0.0, 0.0)


def test_s_terms_static_reductions(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    k = params.f2_factor
    for t in (0.0, 1.3, 7.9):
        f1, f1d, f1dd = dist.evaluate(t)
        s1, s2, s3, s4 = s_terms(t, params, STATIC, dist)
        assert s1 == pytest.approx((k - 1) * f1dd / params.l, rel=1e-12, abs=1e-18)
        assert s2 == pytest.approx((k - 1) * f1d / params.l, rel=1e-12, abs=1e-18)
        assert s3 == pytest.approx((k - 1) * f1 / params.l, rel=1e-12, abs=1e-18)
        G = params.rho * params.g
        assert s4 == pytest.approx(-G * s3 - params.c_p * f1d, rel=1e-12, abs=1e-18)


def test_G_constant(params):
    assert -tension_gradient(params) == pytest.approx(20.699, abs=1e-3)
    assert -tension_gradient(params) == pytest.approx(2.11 * 9.81, rel=1e-15)


def test_s2_against_central_difference(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    h = 1e-6

    def gap(t):
        f1, _, _, f2, _, _ = dist.boundary(t, params)
        return f2 - f1

    fd = (gap(h) - gap(-h)) / (2 * h) / params.l
    s2 = s_terms(0.0, params, STATIC, dist)[1]
    assert dist.f1_dot(0.0) == pytest.approx(0.2 * 2 * np.pi * 0.08)
    assert s2 == pytest.approx(fd, rel=1e-8)


def test_moving_rope_terms_reduce_continuously(params):
    # tiny l' and l'' must give nearly the static values
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    a = np.array(s_terms(2.0, params, STATIC, dist))
    b = np.array(s_terms(2.0, params, KinematicState(1e-9, 1e-9), dist))
    assert np.allclose(a, b, rtol=1e-6, atol=1e-12)


# -------------------------------------------------------------- disturbances

@given(st.floats(-2.0, 2.0), st.floats(0.01, 1.0), st.floats(0.0, 100.0))
def test_sinusoid_derivatives(amp, freq, t):
    d = DisturbanceProfile.sinusoid(amp, freq)
    w = 2 * np.pi * freq
    f, fd, fdd = d.evaluate(t)
    assert f == pytest.approx(amp * np.sin(w * t), abs=1e-12)
    assert fd == pytest.approx(amp * w * np.cos(w * t), abs=1e-12)
    assert fdd == pytest.approx(-amp * w * w * np.sin(w * t), abs=1e-12)
    assert np.allclose(d.evaluate_array([t])[:, 0], (f, fd, fdd), atol=1e-12)


def test_zero_disturbance_everywhere():
    d = DisturbanceProfile.zero()
    assert d.is_zero
    assert d.evaluate(5.0) == (0.0, 0.0, 0.0)
    assert not np.any(d.evaluate_array(np.linspace(0, 10, 7)))


def test_sampled_disturbance_reproduces_cubic_and_holds_ends():
    t = np.linspace(0.0, 10.0, 21)
    d = DisturbanceProfile.sampled(t, 0.01 * t**3 - 0.1 * t)
    f, fd, fdd = d.evaluate(3.3)
    assert f == pytest.approx(0.01 * 3.3**3 - 0.33, abs=1e-12)
    assert fd == pytest.approx(0.03 * 3.3**2 - 0.1, abs=1e-10)
    assert fdd == pytest.approx(0.06 * 3.3, abs=1e-9)
    assert d.evaluate(12.0) == (pytest.approx(0.01 * 1000 - 1.0), 0.0, 0.0)
    arr = d.evaluate_array([-1.0, 3.3, 12.0])
    assert arr[1, 0] == 0.0 and arr[2, 2] == 0.0
    assert arr[0, 1] == pytest.approx(f)


def test_sampled_disturbance_validation():
    with pytest.raises(ConfigurationError):
        DisturbanceProfile.sampled([0, 1, 1, 2], [0, 0, 0, 0])
    with pytest.raises(ConfigurationError):
        DisturbanceProfile("triangle")


# ------------------------------------------------------------------ matrices

def test_mass_and_damping(params):
    m = assemble_matrices(params, STATIC, SineBasis(2))
    assert np.array_equal(m.M, np.diag([2.11, 2.11]))
    m1 = assemble_matrices(params, STATIC, SineBasis(1))
    assert m1.C[0, 0] == 0.0315
    assert np.array_equal(m.C, 0.0315 * np.eye(2))
    assert not np.any(m.K_tilde)


def test_c_tilde_value_and_rank(params):
    oracle = (mp.sqrt(2) * mp.sin(mp.pi * 385 / mp.mpf(390))) ** 2 / 390
    m1 = assemble_matrices(params, STATIC, SineBasis(1))
    assert m1.C_tilde[0, 0] == pytest.approx(float(oracle), rel=1e-13)
    assert m1.C_tilde[0, 0] == pytest.approx(8.31e-6, rel=1e-3)
    m4 = assemble_matrices(params, STATIC, SineBasis(4))
    assert np.allclose(m4.C_tilde, m4.C_tilde.T)
    assert np.linalg.matrix_rank(m4.C_tilde, tol=1e-14) == 1
    assert np.min(np.linalg.eigvalsh(m4.C_tilde)) > -1e-18


def test_stiffness_first_mode(params):
    m1 = assemble_matrices(params, STATIC, SineBasis(1))
    oracle = (mp.mpf("2.11") * mp.mpf("9.81") * mp.pi**2 / (2 * 390)
              + mp.mpf("437.5") * mp.mpf("9.81") * mp.pi**2 / 390**2)
    assert m1.K[0, 0] == pytest.approx(float(oracle), rel=1e-13)
    assert m1.K[0, 0] == pytest.approx(0.5404, abs=1e-4)


def test_stiffness_symmetric_positive_definite(params):
    for n in (2, 4, 8):
        K = assemble_matrices(params, STATIC, SineBasis(n)).K
        assert np.allclose(K, K.T, rtol=0, atol=1e-14)
        assert np.min(np.linalg.eigvalsh(K)) > 0


def test_matrices_bit_identical_across_calls(params):
    a = assemble_matrices(params, STATIC, SineBasis(3))
    b = assemble_matrices(params, STATIC, SineBasis(3))
    for k in ("M", "C", "C_tilde", "K", "K_tilde"):
        assert np.array_equal(getattr(a, k), getattr(b, k))


@pytest.mark.parametrize("kin", [STATIC, KinematicState(1.5, 0.3)])
def test_analytic_and_quadrature_assembly_agree(params, kin):
    a = assemble_matrices(params, kin, SineBasis(5), method="analytic")
    q = assemble_matrices(params, kin, SineBasis(5), method="quadrature")
    for k in ("M", "C", "C_tilde", "K", "K_tilde"):
        x, y = getattr(a, k), getattr(q, k)
        assert np.max(np.abs(x - y)) <= 1e-9 * max(1e-30, np.max(np.abs(x))), k


def test_scaled_basis_rejected(params):
    with pytest.raises(ConfigurationError):
        assemble_matrices(params, STATIC, SineBasis(2, scale=2.0))


def test_first_natural_frequency(params):
    f = natural_frequencies(assemble_matrices(params, STATIC, SineBasis(1)))
    assert f[0] == pytest.approx(0.0805, abs=0.002)
    assert f[0] == pytest.approx(math.sqrt(0.540408 / 2.11) / (2 * math.pi), rel=1e-5)


def test_full_car_mass_moves_frequency_away(params):
    f = natural_frequencies(assemble_matrices(replace(params, car_mass_share="full"),
                                              STATIC, SineBasis(1)))
    assert f[0] > 0.15


def test_truncation_and_csv(params):
    m = assemble_matrices(params, STATIC, SineBasis(3))
    t = m.truncated(1)
    assert t.n == 1 and t.K[0, 0] == m.K[0, 0]
    text = m.to_csv()
    assert "K" in text
    first_k = [ln for ln in text.splitlines() if ln.startswith("K,")][0]
    assert float(first_k.split(",")[2]) == m.K[0, 0]


# ------------------------------------------------------------------- forcing

def test_forcing_zero_disturbance(params):
    F, Ft = eval_forcing(3.0, params, STATIC, SineBasis(2), DisturbanceProfile.zero())
    assert not np.any(F) and not np.any(Ft)


def test_forcing_single_mode_formula(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    l, rho, c_p = params.l, params.rho, params.c_p
    for t in (0.0, 2.0, 5.5):
        s1, s2, s3, s4 = s_terms(t, params, STATIC, dist)
        expect = (-l * math.sqrt(l) * (rho * s1 + c_p * s2) * math.sqrt(2) / math.pi
                  + math.sqrt(l) * (s4 - rho * dist.f1_ddot(t)) * 2 * math.sqrt(2) / math.pi)
        F, _ = eval_forcing(t, params, STATIC, SineBasis(1), dist)
        assert F[0] == pytest.approx(expect, rel=1e-12)


def test_forcing_tilde_vanishes_with_boundary_velocity(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    t_quarter = 1.0 / (4 * 0.08)
    _, Ft = eval_forcing(t_quarter, params, STATIC, SineBasis(3), dist)
    assert np.max(np.abs(Ft)) < 1e-17


def test_forcing_tilde_projects_damper_on_boundary_velocity(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    mats = assemble_matrices(params, STATIC, SineBasis(2))
    _, Ft = Forcing(params, STATIC, mats, dist)(0.0)
    f1d = dist.f1_dot(0.0)
    h_t = f1d + params.xi_dp * (params.f2_factor - 1) * f1d
    assert np.allclose(Ft, -mats.psi_dp / math.sqrt(params.l) * h_t, rtol=1e-14)


def test_vectorized_forcing_matches_scalar(params):
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    f = Forcing(params, STATIC, assemble_matrices(params, STATIC, SineBasis(3)), dist)
    ts = np.array([0.0, 0.7, 3.1])
    F, Ft = f.many(ts)
    for i, t in enumerate(ts):
        a, b = f(t)
        assert np.allclose(F[:, i], a, rtol=1e-13, atol=1e-16)
        assert np.allclose(Ft[:, i], b, rtol=1e-13, atol=1e-20)


# --------------------------------------------------------------------- sway

def test_sway_examples(params):
    b1 = SineBasis(1)
    st0 = ModalState(np.array([20.0]), np.array([0.0]))
    assert sway_at(0.0, st0, params, b1) == pytest.approx(0.0, abs=1e-15)
    assert sway_at(195.0, st0, params, b1) == pytest.approx(20 * math.sqrt(2) / math.sqrt(390),
                                                            rel=1e-14)
    assert sway_at(195.0, st0, params, b1) == pytest.approx(1.432, abs=1e-3)
    with pytest.raises(DomainError):
        sway_at(400.0, st0, params, b1)


@settings(max_examples=50)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.floats(0, 100))
def test_sway_honours_boundary_conditions(q, t):
    p = RopeParams()
    dist = DisturbanceProfile.sinusoid(0.2, 0.08)
    s = ModalState(np.array(q), np.zeros(3), t)
    f1, _, _, f2, _, _ = dist.boundary(t, p)
    assert sway_at(0.0, s, p, SineBasis(3), dist) == pytest.approx(f1, abs=1e-12)
    assert sway_at(p.l, s, p, SineBasis(3), dist) == pytest.approx(f2, abs=1e-12)


def test_modal_state_validation():
    with pytest.raises(ValueError):
        ModalState(np.array([1.0, 2.0]), np.array([1.0]))
    s = ModalState.zeros(2)
    assert s.is_finite and s.n == 2
    assert np.array_equal(ModalState.from_z(s.z, 1.0).q, s.q)
