"""Relativistic state layer: conversions, entropy pair, signal speeds."""
import numpy as np
import pytest

from esmm.states import (ConsState, PrimState, UnphysicalStateError,
                         build_tables, cons_to_prim, entropy_quantities,
                         entropy_vars, max_signal_speed, physical_flux,
                         prim_to_cons, rhd_eigenvalues)

GAMMA = 5.0 / 3.0


def random_states(rng, n, mode="rmhd", vmax=0.99, Bmax=5.0,
                  rho_rng=(1e-3, 10.0), p_rng=(1e-3, 10.0)):
    rho = rng.uniform(*rho_rng, n)
    p = rng.uniform(*p_rng, n)
    v = rng.uniform(-1.0, 1.0, (3, n))
    v *= rng.uniform(0.0, vmax, n) / np.maximum(np.linalg.norm(v, axis=0),
                                                1e-300)
    B = rng.uniform(-Bmax, Bmax, (3, n)) if mode == "rmhd" \
        else np.zeros((3, n))
    return PrimState(rho, v, p, B, GAMMA)


def state(rho, v, p, B):
    return PrimState(np.array(rho), np.array(v, dtype=float).reshape(3),
                     np.array(p), np.array(B, dtype=float).reshape(3), GAMMA)


def test_prim_to_cons_rest_state():
    # W=1, h=3.5 closed form
    u = prim_to_cons(state(1.0, (0, 0, 0), 1.0, (0, 0, 0)))
    assert np.isclose(u.D, 1.0)
    assert np.allclose(u.m, 0.0)
    assert np.isclose(u.E, 2.5)


def test_prim_to_cons_rest_state_with_field():
    # v=0 so b^2 = |B|^2; E = 3.5 - 1.5 + 1 = 3
    u = prim_to_cons(state(1.0, (0, 0, 0), 1.0, (1, 0, 0)))
    assert np.isclose(u.E, 3.0)
    assert np.allclose(u.m, 0.0)
    assert np.allclose(u.B, [1, 0, 0])


def test_cons_to_prim_rest_state():
    w = cons_to_prim(ConsState(np.array(1.0), np.zeros(3), np.array(2.5),
                               np.zeros(3)), GAMMA, "rhd")
    assert np.isclose(w.rho, 1.0)
    assert np.isclose(w.p, 1.0)
    assert np.allclose(w.v, 0.0)


def test_cons_to_prim_rejects_E_below_D():
    with pytest.raises(UnphysicalStateError):
        cons_to_prim(ConsState(np.array(1.0), np.zeros(3), np.array(0.9),
                               np.zeros(3)), GAMMA, "rhd")


@pytest.mark.parametrize("mode", ["rhd", "rmhd"])
def test_roundtrip_10k_random_states(mode):
    rng = np.random.default_rng(101)
    w = random_states(rng, 10000, mode)
    w2 = cons_to_prim(prim_to_cons(w), GAMMA, mode, guess=None)
    assert np.abs(w2.rho / w.rho - 1).max() < 1e-10
    assert np.abs(w2.p / w.p - 1).max() < 1e-10
    assert np.abs(w2.v - w.v).max() < 1e-10


def test_physical_flux_rest_state():
    F = physical_flux(state(1.0, (0, 0, 0), 1.0, (0, 0, 0)), 0)
    assert np.allclose(F, [0, 1, 0, 0, 0, 0, 0, 0])


def test_physical_flux_matches_independent_rederivation():
    # independent re-derivation of the flux component formulas
    rng = np.random.default_rng(3)
    w = random_states(rng, 50, "rmhd")
    W = w.W
    vB = np.einsum("k...,k...->...", w.v, w.B)
    B2 = np.einsum("k...,k...->...", w.B, w.B)
    pt = w.p + 0.5 * (B2 / W**2 + vB**2)
    u = prim_to_cons(w)
    for k in range(3):
        F = physical_flux(w, k)
        assert np.allclose(F[0], u.D * w.v[k], rtol=1e-13)
        for i in range(3):
            ref = u.m[i] * w.v[k] - w.B[k] * (w.B[i] / W**2 + vB * w.v[i])
            if i == k:
                ref = ref + pt
            assert np.allclose(F[1 + i], ref, rtol=1e-12, atol=1e-12)
        assert np.allclose(F[4], u.m[k], rtol=1e-13)
        for i in range(3):
            assert np.allclose(F[5 + i], w.v[k] * w.B[i] - w.B[k] * w.v[i],
                               rtol=1e-13, atol=1e-14)


def test_entropy_quantities_rest_state():
    eta, q, V, pots = entropy_quantities(state(1.0, (0, 0, 0), 1.0, (0, 0, 0)))
    assert np.isclose(eta, 0.0)
    assert np.allclose(q, 0.0)
    assert np.allclose(V.components[:5], [3.5, 0, 0, 0, -1])


def test_potential_identities_random_states():
    # phi = V.U - eta and psi_k = V.F_k + Phi B_k - q_k, two-way to 1e-11
    rng = np.random.default_rng(5)
    w = random_states(rng, 300, "rmhd", vmax=0.95, Bmax=3.0)
    eta, q, V, pots = entropy_quantities(w)
    U = prim_to_cons(w).vec()
    phi2 = np.einsum("m...,m...->...", V.components, U) - eta
    assert np.abs(pots.phi - phi2).max() < 1e-11 * max(1, np.abs(phi2).max())
    for k in range(3):
        Fk = physical_flux(w, k)
        psi2 = np.einsum("m...,m...->...", V.components, Fk) \
            + pots.Phi * w.B[k] - q[k]
        assert np.abs(pots.psi[k] - psi2).max() \
            < 1e-11 * max(1, np.abs(psi2).max())


def test_homogeneity_of_godunov_powell_potential():
    rng = np.random.default_rng(6)
    w = random_states(rng, 2000, "rmhd", vmax=0.95)
    _, _, V, pots = entropy_quantities(w)
    dot = np.einsum("m...,m...->...", pots.PhiPrime, V.components)
    denom = np.maximum(np.abs(pots.Phi), 1e-30)
    assert (np.abs(dot - pots.Phi) / denom).max() < 1e-12 + 1e-12 / denom.min()


def test_entropy_consistency_finite_difference_rhd():
    # V^T dF_k/dU = dq_k/dU by central differences at random RHD states
    rng = np.random.default_rng(7)
    w = random_states(rng, 100, "rhd", vmax=0.9, rho_rng=(0.1, 5.0),
                      p_rng=(0.1, 5.0))
    U0 = prim_to_cons(w).vec()
    eta0, q0, V, _ = entropy_quantities(w)
    eps = 1e-6
    for k in range(2):
        dq = np.zeros((5,) + q0[k].shape)
        VdF = np.zeros_like(dq)
        for i in range(5):
            Up = U0.copy()
            Um = U0.copy()
            scale = np.maximum(np.abs(U0[i]), 1.0)
            Up[i] += eps * scale
            Um[i] -= eps * scale
            wp = cons_to_prim(ConsState.from_vec(Up), GAMMA, "rhd")
            wm = cons_to_prim(ConsState.from_vec(Um), GAMMA, "rhd")
            _, qp, _, _ = entropy_quantities(wp)
            _, qm, _, _ = entropy_quantities(wm)
            dq[i] = (qp[k] - qm[k]) / (2 * eps * scale)
            Fp = physical_flux(wp, k)[:5]
            Fm = physical_flux(wm, k)[:5]
            VdF[i] = np.einsum("m...,m...->...",
                               V.components[:5], (Fp - Fm) / (2 * eps * scale))
        denom = np.maximum(np.abs(dq), 1.0)
        assert (np.abs(VdF - dq) / denom).max() < 1e-5


def test_entropy_hessian_convexity_probe():
    # finite-difference dV/dU is symmetric positive definite (RHD, |v|<=0.9)
    rng = np.random.default_rng(8)
    w = random_states(rng, 100, "rhd", vmax=0.9, rho_rng=(0.1, 5.0),
                      p_rng=(0.1, 5.0))
    U0 = prim_to_cons(w).vec()
    eps = 1e-6
    n = U0.shape[1]
    Hs = np.zeros((n, 5, 5))
    for i in range(5):
        Up = U0.copy()
        Um = U0.copy()
        scale = np.maximum(np.abs(U0[i]), 1.0)
        Up[i] += eps * scale
        Um[i] -= eps * scale
        wp = cons_to_prim(ConsState.from_vec(Up), GAMMA, "rhd")
        wm = cons_to_prim(ConsState.from_vec(Um), GAMMA, "rhd")
        dV = (entropy_vars(wp) - entropy_vars(wm))[:5] / (2 * eps * scale)
        Hs[:, :, i] = dV.T
    Hs = 0.5 * (Hs + np.swapaxes(Hs, 1, 2))
    assert np.linalg.eigvalsh(Hs)[:, 0].min() > 0


def test_rhd_sound_speed_value():
    # c_s = sqrt(Gamma p/(rho h)) = sqrt((5/3)/3.5) at the unit rest state
    w = state(1.0, (0, 0, 0), 1.0, (0, 0, 0))
    b = max_signal_speed(w, mode="rhd")
    assert np.isclose(float(b), 0.6900655593423542, rtol=1e-12)


def test_rmhd_bound_dominates_normal_velocity():
    rng = np.random.default_rng(9)
    w = random_states(rng, 500, "rmhd")
    n = np.zeros((3, 500))
    n[0] = 1.0
    b = max_signal_speed(w, n, "rmhd")
    assert np.all(b <= 1.0)
    assert np.all(b >= np.abs(w.v[0]) - 1e-14)


def test_rhd_bound_subluminal_under_velocity_sweep():
    for vmag in np.linspace(0.0, 0.99, 40):
        w = state(1.0, (vmag, 0, 0), 1.0, (0, 0, 0))
        b = max_signal_speed(w, mode="rhd")
        assert float(b) < 1.0


def test_prim_state_validation():
    with pytest.raises(UnphysicalStateError):
        state(1.0, (0.8, 0.8, 0), 1.0, (0, 0, 0)).validate()
    with pytest.raises(UnphysicalStateError):
        state(-1.0, (0, 0, 0), 1.0, (0, 0, 0)).validate()
