"""ES dissipation: rotation, entropy scaling, WENO interpolation, the sign
switch, and the dissipation operator's entropy properties."""
import numpy as np
import pytest

from esmm.dissipation import (du_dv, du_dw, dv_dw, full_rotation,
                              interface_dissipation, rotation_matrix,
                              scaling_matrix, sign_switch, stencil_offsets,
                              weno_interface_jump, weno_limits)
from esmm.states import (ConsState, PrimState, build_tables, cons_to_prim,
                         entropy_vars, prim_to_cons)

from test_states import random_states, state

GAMMA = 5.0 / 3.0


# ---------------------------------------------------------------- rotation

def test_rotation_aligned_axis():
    T0 = rotation_matrix(np.array([2.5, 0.0, 0.0]))
    assert np.allclose(T0, np.eye(3), atol=1e-15)


def test_rotation_y_axis():
    T0 = rotation_matrix(np.array([0.0, 3.0, 0.0]))
    assert np.allclose(T0 @ np.array([0, 1, 0]), [1, 0, 0], atol=1e-15)


def test_rotation_orthogonality_random():
    rng = np.random.default_rng(0)
    met = rng.standard_normal((500, 3))
    T0 = rotation_matrix(met)
    eye = np.einsum("...ji,...jk->...ik", T0, T0)
    assert np.abs(eye - np.eye(3)).max() < 1e-14


def test_full_rotation_blocks():
    T0 = rotation_matrix(np.array([1.0, 2.0, -0.5]))
    T = full_rotation(T0, "rmhd")
    assert T.shape == (8, 8)
    assert T[0, 0] == 1.0 and T[4, 4] == 1.0
    assert np.allclose(T[1:4, 1:4], T0)
    assert np.allclose(T[5:8, 5:8], T0)
    T5 = full_rotation(T0, "rhd")
    assert T5.shape == (5, 5)


# ----------------------------------------------------------------- scaling

@pytest.mark.parametrize("mode", ["rhd", "rmhd"])
def test_scaling_matrix_reproduces_fd_hessian(mode):
    # R R^T equals the finite-difference dU/dV to 1e-6 relative
    w = state(1.0, (0, 0, 0), 1.0, (0.4, -0.2, 0.3) if mode == "rmhd"
              else (0, 0, 0))
    m = 5 if mode == "rhd" else 8
    R, fb = scaling_matrix(w, mode)
    H = (R @ np.swapaxes(R, -1, -2))
    U0 = prim_to_cons(w).vec()[:m, None][:, 0]
    eps = 1e-6
    JVU = np.zeros((m, m))
    for i in range(m):
        Up, Um = U0.copy(), U0.copy()
        Up[i] += eps
        Um[i] -= eps

        def VofU(U):
            u8 = np.zeros(8)
            u8[:m] = U
            wp = cons_to_prim(ConsState(np.atleast_1d(u8[0]), u8[1:4, None],
                                        np.atleast_1d(u8[4]), u8[5:8, None]),
                              GAMMA, mode)
            return entropy_vars(wp)[:m, 0]

        JVU[:, i] = (VofU(Up) - VofU(Um)) / (2 * eps)
    H_fd = np.linalg.inv(0.5 * (JVU + JVU.T))
    assert np.abs(H - H_fd).max() / np.abs(H_fd).max() < 1e-6
    assert not fb.any()


def test_scaling_matrix_symmetry_and_velocity_sweep():
    for vmag in np.linspace(0.0, 0.95, 20):
        w = state(1.0, (vmag / np.sqrt(2), vmag / np.sqrt(2), 0), 1.0,
                  (0.3, 0.1, -0.2))
        R, fb = scaling_matrix(w, "rmhd")
        H = R @ R.T
        assert np.abs(H - H.T).max() < 1e-12 * np.abs(H).max()
        assert not fb.any()


def test_scaling_matrix_sqrtm_variant():
    w = state(1.2, (0.3, -0.1, 0.2), 0.7, (0.5, 0.2, -0.3))
    R1, _ = scaling_matrix(w, "rmhd", "cholesky")
    R2, _ = scaling_matrix(w, "rmhd", "sqrtm")
    H1 = R1 @ R1.T
    H2 = R2 @ R2.T
    assert np.abs(H1 - H2).max() < 1e-10 * np.abs(H1).max()
    assert np.abs(R2 - R2.T).max() < 1e-12 * np.abs(R2).max()


def test_analytic_jacobians_vs_complex_step():
    from esmm.dissipation import (_cons_of_prim, _entropy_of_prim, _jacobian,
                                  _prim_vec)
    rng = np.random.default_rng(2)
    w = random_states(rng, 100, "rmhd", vmax=0.95, Bmax=2.0)
    for mode, wm in (("rmhd", w),
                     ("rhd", PrimState(w.rho, w.v, w.p, 0 * w.B, GAMMA))):
        z = _prim_vec(wm, mode)
        assert np.abs(du_dw(wm, mode)
                      - _jacobian(_cons_of_prim, z, GAMMA, mode)).max() < 1e-10
        assert np.abs(dv_dw(wm, mode)
                      - _jacobian(_entropy_of_prim, z, GAMMA, mode)).max() < 1e-10


# -------------------------------------------------------------------- WENO

def test_weno_constant_line():
    line = np.full((2, 12), 2.3)
    for w in (1, 3, 5):
        jw, jf = weno_interface_jump(line, w, 5)
        assert np.allclose(jw, 0.0, atol=1e-15)
        assert np.allclose(jf, 0.0, atol=1e-15)


def test_weno_linear_line_zero_jump():
    line = (np.arange(14, dtype=float) * 0.37 + 1.0)[None, :]
    for w in (3, 5):
        jw, _ = weno_interface_jump(line, w, 6)
        assert np.abs(jw).max() < 1e-13


@pytest.mark.parametrize("deg", [0, 1, 2, 3, 4])
def test_weno5_linear_weights_reproduce_quartics(deg):
    # midpoint-interpolation order conditions: degree <= 4 exact to 1e-12
    x = np.arange(-2.0, 4.0)
    S = (0.7 * x + 0.1) ** deg
    left, right = weno_limits(S[None, :], 5, nonlinear=False)
    exact = (0.7 * 0.5 + 0.1) ** deg
    assert abs(float(left) - exact) < 1e-12 * max(1, abs(exact))
    assert abs(float(right) - exact) < 1e-12 * max(1, abs(exact))


def test_weno3_linear_weights_reproduce_quadratics():
    x = np.arange(-1.0, 3.0)
    for deg in (0, 1, 2):
        S = (0.5 * x - 0.3) ** deg
        left, right = weno_limits(S[None, :], 3, nonlinear=False)
        exact = (0.5 * 0.5 - 0.3) ** deg
        assert abs(float(left) - exact) < 1e-13
        assert abs(float(right) - exact) < 1e-13


def test_weno5_nonlinear_refinement_order():
    # one-sided limits converge at 5th order on smooth data
    errs = []
    for n in (20, 40, 80, 160):
        h = 1.0 / n
        xs = np.arange(-2, 4) * h + 0.3
        offs = list(stencil_offsets(5))
        line = np.sin(2 * np.pi * (0.3 + h * np.arange(-4, 8)))[None, :]
        jw, _ = weno_interface_jump(line, 5, 5)
        mid = np.sin(2 * np.pi * (0.3 + h * (5 - 4 + 0.5)))
        S = line[:, 5 + np.array(offs)]
        left, right = weno_limits(S, 5)
        errs.append(max(abs(float(left) - mid), abs(float(right) - mid)))
    order = np.log2(errs[-2] / errs[-1])
    assert order > 4.4


def test_sign_switch_cases():
    assert sign_switch(np.array(1.0), np.array(2.0)) == 1.0
    assert sign_switch(np.array(-1.0), np.array(2.0)) == 0.0
    assert sign_switch(np.array(1.0), np.array(0.0)) == 1.0
    assert sign_switch(np.array(0.0), np.array(-2.0)) == 1.0


def test_sign_property_quantity_nonnegative_random():
    # jump_first^T Y jump_weno >= 0 exactly, 1e5 random lines
    rng = np.random.default_rng(3)
    lines = rng.standard_normal((100000, 8))
    jw = lines[:, :4].sum(axis=1)
    jf = lines[:, 4:].sum(axis=1)
    Y = sign_switch(jw, jf)
    assert np.all(jf * Y * jw >= 0.0)


# ----------------------------------------------- assembled dissipation op

def _line_setup(mode="rmhd", n=24, smooth=True, seed=8):
    rng = np.random.default_rng(seed)
    g = 3
    x = (np.arange(n + 2 * g) - g) / n
    if smooth:
        rho = 1.0 + 0.3 * np.sin(2 * np.pi * x)
        p = 1.0 + 0.2 * np.cos(2 * np.pi * x)
        v = np.stack([0.3 * np.sin(2 * np.pi * x), 0 * x, 0 * x])
        B = np.stack([0 * x + 0.4, 0.3 * np.cos(2 * np.pi * x), 0 * x]) \
            if mode == "rmhd" else np.zeros((3, n + 2 * g))
    else:
        rho = np.where(x < 0.5, 1.0, 0.125)
        p = np.where(x < 0.5, 1.0, 0.1)
        v = np.zeros((3, n + 2 * g))
        B = np.zeros((3, n + 2 * g))
    tab = build_tables(PrimState(rho, v, p, B, GAMMA))
    met_t = np.zeros(n + 2 * g)
    met_s = np.ones((1, n + 2 * g))
    return tab, met_t, met_s, g, n


@pytest.mark.parametrize("mode", ["rhd", "rmhd"])
def test_dissipation_vanishes_on_constant_state(mode):
    g, n = 3, 12
    sh = (n + 2 * g,)
    tab = build_tables(PrimState(np.full(sh, 1.1),
                                 np.tile(np.array([[0.2], [0.1], [0.0]]), (1,) + sh),
                                 np.full(sh, 0.9),
                                 np.tile(np.array([[0.3], [0.0], [0.2]]), (1,) + sh)
                                 if mode == "rmhd" else np.zeros((3,) + sh),
                                 GAMMA))
    met_t = np.zeros(sh)
    met_s = np.ones((1,) + sh)
    dfl, prod, nfb = interface_dissipation(tab, met_t, met_s, 0, g, n, 3, mode)
    assert np.abs(dfl).max() < 1e-13
    assert np.abs(prod).max() < 1e-13


def test_dissipation_rusanov_scale_w1():
    tab, met_t, met_s, g, n = _line_setup("rmhd")
    dfl, _, _ = interface_dissipation(tab, met_t, met_s, 0, g, n, 1, "rmhd")
    U = prim_to_cons(PrimState(tab.rho, tab.v, tab.p, tab.B, GAMMA)).vec()
    dU = 0.5 * (U[:, g:g + n + 1] - U[:, g - 1:g + n])
    # lam = 1 on the static identity-metric line; the scaled jump agrees with
    # the Rusanov jump up to the second-order mean-state error
    assert np.abs(dfl - dU).max() < 0.15 * np.abs(dU).max()


def test_dissipation_refinement_smooth():
    # |F^ - F~| = O(dxi^w) under refinement on smooth data
    errs = []
    for n in (16, 32, 64):
        tab, met_t, met_s, g, _ = _line_setup("rmhd", n)
        dfl, _, _ = interface_dissipation(tab, met_t, met_s, 0, g, n, 3,
                                          "rmhd")
        errs.append(np.abs(dfl).max())
    order = np.log2(errs[-2] / errs[-1])
    assert order > 4.0


def test_dissipation_entropy_production_sign():
    # [Vt]^T Y [Vt]^WENO >= 0 at every interface (Riemann-type data)
    tab, met_t, met_s, g, n = _line_setup("rhd", smooth=False)
    dfl, prod, _ = interface_dissipation(tab, met_t, met_s, 0, g, n, 3, "rhd")
    assert dfl.shape[0] == 8
    assert np.abs(dfl[5:]).max() == 0.0  # RHD: no magnetic dissipation rows


def test_rhd_mode_keeps_B_rows_zero():
    tab, met_t, met_s, g, n = _line_setup("rhd", smooth=True)
    dfl, _, _ = interface_dissipation(tab, met_t, met_s, 0, g, n, 2, "rhd")
    assert np.abs(dfl[5:]).max() == 0.0
