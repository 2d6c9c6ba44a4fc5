"""Mesh geometry: central differences, CMM metrics, discrete GCLs."""
import numpy as np
import pytest

from esmm.mesh import MeshBlock, cdiff, cdiff2


def uniform_mesh(N, p, periodic=False, span=1.0):
    d = len(N)
    dxi = tuple(span / n for n in N)
    mesh = MeshBlock(N, dxi, max(p, 3), p, (periodic,) * d,
                     np.full(d, span))
    axes = [np.arange(n) * dx for n, dx in zip(N, dxi)]
    xi = np.stack(np.meshgrid(*axes, indexing="ij"))
    return mesh, xi


def perturbed_mesh(rng, N, p, amp=0.02):
    d = len(N)
    mesh, xi = uniform_mesh(N, p, periodic=True)
    x = xi.copy()
    for k in range(d):
        for j in range(d):
            x[k] += amp * rng.uniform(0.3, 1.0) * np.sin(
                2 * np.pi * xi[j] + rng.uniform(0, 2 * np.pi))
    mesh.set_coords(x)
    mesh.compute_spatial_metrics()
    return mesh, x


# ------------------------------------------------------- central difference

def test_cdiff_linear_exact():
    a = np.arange(20, dtype=float)
    d = cdiff(a, 0, 1)
    assert np.allclose(d[1:-1], 1.0, atol=1e-14)


def test_cdiff_degree5_exact_p3():
    x = np.arange(30) * 0.17
    d = cdiff(x**5, 0, 3) / 0.17
    ref = 5 * x**4
    assert np.abs(d[3:-3] - ref[3:-3]).max() < 1e-12 * np.abs(ref).max()


def test_cdiff_constant_zero():
    assert np.allclose(cdiff(np.full(15, 3.7), 0, 2), 0.0, atol=1e-15)


def test_cdiff2_bitwise_commutative():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((14, 17))
    for p in (1, 2, 3):
        assert np.array_equal(cdiff2(a, 0, 1, p), cdiff2(a, 1, 0, p))


# ----------------------------------------------------------------- metrics

@pytest.mark.parametrize("d", [1, 2, 3])
def test_identity_map_metrics(d):
    N = (9,) * d
    mesh, xi = uniform_mesh(N, 3)
    mesh.set_coords(xi)
    mesh.compute_spatial_metrics()
    J = mesh.geometric_jacobian()
    assert np.abs(J[mesh.int_f] - 1.0).max() < 1e-13
    for k in range(d):
        for j in range(d):
            ref = 1.0 if k == j else 0.0
            assert np.abs(mesh.met_s[k, j][mesh.int_f] - ref).max() < 1e-13


def test_rotated_uniform_map_2d():
    # x = Q xi with orthogonal Q: met_s = adj(Q) = Q^T (det Q = 1), SCL = 0
    th = 0.37
    Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    N = (12, 14)
    mesh, xi = uniform_mesh(N, 2)
    x = np.einsum("ij,j...->i...", Q, xi)
    mesh.set_coords(x)
    mesh.compute_spatial_metrics()
    adj = np.linalg.inv(Q)  # times det Q = 1
    for k in range(2):
        for j in range(2):
            assert np.abs(mesh.met_s[k, j][mesh.int_f] - adj[k, j]).max() < 1e-13
    assert np.abs(mesh.scl_residual()).max() < 1e-13


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("d", [2, 3])
def test_scl_residual_random_smooth_mesh(p, d):
    rng = np.random.default_rng(10 * d + p)
    N = (10,) * d if d == 3 else (16, 18)
    mesh, _ = perturbed_mesh(rng, N, p)
    assert np.abs(mesh.scl_residual()).max() < 1e-13


def test_scl_negative_control():
    # corrupted metrics must produce an O(1) residual
    rng = np.random.default_rng(3)
    mesh, _ = perturbed_mesh(rng, (14, 14), 2)
    mesh.met_s += rng.standard_normal(mesh.met_s.shape)
    assert np.abs(mesh.scl_residual()).max() > 1e-2


def test_temporal_metrics_static_and_translation():
    mesh, xi = uniform_mesh((10, 10), 2)
    mesh.set_coords(xi)
    mesh.compute_spatial_metrics()
    mesh.set_xdot(np.zeros_like(xi))
    met_t = mesh.compute_temporal_metrics()
    assert np.abs(met_t).max() == 0.0
    xd = np.zeros_like(xi)
    xd[0] = 1.0
    mesh.set_xdot(xd)
    met_t = mesh.compute_temporal_metrics()
    assert np.allclose(met_t[0][mesh.int_f], -1.0, atol=1e-13)
    assert np.allclose(met_t[1][mesh.int_f], 0.0, atol=1e-13)


def test_temporal_metrics_independent_reevaluation():
    rng = np.random.default_rng(4)
    mesh, x = perturbed_mesh(rng, (12, 13), 2)
    xd = rng.standard_normal(x.shape) * 0.1
    mesh.set_xdot(xd)
    met_t = mesh.compute_temporal_metrics().copy()
    # independent loop ordering
    xdf = mesh.field_of_coord(mesh.xdot)
    for k in range(2):
        ref = np.zeros(mesh.shape_f)
        for j in range(2):
            ref -= xdf[j] * mesh.met_s[k, j]
        assert np.array_equal(met_t[k], ref)


def test_vcl_rhs_static_and_rigid():
    mesh, xi = uniform_mesh((10, 11), 2)
    mesh.set_coords(xi)
    mesh.compute_spatial_metrics()
    mesh.set_xdot(np.zeros_like(xi))
    mesh.compute_temporal_metrics()
    assert np.abs(mesh.vcl_rhs()).max() == 0.0
    xd = np.ones_like(xi) * np.array([0.3, -0.2]).reshape(2, 1, 1)
    mesh.set_xdot(xd)
    mesh.compute_temporal_metrics()
    assert np.abs(mesh.vcl_rhs()).max() < 1e-13


def test_vcl_rhs_analytic_motion_order():
    # dJ/dt from the discrete VCL converges (order 2p in space) to the time
    # derivative of the ANALYTIC Jacobian of the sinusoidal vortex motion:
    # x1 = X1 + a(t) s(X2), x2 = X2 + a(t) s(X1)
    # => J = 1 - a^2 s'(X1) s'(X2), dJ/dt = -2 a a' s'(X1) s'(X2).
    from esmm.problems import vortex2d_motion
    R = 5.0
    p = 2
    t = 0.7
    errs = []
    for N in (24, 48):
        mesh, xi = uniform_mesh((N, N), p, periodic=True, span=10.0)
        xi = xi - R
        x = vortex2d_motion(xi, t)
        eps = 1e-6
        xd = (vortex2d_motion(xi, t + eps)
              - vortex2d_motion(xi, t - eps)) / (2 * eps)
        mesh.set_coords(x)
        mesh.set_xdot(xd)
        mesh.compute_spatial_metrics()
        mesh.compute_temporal_metrics()
        dJdt = mesh.vcl_rhs()
        a = 0.2 * np.cos(np.pi * t / 4.0)
        adot = -0.2 * (np.pi / 4.0) * np.sin(np.pi * t / 4.0)
        sp = lambda z: (3 * np.pi / R) * np.cos(3 * np.pi * z / R)
        ref = -2.0 * a * adot * sp(xi[0]) * sp(xi[1])
        errs.append(np.abs(dJdt - ref).max())
    assert np.log2(errs[0] / errs[1]) > 2 * p - 0.6


def test_jacobian_positivity_on_valid_mesh():
    rng = np.random.default_rng(5)
    mesh, _ = perturbed_mesh(rng, (16, 16), 3)
    J = mesh.geometric_jacobian()
    assert J[mesh.int_f].min() > 0
