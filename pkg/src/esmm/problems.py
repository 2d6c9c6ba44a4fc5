"""Problem presets: initial data, boundary conditions, monitors, prescribed
mesh motions, and exact solutions for the benchmark suite.

Conventions: physical box per axis, periodic directions evolve N-1 unique
nodes (the preset N counts the duplicated endpoint, keeping the paper's
spacing dxi = L/(N-1)); all states carry full 3-component velocity/field
vectors regardless of d.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import PrimState

SQRT2 = np.sqrt(2.0)


@dataclass
class BCFace:
    kind: str                       # periodic | outflow | inflow
    state: PrimState | None = None  # fixed state for inflow


@dataclass
class ProblemSetup:
    name: str
    physics: str                    # rhd | rmhd
    d: int
    gamma: float
    box: np.ndarray                 # (d, 2)
    periodic: tuple
    ic: callable
    bc: list                        # per axis: (BCFace low, BCFace high)
    t_final: float
    monitor: dict = field(default_factory=dict)
    motion: callable = None         # prescribed motion x(xi0, t)
    exact: callable = None          # exact solution w(x, t)
    default_N: tuple = None
    cfl: float = 0.4

    def lengths(self):
        return self.box[:, 1] - self.box[:, 0]


def _full3(arrs, shape):
    out = np.zeros((3,) + shape)
    for k, a in enumerate(arrs):
        out[k] = a
    return out


# ----------------------------------------------------------------------
# 2D RMHD isentropic vortex (exact solution, prescribed motion, monitor)
# ----------------------------------------------------------------------

def vortex2d_exact(x, t, gamma=5.0 / 3.0, R=5.0, sig=0.2, B0=0.05):
    """Analytic vortex advected with speed (-1/2, -1/2), periodic in [-R,R]^2."""
    xh1 = np.mod(x[0] + 0.5 * t - 1.0 + R, 2.0 * R) - R
    xh2 = np.mod(x[1] + 0.5 * t - 1.0 + R, 2.0 * R) - R
    c = 0.5 * (SQRT2 - 1.0) * (xh1 + xh2)
    xt1, xt2 = xh1 + c, xh2 + c
    r2 = xt1**2 + xt2**2
    ex = np.exp(1.0 - r2)
    rho = (1.0 - sig * ex) ** (1.0 / (gamma - 1.0))
    p = rho**gamma
    kap = 2.0 * gamma * sig * rho + 2.0 * (gamma - 1.0) * B0**2 * (1.0 - r2) * ex
    f = np.sqrt(kap * ex / (kap * r2 * ex + (gamma - 1.0) * rho + gamma * p))
    vt1, vt2 = -xt2 * f, xt1 * f
    den = 4.0 - 2.0 * (vt1 + vt2)
    v1 = ((2.0 + SQRT2) * vt1 + (2.0 - SQRT2) * vt2 - 2.0) / den
    v2 = ((2.0 + SQRT2) * vt2 + (2.0 - SQRT2) * vt1 - 2.0) / den
    Bt1, Bt2 = -B0 * ex * xt2, B0 * ex * xt1
    B1 = 0.5 * ((SQRT2 + 1.0) * Bt1 - (SQRT2 - 1.0) * Bt2)
    B2 = 0.5 * ((SQRT2 + 1.0) * Bt2 - (SQRT2 - 1.0) * Bt1)
    sh = rho.shape
    return PrimState(rho, _full3([v1, v2], sh), p, _full3([B1, B2], sh), gamma)


def vortex2d_motion(xi0, t, R=5.0):
    """Prescribed sinusoidal mesh motion of the 2D vortex benchmark."""
    a = 0.2 * np.cos(np.pi * t / 4.0)
    x = np.empty_like(xi0)
    x[0] = xi0[0] + a * np.sin(3.0 * np.pi * xi0[1] / R)
    x[1] = xi0[1] + a * np.sin(3.0 * np.pi * xi0[0] / R)
    return x


# ----------------------------------------------------------------------
# 3D RMHD isentropic vortex
# ----------------------------------------------------------------------

_M3 = np.array([[40.0 / 3.0, 10.0 / 3.0], [10.0 / 3.0, 40.0 / 3.0]])
_M3INV = np.linalg.inv(_M3)


def vortex3d_exact(x, t, gamma=5.0 / 3.0, sig=0.2, B0=0.05):
    """Analytic 3D vortex tube along the diagonal, lattice-periodic."""
    s3 = (x[0] + x[1] + x[2]) / 3.0 + t
    xh1 = x[0] + s3
    xh2 = x[1] + s3
    # wrap (xh1, xh2) into the centered fundamental cell of the lattice M3
    y1 = _M3INV[0, 0] * xh1 + _M3INV[0, 1] * xh2
    y2 = _M3INV[1, 0] * xh1 + _M3INV[1, 1] * xh2
    k1, k2 = -np.round(y1), -np.round(y2)
    xt1 = xh1 + _M3[0, 0] * k1 + _M3[0, 1] * k2
    xt2 = xh2 + _M3[1, 0] * k1 + _M3[1, 1] * k2
    r2 = xt1**2 + xt2**2
    ex = np.exp(1.0 - r2)
    rho = (1.0 - sig * ex) ** (1.0 / (gamma - 1.0))
    p = rho**gamma
    kap = 2.0 * gamma * sig * rho + 2.0 * (gamma - 1.0) * B0**2 * (1.0 - r2) * ex
    f = np.sqrt(kap * ex / (kap * r2 * ex + (gamma - 1.0) * rho + gamma * p))
    vt1, vt2 = -xt2 * f, xt1 * f
    den = 6.0 - 3.0 * (vt1 + vt2)
    v1 = (4.0 * vt1 + vt2 - 3.0) / den
    v2 = (4.0 * vt2 + vt1 - 3.0) / den
    v3 = (vt1 + vt2 - 3.0) / den
    Bt1, Bt2 = -B0 * ex * xt2, B0 * ex * xt1
    B1 = (5.0 * Bt1 - Bt2) / 3.0
    B2 = (5.0 * Bt2 - Bt1) / 3.0
    B3 = (-Bt1 - Bt2) / 3.0
    sh = rho.shape
    return PrimState(rho, _full3([v1, v2, v3], sh), p,
                     _full3([B1, B2, B3], sh), gamma)


def vortex3d_motion(xi0, t, R=5.0):
    a = 0.2 * np.cos(np.pi * t / 4.0)
    s1 = np.sin(3.0 * np.pi * xi0[0] / R)
    s2 = np.sin(3.0 * np.pi * xi0[1] / R)
    s3 = np.sin(3.0 * np.pi * xi0[2] / (5.0 * R))
    x = np.empty_like(xi0)
    x[0] = xi0[0] + a * s2 * s3
    x[1] = xi0[1] + a * s3 * s1
    x[2] = xi0[2] + a * s1 * s2
    return x


# ----------------------------------------------------------------------
# quadrant Riemann problems (2D RHD, t=0.4)
# ----------------------------------------------------------------------

_RIEMANN = {
    # quadrant order: (x>.5,y>.5), (x<.5,y>.5), (x<.5,y<.5), (x>.5,y<.5)
    "riemann1": [(0.5, 0.5, -0.5, 5.0), (1.0, 0.5, 0.5, 5.0),
                 (3.0, -0.5, 0.5, 5.0), (1.5, -0.5, -0.5, 5.0)],
    "riemann2": [(1.0, 0.0, 0.0, 1.0), (0.5771, -0.3529, 0.0, 0.4),
                 (1.0, -0.3529, -0.3529, 1.0), (0.5771, 0.0, -0.3529, 0.4)],
    "riemann3": [(0.035145216124503, 0.0, 0.0, 0.162931056509027),
                 (0.1, 0.7, 0.0, 1.0), (0.5, 0.0, 0.0, 1.0),
                 (0.1, 0.0, 0.7, 1.0)],
}


def _riemann_ic(name, gamma):
    q1, q2, q3, q4 = _RIEMANN[name]

    def ic(x):
        sh = x[0].shape
        right = x[0] > 0.5
        top = x[1] > 0.5
        rho = np.where(right & top, q1[0], 0.0)
        v1 = np.where(right & top, q1[1], 0.0)
        v2 = np.where(right & top, q1[2], 0.0)
        p = np.where(right & top, q1[3], 0.0)
        for quad, mask in [(q2, ~right & top), (q3, ~right & ~top),
                           (q4, right & ~top)]:
            rho = np.where(mask, quad[0], rho)
            v1 = np.where(mask, quad[1], v1)
            v2 = np.where(mask, quad[2], v2)
            p = np.where(mask, quad[3], p)
        return PrimState(rho, _full3([v1, v2], sh), p, np.zeros((3,) + sh),
                         gamma)

    return ic


# ----------------------------------------------------------------------
# 2D RMHD blast / shock-cloud, 3D problems
# ----------------------------------------------------------------------

def _blast_ic(gamma):
    def ic(x):
        sh = x[0].shape
        r = np.sqrt(x[0] ** 2 + x[1] ** 2)
        # linear taper of rho, p between radii 0.8 and 1
        frac = np.clip((r - 0.8) / 0.2, 0.0, 1.0)
        rho = 0.01 + (1e-4 - 0.01) * frac
        p = 1.0 + (5e-4 - 1.0) * frac
        return PrimState(rho, np.zeros((3,) + sh), p,
                         _full3([0.1 * np.ones(sh)], sh), gamma)
    return ic


_SC_POST = dict(rho=3.86859, v=(0.68, 0.0, 0.0), p=1.25115,
                B=(0.0, 0.84981, -0.84981))
_SC_PRE = dict(rho=1.0, v=(0.0, 0.0, 0.0), p=0.05,
               B=(0.0, 0.16106, 0.16106))


def _const_state(d, sdict, gamma, shape=()):
    return PrimState(np.full(shape, sdict["rho"]),
                     _full3([np.full(shape, c) for c in sdict["v"]], shape),
                     np.full(shape, sdict["p"]),
                     _full3([np.full(shape, c) for c in sdict["B"]], shape),
                     gamma)


def _shockcloud_ic(gamma, d):
    def ic(x):
        sh = x[0].shape
        post = x[0] < 0.05
        rho = np.where(post, _SC_POST["rho"], _SC_PRE["rho"])
        p = np.where(post, _SC_POST["p"], _SC_PRE["p"])
        v = np.zeros((3,) + sh)
        B = np.zeros((3,) + sh)
        for k in range(3):
            v[k] = np.where(post, _SC_POST["v"][k], _SC_PRE["v"][k])
            B[k] = np.where(post, _SC_POST["B"][k], _SC_PRE["B"][k])
        if d == 2:
            r = np.sqrt((x[0] - 0.25) ** 2 + (x[1] - 0.5) ** 2)
        else:
            r = np.sqrt((x[0] - 0.25) ** 2 + (x[1] - 0.5) ** 2
                        + (x[2] - 0.5) ** 2)
        rho = np.where(r <= 0.15, 30.0, rho)
        return PrimState(rho, v, p, B, gamma)
    return ic


def _spherical_rp_ic(gamma):
    def ic(x):
        sh = x[0].shape
        r = np.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2)
        rho = np.where(r < 0.5, 10.0, 1.0)
        p = np.where(r < 0.5, 40.0 / 3.0, 1e-2)
        return PrimState(rho, np.zeros((3,) + sh), p, np.zeros((3,) + sh),
                         gamma)
    return ic


_SB_PRE = dict(rho=1.0, v=(0.0, 0.0, 0.0), p=0.05, B=(0.0, 0.0, 0.0))
_SB_POST = dict(rho=1.865225080631180, v=(-0.196781107378299, 0.0, 0.0),
                p=0.15, B=(0.0, 0.0, 0.0))


def _shockbubble_ic(gamma):
    def ic(x):
        sh = x[0].shape
        post = x[0] > 265.0
        rho = np.where(post, _SB_POST["rho"], _SB_PRE["rho"])
        p = np.where(post, _SB_POST["p"], _SB_PRE["p"])
        v = np.zeros((3,) + sh)
        v[0] = np.where(post, _SB_POST["v"][0], 0.0)
        r = np.sqrt((x[0] - 215.0) ** 2 + x[1] ** 2 + x[2] ** 2)
        rho = np.where(r <= 25.0, 0.1358, rho)
        return PrimState(rho, v, p, np.zeros((3,) + sh), gamma)
    return ic


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------

def make_problem(name: str) -> ProblemSetup:
    out = _out = lambda: BCFace("outflow")
    per = lambda: BCFace("periodic")
    if name == "vortex2d":
        g = 5.0 / 3.0
        return ProblemSetup(
            name, "rmhd", 2, g, np.array([[-5.0, 5.0], [-5.0, 5.0]]),
            (True, True), lambda x: vortex2d_exact(x, 0.0),
            [(per(), per()), (per(), per())], 4.0,
            monitor=dict(alpha=20.0, sigma="rho", lap_weight=10.0),
            motion=vortex2d_motion, exact=vortex2d_exact,
            default_N=(40, 40), cfl=0.4)
    if name == "vortex3d":
        g = 5.0 / 3.0
        return ProblemSetup(
            name, "rmhd", 3, g,
            np.array([[-5.0, 5.0], [-5.0, 5.0], [-25.0, 25.0]]),
            (True, True, True), lambda x: vortex3d_exact(x, 0.0),
            [(per(), per())] * 3, 0.1,
            monitor=dict(alpha=20.0, sigma="rho", lap_weight=10.0),
            motion=vortex3d_motion, exact=vortex3d_exact,
            default_N=(10, 10, 50), cfl=0.3)
    if name in _RIEMANN:
        g = 5.0 / 3.0
        return ProblemSetup(
            name, "rhd", 2, g, np.array([[0.0, 1.0], [0.0, 1.0]]),
            (False, False), _riemann_ic(name, g),
            [(out(), out()), (out(), out())], 0.4,
            monitor=dict(alpha=1200.0, sigma="lnrho", lap_weight=0.0),
            default_N=(100, 100), cfl=0.4)
    if name == "blast2d":
        g = 4.0 / 3.0
        return ProblemSetup(
            name, "rmhd", 2, g, np.array([[-6.0, 6.0], [-6.0, 6.0]]),
            (False, False), _blast_ic(g),
            [(out(), out()), (out(), out())], 4.0,
            monitor=dict(alpha=800.0, sigma="lnrho", lap_weight=0.0),
            default_N=(150, 150), cfl=0.4)
    if name == "shockcloud2d":
        g = 5.0 / 3.0
        inflow = BCFace("inflow", _const_state(2, _SC_POST, g))
        return ProblemSetup(
            name, "rmhd", 2, g, np.array([[-0.2, 1.2], [0.0, 1.0]]),
            (False, False), _shockcloud_ic(g, 2),
            [(inflow, out()), (out(), out())], 1.2,
            monitor=dict(alpha=800.0, sigma="lnrho", lap_weight=0.0),
            default_N=(210, 150), cfl=0.4)
    if name == "shockcloud3d":
        g = 5.0 / 3.0
        inflow = BCFace("inflow", _const_state(3, _SC_POST, g))
        return ProblemSetup(
            name, "rmhd", 3, g,
            np.array([[-0.2, 1.2], [0.0, 1.0], [0.0, 1.0]]),
            (False, False, False), _shockcloud_ic(g, 3),
            [(inflow, out()), (out(), out()), (out(), out())], 1.2,
            monitor=dict(alpha=800.0, sigma="lnrho", lap_weight=0.0),
            default_N=(42, 30, 30), cfl=0.3)
    if name == "sphericalrp3d":
        g = 5.0 / 3.0
        return ProblemSetup(
            name, "rhd", 3, g, np.array([[0.0, 1.0]] * 3),
            (False, False, False), _spherical_rp_ic(g),
            [(out(), out())] * 3, 0.4,
            monitor=dict(alpha=800.0, sigma="lnrho", lap_weight=0.0),
            default_N=(32, 32, 32), cfl=0.3)
    if name == "shockbubble3d":
        g = 5.0 / 3.0
        inflow = BCFace("inflow", _const_state(3, _SB_POST, g))
        return ProblemSetup(
            name, "rhd", 3, g,
            np.array([[0.0, 325.0], [-45.0, 45.0], [-45.0, 45.0]]),
            (False, False, False), _shockbubble_ic(g),
            [(out(), inflow), (out(), out()), (out(), out())], 90.0,
            monitor=dict(alpha=800.0, sigma="lnrho", lap_weight=0.0),
            default_N=(52, 16, 16), cfl=0.3)
    raise ValueError(f"unknown problem preset '{name}'")


PRESETS = ("riemann1", "riemann2", "riemann3", "vortex2d", "vortex3d",
           "blast2d", "shockcloud2d", "shockcloud3d", "sphericalrp3d",
           "shockbubble3d")
