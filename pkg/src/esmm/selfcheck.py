"""Fast property-check suite behind the `check` CLI subcommand: EC flux
contract, discrete SCL residual, and free-stream preservation."""
from __future__ import annotations

import numpy as np

from . import states
from .config import SimulationConfig
from .ecflux import ec_pair_fluxes
from .mesh import MeshBlock
from .problems import BCFace, ProblemSetup
from .solver import Simulation
from .states import PrimState, build_tables


def random_states(rng, n, mode="rmhd", vmax=0.99, Bmax=5.0):
    rho = rng.uniform(1e-3, 10.0, n)
    p = rng.uniform(1e-3, 10.0, n)
    v = rng.uniform(-1.0, 1.0, (3, n))
    v *= rng.uniform(0.0, vmax, n) / np.maximum(
        np.linalg.norm(v, axis=0), 1e-300)
    B = rng.uniform(-Bmax, Bmax, (3, n)) if mode == "rmhd" else np.zeros((3, n))
    return PrimState(rho, v, p, B, 5.0 / 3.0)


def check_ec_contract(n=10000, seed=7):
    """Max relative defect of the two-point EC contract over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for mode in ("rhd", "rmhd"):
        tL = build_tables(random_states(rng, n, mode))
        tR = build_tables(random_states(rng, n, mode))
        dV = tR.V - tL.V
        Ut, Ft = ec_pair_fluxes(tL, tR, mode)
        e = np.abs(np.einsum("m...,m...->...", dV, Ut) - (tR.phi - tL.phi))
        worst = max(worst, (e / np.maximum(1.0, np.abs(tR.phi - tL.phi))).max())
        for j in range(3):
            tgt = (tR.psi[j] - tL.psi[j]) \
                - 0.5 * (tL.B[j] + tR.B[j]) * (tR.Phi - tL.Phi)
            e = np.abs(np.einsum("m...,m...->...", dV, Ft[j]) - tgt)
            worst = max(worst, (e / np.maximum(1.0, np.abs(tgt))).max())
    return worst


def random_smooth_mesh(rng, N, p, d):
    dxi = tuple(1.0 / n for n in N)
    mesh = MeshBlock(N, dxi, max(p, 3), p, (True,) * d, np.ones(d))
    axes = [np.arange(n) * dx for n, dx in zip(N, dxi)]
    xi = np.stack(np.meshgrid(*axes, indexing="ij"))
    x = xi.copy()
    for k in range(d):
        for j in range(d):
            amp = rng.uniform(0.005, 0.02)
            ph = rng.uniform(0, 2 * np.pi)
            x[k] += amp * np.sin(2 * np.pi * xi[j] + ph)
    mesh.set_coords(x)
    mesh.compute_spatial_metrics()
    return mesh


def check_scl(n_meshes=20, seed=11):
    """Max discrete SCL residual over random smooth 2D/3D meshes, p=1..3."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_meshes):
        for p in (1, 2, 3):
            d = int(rng.integers(2, 4))
            N = tuple(int(rng.integers(8, 14)) for _ in range(d))
            mesh = random_smooth_mesh(rng, N, p, d)
            worst = max(worst, float(np.abs(mesh.scl_residual()).max()))
    return worst


def freestream_problem(d, mode="rmhd", seed=5):
    rng = np.random.default_rng(seed)
    amp = rng.uniform(0.008, 0.02, (d, d))
    ph = rng.uniform(0, 2 * np.pi, (d, d, 2))

    def motion(xi0, t):
        x = xi0.copy()
        for k in range(d):
            for j in range(d):
                x[k] = x[k] + amp[k, j] * np.cos(2.0 * t + ph[k, j, 0]) \
                    * np.sin(2 * np.pi * xi0[j] + ph[k, j, 1])
        return x

    vals = dict(rho=1.3, v=(0.3, -0.2, 0.15), p=0.8,
                B=(0.6, -0.4, 0.25) if mode == "rmhd" else (0.0, 0.0, 0.0))

    def ic(x):
        sh = x[0].shape
        v = np.zeros((3,) + sh)
        B = np.zeros((3,) + sh)
        for k in range(3):
            v[k] = vals["v"][k]
            B[k] = vals["B"][k]
        return PrimState(np.full(sh, vals["rho"]), v, np.full(sh, vals["p"]),
                         B, 5.0 / 3.0)

    per = lambda: BCFace("periodic")
    box = np.array([[0.0, 1.0]] * d)
    return ProblemSetup("freestream", mode, d, 5.0 / 3.0, box, (True,) * d,
                        ic, [(per(), per())] * d, 1.0, motion=motion,
                        default_N=(12,) * d, cfl=0.4)


def check_freestream(d=2, mode="rmhd", scheme="es", order=5, nsteps=10,
                     N=13):
    """Max deviation of a constant state after nsteps RK3 steps on a
    prescribed sinusoidally moving mesh."""
    setup = freestream_problem(d, mode)
    cfg = SimulationConfig("freestream", (N,) * d, scheme=scheme, order=order,
                           mesh_mode="prescribed", cfl=0.4,
                           t_final=1.0).validate(d)
    sim = Simulation(setup, cfg)
    U0 = (sim.JU_int / sim.J_int)[(slice(None),) + (0,) * d].copy()
    dt = 0.004
    for _ in range(nsteps):
        disp = setup.motion(sim.xi0, sim.t + dt) - sim.x_int
        xdot = disp / dt
        _, (xn, Jn, JUn, w_new, _) = sim.attempt_step(dt, xdot, disp)
        sim.x_int, sim.J_int, sim.JU_int, sim.w_int = xn, Jn, JUn, w_new
        sim.t += dt
    U = sim.JU_int / sim.J_int
    dev = np.abs(U - U0.reshape(8, *([1] * d)))
    return float(dev.max())


def run_all(verbose=True):
    """Returns list of (name, value, bound, ok)."""
    results = []
    v = check_ec_contract(2000)
    results.append(("ec-contract", v, 1e-10, v <= 1e-10))
    v = check_scl(6)
    results.append(("scl-residual", v, 1e-12, v <= 1e-12))
    worst = 0.0
    for scheme, order in (("ec", 4), ("es", 5)):
        worst = max(worst, check_freestream(2, "rmhd", scheme, order))
    results.append(("free-stream", worst, 1e-12, worst <= 1e-12))
    if verbose:
        for name, val, bound, ok in results:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {val:.3e} "
                  f"(bound {bound:.1e})")
    return results
