"""Semi-discrete RHS assembly, SSP-RK3 time stepping coupled with mesh
motion, CFL control, diagnostics, and the benchmark/convergence harness.

One time step (adaptive mode): build monitor -> smooth -> Jacobi -> movement
limiter -> solve the motion-inclusive CFL equation for dt -> SSP-RK3 advance
of (JU, J, x) with the mesh velocity held fixed over the step.  Spatial
metrics are recomputed from the stage coordinates at every stage; J is
evolved through the discrete VCL (never recomputed geometrically), which is
what makes free-stream preservation exact.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import adaptation, dissipation, ecflux, states
from .mesh import MeshBlock
from .problems import ProblemSetup
from .states import ConsState, NonConvergenceError, PrimState, \
    UnphysicalStateError, build_tables


class StepFailure(RuntimeError):
    """A time step failed after the retry budget was exhausted."""


@dataclass
class RunArtifacts:
    setup: ProblemSetup
    config: dict
    series: dict
    snapshots: list
    convergence: list = None
    nsteps: int = 0
    walltime: float = 0.0

    def series_array(self, key):
        return np.asarray(self.series[key])


def _meshgrid(box, N, dxi):
    axes = [box[k, 0] + dxi[k] * np.arange(N[k]) for k in range(len(N))]
    return np.stack(np.meshgrid(*axes, indexing="ij"))


class Simulation:
    """A single run: problem setup + scheme configuration + moving mesh."""

    def __init__(self, setup: ProblemSetup, cfg):
        self.setup = setup
        self.cfg = cfg
        self.mode = setup.physics
        self.gamma = cfg.gamma if cfg.gamma is not None else setup.gamma
        d = setup.d
        self.d = d
        self.p = cfg.p
        self.scheme = cfg.scheme
        self.ghost = max(self.p, 3)
        lengths = setup.lengths()
        # periodic directions drop the duplicated endpoint node
        self.N = tuple(cfg.N[k] - 1 if setup.periodic[k] else cfg.N[k]
                       for k in range(d))
        self.dxi = lengths / (np.asarray(cfg.N) - 1.0)
        self.mesh = MeshBlock(self.N, self.dxi, self.ghost, self.p,
                              setup.periodic, lengths)
        self.xi0 = _meshgrid(setup.box, self.N, self.dxi)
        self.t = 0.0
        self.w_guess = None
        self.fallback_count = 0
        self._init_mesh_and_state()
        self.series = {k: [] for k in (
            "t", "dt", "entropy", "min_rho", "min_p", "max_v", "max_divB",
            "min_J", "dtau", "cons_D", "cons_m1", "cons_m2", "cons_m3",
            "cons_E", "cons_B1", "cons_B2", "cons_B3")}
        self.snapshots = []

    # ------------------------------------------------------------------
    def _sample_ic(self, x_int):
        w = self.setup.ic(x_int)
        w.gamma = self.gamma
        return w.validate()

    def _init_mesh_and_state(self):
        cfg, setup = self.cfg, self.setup
        if cfg.mesh_mode == "prescribed" and setup.motion is not None:
            x_int = setup.motion(self.xi0, 0.0)
        else:
            x_int = self.xi0.copy()
        self.x_int = x_int
        w_int = self._sample_ic(x_int)
        if cfg.mesh_mode == "adaptive":
            # iterate the initial mesh to (near) equilibrium so the run
            # starts in the small-displacement tracking regime; otherwise the
            # mesh spends the whole run chasing equidistribution at the CFL
            # motion cap
            per = setup.periodic
            lengths = setup.lengths()
            tol = 0.02 * float(np.min(lengths) / max(self.N))
            for _ in range(cfg.monitor.get("initial_cycles", 500)):
                omega = self._monitor(w_int)
                cand = adaptation.jacobi_redistribute(
                    self.x_int, omega, cfg.monitor.get("jacobi_iters", 10),
                    periodic=per, period=lengths)
                self.x_int, disp0, _ = adaptation.limit_movement(
                    self.x_int, cand, periodic=per, period=lengths)
                w_int = self._sample_ic(self.x_int)
                if np.abs(disp0).max() < tol:
                    break
        self.w_int = w_int
        self.mesh.set_coords(self.x_int)
        self.mesh.set_xdot(np.zeros_like(self.x_int))
        self.mesh.compute_spatial_metrics()
        self.J_int = self.mesh.geometric_jacobian()[self.mesh.int_f]
        U = states.prim_to_cons(w_int).vec()
        self.JU_int = self.J_int * U
        self.omega = None

    def _monitor(self, w_int):
        mon = self.cfg.monitor
        name = mon.get("sigma", "lnrho")
        sigma = np.log(w_int.rho) if name == "lnrho" else w_int.rho
        omega = adaptation.build_monitor(sigma, self.dxi,
                                         mon.get("alpha", 800.0),
                                         mon.get("lap_weight", 0.0),
                                         periodic=self.setup.periodic)
        return adaptation.lowpass_filter(omega, mon.get("passes", 4),
                                         periodic=self.setup.periodic)

    # ------------------------------------------------------------------
    def fill_ghosts(self, w_int: PrimState) -> PrimState:
        """Primitive state on the full ghosted block per the face BCs."""
        g, d, N = self.ghost, self.d, self.N
        shape = self.mesh.shape_f

        def alloc(a, lead):
            out = np.zeros(lead + shape)
            out[(slice(None),) * len(lead) + self.mesh.int_f] = a
            return out

        rho = alloc(w_int.rho, ())
        p = alloc(w_int.p, ())
        v = alloc(w_int.v, (3,))
        B = alloc(w_int.B, (3,))
        for k in range(d):
            lo, hi = self.setup.bc[k]
            for arr, lead in ((rho, 0), (p, 0), (v, 1), (B, 1)):
                ax = lead + k
                n = N[k]

                def sl(a, b):
                    idx = [slice(None)] * arr.ndim
                    idx[ax] = slice(a, b if b != 0 else None)
                    return tuple(idx)

                if lo.kind == "periodic":
                    arr[sl(0, g)] = arr[sl(n, n + g)]
                    arr[sl(g + n, g + n + g)] = arr[sl(g, 2 * g)]
                else:
                    for side, face in ((0, lo), (1, hi)):
                        edge = sl(g, g + 1) if side == 0 else sl(g + n - 1, g + n)
                        tgt = sl(0, g) if side == 0 else sl(g + n, 2 * g + n)
                        if face.kind == "outflow":
                            arr[tgt] = arr[edge]
                        elif face.kind == "inflow":
                            st = face.state
                            val = {0: st.rho, 1: st.p}.get(lead)
                            if arr is rho:
                                arr[tgt] = float(st.rho)
                            elif arr is p:
                                arr[tgt] = float(st.p)
                            elif arr is v:
                                arr[tgt] = st.v.reshape(3, *(1,) * d)
                            else:
                                arr[tgt] = st.B.reshape(3, *(1,) * d)
                        else:
                            raise ValueError(f"unknown BC kind {face.kind}")
        return PrimState(rho, v, p, B, self.gamma)

    # ------------------------------------------------------------------
    def stage_rhs(self, x_int, J_int, JU_int, need_entropy=False):
        """RHS of d(JU)/dt and dJ/dt on the interior region."""
        mesh = self.mesh
        mesh.set_coords(x_int)
        mesh.compute_spatial_metrics()
        mesh.compute_temporal_metrics()
        U = JU_int / J_int
        w_int = states.cons_to_prim(ConsState.from_vec(U), self.gamma,
                                    self.mode, guess=self.w_guess)
        self.w_guess = w_int
        w_full = self.fill_ghosts(w_int)
        tables = build_tables(w_full)
        d, g, p = self.d, self.ghost, self.p
        rhs = np.zeros((8,) + self.N)
        divB = np.zeros(self.N)
        qdiff = np.zeros(self.N) if need_entropy else None
        if self.mode == "rmhd":
            intf = self.mesh.int_f
            W = tables.W[intf]
            vint = tables.v[(slice(None),) + intf]
            Bint = tables.B[(slice(None),) + intf]
            vB = np.einsum("k...,k...->...", vint, Bint)
            zeros = np.zeros_like(W)
            phip = np.concatenate([zeros[None], Bint / W**2 + vint * vB,
                                   vB[None], vint])

        for k in range(d):
            ax = k
            F = ecflux.highorder_ec_flux(tables, mesh.met_t[k], mesh.met_s[k],
                                         ax, g, self.N[k], p, self.mode)
            prod = None
            if self.scheme == "es":
                dfl, prod, nfb = dissipation.interface_dissipation(
                    tables, mesh.met_t[k], mesh.met_s[k], ax, g, self.N[k], p,
                    self.mode, self.cfg.r_kind, self.cfg.rmhd_bound,
                    self.cfg.weno_nonlinear)
                F = F - dfl
                self.fallback_count += nfb
            rhs -= self._iface_diff(F, k, lead=1)
            if self.mode == "rmhd":
                Bf = ecflux.highorder_source_flux(tables.B, mesh.met_s[k], ax,
                                                  g, self.N[k], p)
                dB = self._iface_diff(Bf, k, lead=0)
                divB += dB
                rhs -= phip * dB
            if need_entropy:
                q = ecflux.highorder_entropy_flux(
                    tables, mesh.met_t[k], mesh.met_s[k], ax, g, self.N[k], p,
                    self.mode)
                if prod is not None:
                    q = q - prod
                qdiff += self._iface_diff(q, k, lead=0)
        rhs_J = mesh.vcl_rhs()
        diag = {"w_int": w_int, "divB": divB, "qdiff": qdiff}
        return rhs, rhs_J, diag

    def _iface_diff(self, F, k, lead):
        """(F_{i+1/2} - F_{i-1/2})/dxi_k cropped to the interior region."""
        ax = lead + k
        idx_hi = [slice(None)] * F.ndim
        idx_lo = [slice(None)] * F.ndim
        idx_hi[ax] = slice(1, None)
        idx_lo[ax] = slice(0, -1)
        diff = (F[tuple(idx_hi)] - F[tuple(idx_lo)]) / self.dxi[k]
        idx = [slice(None)] * F.ndim
        for kk in range(self.d):
            if kk != k:
                idx[lead + kk] = slice(self.ghost, self.ghost + self.N[kk])
        return diff[tuple(idx)]

    # ------------------------------------------------------------------
    def ssp_rk3_step(self, dt, xdot_int, need_entropy=False):
        """Three-stage SSP-RK3 applied to (JU, J, x) with fixed xdot."""
        self.mesh.set_xdot(xdot_int)
        x0, J0, JU0 = self.x_int, self.J_int, self.JU_int
        kU, kJ, diag = self.stage_rhs(x0, J0, JU0, need_entropy)
        x1 = x0 + dt * xdot_int
        J1 = J0 + dt * kJ
        JU1 = JU0 + dt * kU
        kU, kJ, _ = self.stage_rhs(x1, J1, JU1)
        x2 = 0.75 * x0 + 0.25 * (x1 + dt * xdot_int)
        J2 = 0.75 * J0 + 0.25 * (J1 + dt * kJ)
        JU2 = 0.75 * JU0 + 0.25 * (JU1 + dt * kU)
        kU, kJ, _ = self.stage_rhs(x2, J2, JU2)
        xn = (x0 + 2.0 * (x2 + dt * xdot_int)) / 3.0
        Jn = (J0 + 2.0 * (J2 + dt * kJ)) / 3.0
        JUn = (JU0 + 2.0 * (JU2 + dt * kU)) / 3.0
        if np.any(Jn <= 0):
            raise UnphysicalStateError("Jacobian lost positivity")
        w_new = states.cons_to_prim(ConsState.from_vec(JUn / Jn), self.gamma,
                                    self.mode, guess=self.w_guess)
        return xn, Jn, JUn, w_new, diag

    def attempt_step(self, dt, xdot_int, disp_int, need_entropy=False,
                     retries=5):
        """Step with rejection: on recovery failure halve dt and the mesh
        displacement (keeping xdot) and retry."""
        for attempt in range(retries + 1):
            try:
                out = self.ssp_rk3_step(dt, xdot_int, need_entropy)
                return dt, out
            except (UnphysicalStateError, NonConvergenceError):
                if attempt == retries:
                    raise StepFailure(
                        f"step at t={self.t:.6g} failed after {retries} "
                        f"halvings (dt={dt:.3e})")
                dt *= 0.5

    # ------------------------------------------------------------------
    def signal_tables(self, w_int):
        """Per-node CFL ingredients: C_k = L_k * signal bound along the
        metric direction, for each k (interior)."""
        mesh = self.mesh
        intf = mesh.int_f
        C = np.zeros((self.d,) + self.N)
        for k in range(self.d):
            met = np.zeros((3,) + self.N)
            for j in range(self.d):
                met[j] = mesh.met_s[k, j][intf]
            L = np.sqrt(np.einsum("j...,j...->...", met, met))
            n = met / np.maximum(L, 1e-300)
            lam = states.max_signal_speed(w_int, n, self.mode,
                                          self.cfg.rmhd_bound)
            C[k] = L * lam
        return C

    def cfl_dt(self, w_int, disp_int=None, xdot_int=None):
        """Time step from the CFL condition.

        disp_int: fixed mesh displacement over the step (adaptive mode) =>
        solve sum_k max_i (A + dt C)/dxi = CFL by bisection; xdot_int:
        known mesh velocity (prescribed motion) => direct formula.
        """
        cfg = self.cfg
        cap = np.inf
        if cfg.dt_rule == "dx2":
            # convergence-mode override; the acoustic CFL limit still caps
            # it on coarse grids where dxi^2 > dxi
            cap = cfg.cfl * self.dxi[0] ** 2
        elif cfg.dt_rule == "dx53":
            cap = cfg.cfl * self.dxi[0] ** (5.0 / 3.0)
        mesh = self.mesh
        intf = mesh.int_f
        C = self.signal_tables(w_int)
        if xdot_int is not None:
            for k in range(self.d):
                met_t = np.einsum(
                    "j...,j...->...", xdot_int,
                    np.stack([mesh.met_s[k, j][intf] for j in range(self.d)]))
                C[k] = C[k] + np.abs(met_t)
        denom = sum(C[k].max() / self.dxi[k] for k in range(self.d))
        dt_hi = min(cfg.cfl / denom, cap)
        if disp_int is None or not np.any(disp_int):
            return dt_hi
        A = np.zeros((self.d,) + self.N)
        for k in range(self.d):
            A[k] = np.abs(np.einsum(
                "j...,j...->...", disp_int,
                np.stack([mesh.met_s[k, j][intf] for j in range(self.d)])))
        amax = [A[k].max() for k in range(self.d)]
        cmax = [C[k].max() for k in range(self.d)]

        def h(dt):
            return sum(np.maximum(A[k] + dt * C[k], 0.0).max() / self.dxi[k]
                       for k in range(self.d)) - cfg.cfl

        if h(0.0) >= 0.0:
            # pure mesh motion exceeds the budget; the caller shrinks disp
            return -1.0
        if h(dt_hi) < 0.0:
            return dt_hi
        lo, hi = 0.0, dt_hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if h(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return lo

    # ------------------------------------------------------------------
    def record(self, dt, diag, dtau):
        mesh = self.mesh
        vol = float(np.prod(self.dxi))
        s = self.series
        s["t"].append(self.t)
        s["dt"].append(dt)
        tabs = build_tables(self.w_int)
        s["entropy"].append(float((self.J_int * tabs.eta).sum()
                                  / np.prod(self.N)))
        cons = self.JU_int.reshape(8, -1).sum(axis=1) * vol
        for i, key in enumerate(("cons_D", "cons_m1", "cons_m2", "cons_m3",
                                 "cons_E", "cons_B1", "cons_B2", "cons_B3")):
            s[key].append(float(cons[i]))
        s["min_rho"].append(float(self.w_int.rho.min()))
        s["min_p"].append(float(self.w_int.p.min()))
        v2 = np.einsum("k...,k...->...", self.w_int.v, self.w_int.v)
        s["max_v"].append(float(np.sqrt(v2.max())))
        s["max_divB"].append(float(np.abs(diag["divB"]).max())
                             if diag is not None else 0.0)
        s["min_J"].append(float(self.J_int.min()))
        s["dtau"].append(dtau)

    def watchdog(self):
        v2 = np.einsum("k...,k...->...", self.w_int.v, self.w_int.v)
        if (self.w_int.rho.min() <= 0 or self.w_int.p.min() <= 0
                or v2.max() >= 1.0 or self.J_int.min() <= 0):
            raise StepFailure(f"positivity watchdog tripped at t={self.t}")

    def snapshot(self):
        snap = {
            "t": self.t,
            "x": self.x_int.copy(),
            "rho": self.w_int.rho.copy(),
            "v": self.w_int.v.copy(),
            "p": self.w_int.p.copy(),
            "B": self.w_int.B.copy(),
            "J": self.J_int.copy(),
            "omega": None if self.omega is None else self.omega.copy(),
        }
        self.snapshots.append(snap)
        return snap

    # ------------------------------------------------------------------
    def run(self, t_final=None, output_times=(), need_entropy=False,
            max_steps=10 ** 7, on_output=None):
        cfg = self.cfg
        t_final = t_final if t_final is not None else cfg.t_final
        out_times = sorted(tt for tt in output_times if tt > 1e-14)
        self.record(0.0, None, 1.0)
        start = time.perf_counter()
        nsteps = 0
        stride = cfg.monitor.get("stride", 1)
        while self.t < t_final * (1.0 - 1e-13) and nsteps < max_steps:
            # mesh displacement for this step
            disp = np.zeros_like(self.x_int)
            dtau = 1.0
            if cfg.mesh_mode == "adaptive" and nsteps % stride == 0:
                per = self.setup.periodic
                lengths = self.setup.lengths()
                self.omega = self._monitor(self.w_int)
                cand = adaptation.jacobi_redistribute(
                    self.x_int, self.omega, cfg.monitor.get("jacobi_iters", 10),
                    periodic=per, period=lengths)
                relax = cfg.monitor.get("relax", 1.0)
                if relax != 1.0:
                    cand = self.x_int + relax * (cand - self.x_int)
                if cfg.monitor.get("smooth_disp", 0):
                    dx = cand - self.x_int
                    for c in range(self.d):
                        dx[c] = adaptation.lowpass_filter(
                            dx[c], cfg.monitor["smooth_disp"], periodic=per)
                    cand = self.x_int + dx
                _, disp, dtau = adaptation.limit_movement(
                    self.x_int, cand, periodic=per, period=lengths)
                # cap the physical mesh speed at light speed so convergence-
                # mode dt overrides cannot drive superluminal node motion
                dt_est = self.cfl_dt(self.w_int)
                vmax = np.sqrt(np.einsum("k...,k...->...",
                                         disp, disp)).max() / dt_est
                if vmax > 1.0:
                    disp = disp / vmax
            if cfg.mesh_mode == "prescribed":
                eps = 1e-6
                xa = self.setup.motion(self.xi0, self.t)
                xdot_est = (self.setup.motion(self.xi0, self.t + eps) - xa) / eps
                dt = self.cfl_dt(self.w_int, xdot_int=xdot_est)
            else:
                dt = self.cfl_dt(self.w_int, disp_int=disp)
                while dt < 0.0:
                    disp *= 0.5
                    dt = self.cfl_dt(self.w_int, disp_int=disp)
            if dt <= 0:
                raise StepFailure(f"nonpositive dt at t={self.t}")
            # clamp to output times and final time
            t_stop = t_final
            for tt in out_times:
                if tt > self.t + 1e-13:
                    t_stop = min(t_stop, tt)
                    break
            dt = min(dt, t_stop - self.t)
            if cfg.mesh_mode == "prescribed":
                disp = self.setup.motion(self.xi0, self.t + dt) - self.x_int
            xdot = disp / dt
            dt, (xn, Jn, JUn, w_new, diag) = self.attempt_step(
                dt, xdot, disp, need_entropy)
            self.x_int, self.J_int, self.JU_int = xn, Jn, JUn
            self.w_int = w_new
            self.t += dt
            nsteps += 1
            self.record(dt, diag, dtau)
            self.watchdog()
            if any(abs(self.t - tt) < 1e-11 for tt in out_times):
                snap = self.snapshot()
                if on_output:
                    on_output(self, snap)
        self.snapshot()
        wall = time.perf_counter() - start
        art = RunArtifacts(self.setup, dict(vars(cfg)), self.series,
                           self.snapshots, nsteps=nsteps, walltime=wall)
        return art

    # ------------------------------------------------------------------
    def error_norms(self, t=None):
        """L1/Linf errors of rho against the exact solution at node points."""
        t = self.t if t is None else t
        w_ex = self.setup.exact(self.x_int, t)
        err = np.abs(self.w_int.rho - w_ex.rho)
        wgt = self.J_int * np.prod(self.dxi)
        L1 = float((err * wgt).sum() / wgt.sum())
        return L1, float(err.max())


def convergence_study(setup_factory, cfg_factory, N_list):
    """Run a problem over N_list and tabulate L1/Linf(rho) errors and orders.

    Returns a list of dict rows and the least-squares L1 slope."""
    rows = []
    for N in N_list:
        setup = setup_factory(N)
        cfg = cfg_factory(N)
        sim = Simulation(setup, cfg)
        sim.run()
        L1, Linf = sim.error_norms()
        rows.append(dict(N=N, L1=L1, Linf=Linf, order_L1=np.nan,
                         order_Linf=np.nan))
    for i in range(1, len(rows)):
        r = np.log(rows[i - 1]["L1"] / rows[i]["L1"])
        rr = np.log(rows[i - 1]["Linf"] / rows[i]["Linf"])
        h = np.log(rows[i]["N"] / rows[i - 1]["N"])
        rows[i]["order_L1"] = float(r / h)
        rows[i]["order_Linf"] = float(rr / h)
    Ns = np.array([r["N"] for r in rows], dtype=float)
    e = np.array([r["L1"] for r in rows])
    slope = float(-np.polyfit(np.log(Ns), np.log(e), 1)[0])
    return rows, slope
