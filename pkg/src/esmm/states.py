"""Relativistic fluid state layer.

Conversions between primitive, conservative, and entropy variables for the
special relativistic hydrodynamics (RHD) and ideal magnetohydrodynamics
(RMHD) systems with the Godunov-Powell source, plus the entropy pair,
potentials, physical fluxes, and characteristic-speed bounds.

Units: c = 1.  Ideal-gas EOS p = (Gamma-1) rho e with Gamma in (1, 2].

Vector layout used everywhere in this package (m = 8 components):

    U = (D, m1, m2, m3, E, B1, B2, B3)

1D/2D states carry the unused transverse velocity/field slots as zeros so
all formulas are dimension-uniform.  All functions are vectorized: scalar
fields have arbitrary (possibly empty) trailing grid shape, 3-vectors carry
a leading axis of length 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NVAR = 8


class UnphysicalStateError(ValueError):
    """Recovered or supplied state violates rho>0, p>0, or |v|<1."""


class NonConvergenceError(RuntimeError):
    """Primitive recovery iteration exceeded its iteration cap."""


@dataclass
class PrimState:
    """Primitive state: rest-mass density, velocity, gas pressure, lab B."""

    rho: np.ndarray
    v: np.ndarray          # shape (3, ...)
    p: np.ndarray
    B: np.ndarray          # shape (3, ...), all zero in RHD mode
    gamma: float = 5.0 / 3.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.B = np.asarray(self.B, dtype=float)

    @property
    def W(self):
        return lorentz(self.v)

    def validate(self):
        v2 = np.einsum("k...,k...->...", self.v, self.v)
        bad = ~((self.rho > 0) & (self.p > 0) & (v2 < 1.0))
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            raise UnphysicalStateError(
                f"invalid primitive state at index {tuple(idx)}: "
                f"rho={np.atleast_1d(self.rho)[tuple(idx)]}, "
                f"p={np.atleast_1d(self.p)[tuple(idx)]}, |v|^2="
                f"{np.atleast_1d(v2)[tuple(idx)]}")
        return self

    def copy(self):
        return PrimState(self.rho.copy(), self.v.copy(), self.p.copy(),
                         self.B.copy(), self.gamma)


@dataclass
class ConsState:
    """Conservative state (D, m, E, B)."""

    D: np.ndarray
    m: np.ndarray          # shape (3, ...)
    E: np.ndarray
    B: np.ndarray          # shape (3, ...)

    def vec(self):
        return np.concatenate([
            np.asarray(self.D)[None], np.asarray(self.m),
            np.asarray(self.E)[None], np.asarray(self.B)])

    @staticmethod
    def from_vec(u):
        return ConsState(u[0], u[1:4], u[4], u[5:8])


@dataclass
class EntropyVars:
    """Entropy variables V = eta'(U); length 8 with zero unused slots."""

    components: np.ndarray  # shape (8, ...)


@dataclass
class PotentialSet:
    """Entropy potential phi, flux potentials psi_k, and Godunov-Powell
    scalar Phi with its gradient Phi'(V)."""

    phi: np.ndarray
    psi: np.ndarray        # shape (3, ...)
    Phi: np.ndarray
    PhiPrime: np.ndarray   # shape (8, ...)


def lorentz(v):
    """Lorentz factor W = 1/sqrt(1-|v|^2)."""
    v2 = np.einsum("k...,k...->...", v, v)
    return 1.0 / np.sqrt(1.0 - v2)


def specific_enthalpy(rho, p, gamma):
    return 1.0 + gamma / (gamma - 1.0) * p / rho


def four_fields(w: PrimState):
    """Four-velocity spatial part u^k = W v_k and comoving field
    (b^0, b^k) = W(v.B, B/W^2 + v (v.B)); returns (W, u, b0, bk, b2)."""
    W = w.W
    u = W * w.v
    vB = np.einsum("k...,k...->...", w.v, w.B)
    b0 = W * vB
    bk = w.B / W + u * vB
    b2 = np.einsum("k...,k...->...", bk, bk) - b0 * b0
    return W, u, b0, bk, b2


def prim_to_cons(w: PrimState) -> ConsState:
    """D = rho W, m = (rho h W^2 + |B|^2) v - (v.B) B, E = D h W - p_t + |B|^2."""
    W = w.W
    h = specific_enthalpy(w.rho, w.p, w.gamma)
    B2 = np.einsum("k...,k...->...", w.B, w.B)
    vB = np.einsum("k...,k...->...", w.v, w.B)
    b2 = B2 / W**2 + vB**2
    pt = w.p + 0.5 * b2
    D = w.rho * W
    m = (w.rho * h * W**2 + B2) * w.v - vB * w.B
    E = D * h * W - pt + B2
    return ConsState(D, m, E, w.B.copy())


def physical_flux(w: PrimState, k: int):
    """Flux vector F_k, k in {0,1,2} (0-based direction index)."""
    W = w.W
    u = prim_to_cons(w)
    vB = np.einsum("j...,j...->...", w.v, w.B)
    B2 = np.einsum("j...,j...->...", w.B, w.B)
    pt = w.p + 0.5 * (B2 / W**2 + vB**2)
    vk = w.v[k]
    Fm = u.m * vk - w.B[k] * (w.B / W**2 + vB * w.v)
    Fm[k] = Fm[k] + pt
    FB = vk * w.B - w.B[k] * w.v
    return np.concatenate([(u.D * vk)[None], Fm, u.m[k][None], FB])


def thermo_entropy(w: PrimState):
    """s = ln(p / rho^Gamma)."""
    return np.log(w.p) - w.gamma * np.log(w.rho)


def entropy_vars(w: PrimState):
    """Explicit entropy variables of the symmetrizable system, shape (8, ...)."""
    W = w.W
    s = thermo_entropy(w)
    beta = w.rho / w.p
    vB = np.einsum("k...,k...->...", w.v, w.B)
    V1 = (w.gamma - s) / (w.gamma - 1.0) + beta
    Vm = beta * W * w.v
    VE = -beta * W
    VB = w.rho * (w.B + W**2 * w.v * vB) / (w.p * W)
    return np.concatenate([V1[None], Vm, VE[None], VB])


def entropy_quantities(w: PrimState):
    """Entropy pair (eta, q_k), entropy variables V, and the potentials.

    eta = -rho W s/(Gamma-1), q_k = eta v_k, phi = V.U - eta,
    psi_k = V.F_k + Phi B_k - q_k, Phi = rho W (v.B)/p (homogeneous of
    degree one: Phi = Phi'(V).V).
    """
    W = w.W
    s = thermo_entropy(w)
    eta = -w.rho * W * s / (w.gamma - 1.0)
    q = eta * w.v
    V = entropy_vars(w)
    vB = np.einsum("k...,k...->...", w.v, w.B)
    b2 = np.einsum("k...,k...->...", w.B, w.B) / W**2 + vB**2
    phi = w.rho * W + w.rho * W * b2 / (2.0 * w.p)
    psi = w.v * phi
    Phi = w.rho * W * vB / w.p
    zeros = np.zeros_like(phi)
    PhiPrime = np.concatenate([
        zeros[None], w.B / W**2 + w.v * vB, vB[None], w.v])
    return eta, q, EntropyVars(V), PotentialSet(phi, psi, Phi, PhiPrime)


def sound_speed(w: PrimState):
    """c_s = sqrt(Gamma p / (rho h))."""
    h = specific_enthalpy(w.rho, w.p, w.gamma)
    return np.sqrt(w.gamma * w.p / (w.rho * h))


def rhd_eigenvalues(w: PrimState, n):
    """Acoustic eigenvalues (lam-, v_n, lam+) of the RHD flux Jacobian along
    the unit direction n (shape (3, ...))."""
    v2 = np.einsum("k...,k...->...", w.v, w.v)
    vn = np.einsum("k...,k...->...", w.v, n)
    cs2 = w.gamma * w.p / (w.rho * specific_enthalpy(w.rho, w.p, w.gamma))
    disc = (1.0 - v2) * (1.0 - v2 * cs2 - vn**2 * (1.0 - cs2))
    disc = np.maximum(disc, 0.0)
    den = 1.0 - v2 * cs2
    root = np.sqrt(cs2 * disc)
    lam_m = (vn * (1.0 - cs2) - root) / den
    lam_p = (vn * (1.0 - cs2) + root) / den
    return lam_m, vn, lam_p


def max_signal_speed(w: PrimState, n=None, mode="rhd", rmhd_bound="light"):
    """Upper bound on |lambda| of the directional flux Jacobian.

    RHD: exact closed-form acoustic eigenvalues along n (default n = e1).
    RMHD: the light-speed bound 1 by default; rmhd_bound="fast" uses the
    degenerate fast magnetosonic speed c_ms^2 = c_s^2 + c_A^2(1 - c_s^2)
    inside the acoustic formula, an upper bound on the fast eigenvalue.
    """
    if n is None:
        n = np.zeros((3,) + np.shape(w.rho))
        n[0] = 1.0
    if mode == "rhd":
        lam_m, vn, lam_p = rhd_eigenvalues(w, n)
        return np.maximum(np.abs(lam_m), np.abs(lam_p))
    if rmhd_bound == "light":
        return np.ones(np.shape(w.rho))
    # degenerate fast-speed bound
    W = w.W
    vB = np.einsum("k...,k...->...", w.v, w.B)
    b2 = np.einsum("k...,k...->...", w.B, w.B) / W**2 + vB**2
    h = specific_enthalpy(w.rho, w.p, w.gamma)
    cs2 = w.gamma * w.p / (w.rho * h)
    ca2 = b2 / (w.rho * h + b2)
    cms2 = np.minimum(cs2 + ca2 * (1.0 - cs2), 1.0 - 1e-14)
    v2 = np.einsum("k...,k...->...", w.v, w.v)
    vn = np.einsum("k...,k...->...", w.v, n)
    den = 1.0 - v2 * cms2
    disc = np.maximum((1.0 - v2) * (1.0 - v2 * cms2 - vn**2 * (1.0 - cms2)), 0.0)
    root = np.sqrt(cms2 * disc)
    lam = np.maximum(np.abs(vn * (1.0 - cms2) - root),
                     np.abs(vn * (1.0 - cms2) + root)) / den
    return np.minimum(lam, 1.0)


# ----------------------------------------------------------------------
# conservative -> primitive recovery
# ----------------------------------------------------------------------

def _first_bad(mask):
    return tuple(np.argwhere(np.atleast_1d(mask))[0])


def cons_to_prim(u: ConsState, gamma, mode="rmhd", guess: PrimState | None = None,
                 tol=1e-12, maxiter=200) -> PrimState:
    """Recover primitives from (D, m, E, B).

    RHD solves the scalar pressure equation by Newton iteration; RMHD solves
    the 1D nonlinear equation in q = rho h W^2 (Koldoba-type) by safeguarded
    Newton with bisection fallback.  Raises UnphysicalStateError /
    NonConvergenceError with the first offending cell index.
    """
    D = np.asarray(u.D, dtype=float)
    E = np.asarray(u.E, dtype=float)
    m = np.asarray(u.m, dtype=float)
    B = np.asarray(u.B, dtype=float)
    if np.any(D <= 0):
        raise UnphysicalStateError(f"D <= 0 at index {_first_bad(D <= 0)}")
    if np.any(E < D):
        raise UnphysicalStateError(f"E < D at index {_first_bad(E < D)}")
    if mode == "rhd":
        return _recover_rhd(D, m, E, gamma, guess, tol, maxiter)
    return _recover_rmhd(D, m, E, B, gamma, guess, tol, maxiter)


def _recover_rhd(D, m, E, gamma, guess, tol, maxiter):
    S2 = np.einsum("k...,k...->...", m, m)
    scale = np.maximum.reduce([np.abs(E), D, np.ones_like(E)])
    if guess is not None and guess.p.shape == E.shape:
        p = np.array(guess.p, dtype=float)
    else:
        p = np.maximum(1e-8, (gamma - 1.0) * (E - D))
    # |v| < 1 requires E + p > |m|
    pmin = np.maximum(np.sqrt(S2) - E, 0.0) * (1.0 + 1e-12) + 1e-300
    p = np.maximum(p, pmin + 1e-12 * scale)
    gg = gamma / (gamma - 1.0)
    done = np.zeros(p.shape, dtype=bool)
    for _ in range(maxiter):
        q = E + p
        v2 = S2 / q**2
        W = 1.0 / np.sqrt(np.maximum(1.0 - v2, 1e-300))
        f = D * W + gg * p * W**2 - p - E
        done = np.abs(f) <= tol * scale
        if done.all():
            break
        dWdp = -(W**3) * S2 / q**3
        fp = D * dWdp + gg * (W**2 + 2.0 * p * W * dWdp) - 1.0
        dp = -f / fp
        pn = p + np.where(done, 0.0, dp)
        bad = pn <= pmin
        pn = np.where(bad, 0.5 * (p + pmin), pn)
        p = pn
    if not done.all():
        raise NonConvergenceError(
            f"RHD pressure recovery stalled at index {_first_bad(~done)}")
    # Newton polish: quadratic convergence takes the residual to roundoff
    for _ in range(2):
        q = E + p
        v2 = S2 / q**2
        W = 1.0 / np.sqrt(np.maximum(1.0 - v2, 1e-300))
        f = D * W + gg * p * W**2 - p - E
        dWdp = -(W**3) * S2 / q**3
        fp = D * dWdp + gg * (W**2 + 2.0 * p * W * dWdp) - 1.0
        p = np.maximum(p - f / fp, pmin + 1e-300)
    q = E + p
    v = m / q
    W = lorentz(v)
    rho = D / W
    w = PrimState(rho, v, p, np.zeros_like(m), gamma)
    _check_recovered(w)
    return w


def _recover_rmhd(D, m, E, B, gamma, guess, tol, maxiter):
    m2 = np.einsum("k...,k...->...", m, m)
    B2 = np.einsum("k...,k...->...", B, B)
    S = np.einsum("k...,k...->...", m, B)
    scale = np.maximum.reduce([np.abs(E), D, np.ones_like(E)])
    gg = (gamma - 1.0) / gamma

    def eval_f(q):
        # |v|^2(q) with the Lorentz factor clamped in the infeasible region
        # (the residual keeps the correct sign there; the bracket handles it)
        v2 = (m2 + 2.0 * S**2 / q + S**2 * B2 / q**2) / (q + B2) ** 2
        v2c = np.minimum(v2, 1.0 - 1e-16)
        W = 1.0 / np.sqrt(1.0 - v2c)
        p = gg * (q / W**2 - D / W)
        f = q - p - 0.5 * (B2 * (1.0 - v2c) + S**2 / q**2) + B2 - E
        return f, v2, W, p

    if guess is not None and guess.p.shape == E.shape:
        Wg = guess.W
        q = guess.rho * specific_enthalpy(guess.rho, guess.p, gamma) * Wg**2
    else:
        p0 = np.maximum(1e-8, (gamma - 1.0) * (E - D))
        q = np.maximum(E + p0 - 0.75 * B2, D * (1.0 + 1e-10))
    q = np.maximum(q, 1e-300)

    # sign bracket [lo, hi] with f(lo) < 0 <= f(hi), expanding outward
    f0, _, _, _ = eval_f(q)
    lo = np.where(f0 < 0, q, np.nan)
    hi = np.where(f0 >= 0, q, np.nan)
    qup = q.copy()
    qdn = q.copy()
    for _ in range(600):
        need_hi = np.isnan(hi)
        need_lo = np.isnan(lo)
        if not (need_hi.any() or need_lo.any()):
            break
        qup = np.where(need_hi, 2.0 * qup, qup)
        qdn = np.where(need_lo, 0.5 * qdn, qdn)
        fu, _, _, _ = eval_f(qup)
        fd, _, _, _ = eval_f(qdn)
        hi = np.where(need_hi & (fu >= 0), qup, hi)
        lo = np.where(need_hi & (fu < 0), np.fmax(lo, qup), lo)
        lo = np.where(need_lo & (fd < 0), qdn, lo)
        hi = np.where(need_lo & (fd >= 0), np.fmin(hi, qdn), hi)
    bad = np.isnan(lo) | np.isnan(hi)
    if bad.any():
        raise NonConvergenceError(
            f"RMHD recovery bracketing failed at index {_first_bad(bad)}")

    q = 0.5 * (lo + hi)
    done = np.zeros(q.shape, dtype=bool)
    for _ in range(maxiter):
        f, v2, W, p = eval_f(q)
        done = np.abs(f) <= tol * scale
        if done.all():
            break
        lo = np.where(f < 0, q, lo)
        hi = np.where(f >= 0, q, hi)
        Nn = m2 + 2.0 * S**2 / q + S**2 * B2 / q**2
        Np = -2.0 * S**2 / q**2 - 2.0 * S**2 * B2 / q**3
        Dn = (q + B2) ** 2
        Dnp = 2.0 * (q + B2)
        dv2 = (Np * Dn - Nn * Dnp) / Dn**2
        dW = 0.5 * W**3 * dv2
        dp = gg * (1.0 / W**2 - 2.0 * q * dW / W**3 + D * dW / W**2)
        fp = 1.0 - dp + 0.5 * B2 * dv2 + S**2 / q**3
        with np.errstate(divide="ignore", invalid="ignore"):
            qn = q - f / fp
        # bisect where Newton left the bracket or the clamp invalidated f'
        outside = ~((qn > lo) & (qn < hi)) | ~np.isfinite(qn) \
            | (v2 >= 1.0 - 1e-16)
        qn = np.where(outside, 0.5 * (lo + hi), qn)
        q = np.where(done, q, qn)
    if not done.all():
        raise NonConvergenceError(
            f"RMHD recovery stalled at index {_first_bad(~done)}")
    # Newton polish to roundoff (quadratic convergence near the root)
    for _ in range(2):
        f, v2, W, p = eval_f(q)
        Nn = m2 + 2.0 * S**2 / q + S**2 * B2 / q**2
        Np = -2.0 * S**2 / q**2 - 2.0 * S**2 * B2 / q**3
        Dn = (q + B2) ** 2
        Dnp = 2.0 * (q + B2)
        dv2 = (Np * Dn - Nn * Dnp) / Dn**2
        dW = 0.5 * W**3 * dv2
        dp = gg * (1.0 / W**2 - 2.0 * q * dW / W**3 + D * dW / W**2)
        fp = 1.0 - dp + 0.5 * B2 * dv2 + S**2 / q**3
        qn = q - f / fp
        q = np.where((qn > 0) & np.isfinite(qn) & (v2 < 1.0 - 1e-16), qn, q)
    v = (m + (S / q) * B) / (q + B2)
    W = lorentz(v)
    rho = D / W
    p = gg * (q / W**2 - D / W)
    w = PrimState(rho, v, p, np.array(B), gamma)
    _check_recovered(w)
    return w


def _check_recovered(w: PrimState):
    v2 = np.einsum("k...,k...->...", w.v, w.v)
    bad = ~((w.rho > 0) & (w.p > 0) & (v2 < 1.0))
    if np.any(bad):
        raise UnphysicalStateError(
            f"recovered unphysical state at index {_first_bad(bad)}")


# ----------------------------------------------------------------------
# per-node tables consumed by the EC flux kernels
# ----------------------------------------------------------------------

@dataclass
class StateTables:
    """Pointwise algebraic quantities reused by the two-point flux kernels."""

    rho: np.ndarray
    lnrho: np.ndarray
    beta: np.ndarray
    lnbeta: np.ndarray
    W: np.ndarray
    v: np.ndarray       # (3, ...)
    u: np.ndarray       # (3, ...)
    bk: np.ndarray      # (3, ...)
    b0: np.ndarray
    betaW: np.ndarray
    phi: np.ndarray
    B: np.ndarray       # (3, ...)
    V: np.ndarray       # (8, ...)
    psi: np.ndarray     # (3, ...)
    Phi: np.ndarray
    eta: np.ndarray
    p: np.ndarray
    gamma: float

    def sliced(self, idx):
        """Views with the same slice applied to every table."""
        full = (slice(None),)
        return StateTables(
            self.rho[idx], self.lnrho[idx], self.beta[idx], self.lnbeta[idx],
            self.W[idx], self.v[full + idx], self.u[full + idx],
            self.bk[full + idx], self.b0[idx], self.betaW[idx],
            self.phi[idx], self.B[full + idx], self.V[full + idx],
            self.psi[full + idx], self.Phi[idx], self.eta[idx],
            self.p[idx], self.gamma)


def build_tables(w: PrimState) -> StateTables:
    W, u, b0, bk, b2 = four_fields(w)
    beta = w.rho / w.p
    lnrho = np.log(w.rho)
    lnbeta = lnrho - np.log(w.p)
    s = np.log(w.p) - w.gamma * lnrho
    eta = -w.rho * W * s / (w.gamma - 1.0)
    phi = w.rho * W * (1.0 + b2 * beta / (2.0 * w.rho))
    psi = w.v * phi
    Phi = beta * b0
    V1 = (w.gamma - s) / (w.gamma - 1.0) + beta
    V = np.concatenate([V1[None], beta * u, (-beta * W)[None], beta * bk])
    return StateTables(w.rho, lnrho, beta, lnbeta, W, w.v, u, bk, b0,
                       beta * W, phi, w.B, V, psi, Phi, eta, w.p, w.gamma)
