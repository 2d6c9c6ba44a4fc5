"""Entropy-conservative two-point fluxes and their high-order combinations.

The two-point flux in curvilinear form is

    F~_k(l, r) = 1/2 (met_t_l + met_t_r) Ut + sum_j 1/2 (met_j_l + met_j_r) Ft_j

where Ut and Ft_j are symmetric consistent two-point functions satisfying,
exactly up to roundoff,

    [V]^T Ut   = [phi]
    [V]^T Ft_j = [psi_j] - <B_j> [Phi]

([a] = a_r - a_l, <a> = (a_l + a_r)/2).  Ut and Ft_j are constructed from an
exact decomposition of the jump targets over the basis
([rho], [beta], [u^k], [b^k]) with beta = rho/p, u^k = W v_k and b^k the
comoving field; the resulting sparse linear system is solved in closed form
by substitution.  The denominator <W>^2 - sum<u^k>^2 is >= 1 for any pair of
subluminal states, so the construction never degenerates.  For coincident
arguments it reduces to (U, F_j); for B == 0 it reduces to the RHD flux with
the logarithmic means of rho and beta and arithmetic means of W and u^k.

High-order interface fluxes are the linear combinations

    F^(2p)_{i+1/2} = sum_{n=1..p} alpha_{p,n} sum_{s=0..n-1} F~(i-s, i-s+n)

with coefficients alpha_{p,n} fixed by the odd-moment conditions
sum n alpha = 1, sum n^{2s-1} alpha = 0 (s = 2..p), which make the flux
difference a 2p-th order approximation of the flux derivative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import StateTables

# alpha_{p,n}: unique solutions of the odd-moment system for p = 1, 2, 3
ALPHA = {
    1: (1.0,),
    2: (4.0 / 3.0, -1.0 / 6.0),
    3: (3.0 / 2.0, -3.0 / 10.0, 1.0 / 30.0),
}

LOGMEAN_SWITCH = 1e-4


@dataclass
class CombinationCoeffs:
    p: int
    alpha: np.ndarray


def highorder_coeffs(p: int) -> CombinationCoeffs:
    """Coefficients of the 2p-th order flux combination."""
    if p not in ALPHA:
        raise ValueError(f"unsupported half-order p={p}; must be 1, 2, or 3")
    return CombinationCoeffs(p, np.array(ALPHA[p]))


def log_mean(a, b, lna=None, lnb=None):
    """Logarithmic mean (b-a)/(ln b - ln a) with a series branch for small
    jumps (|ln(b/a)| < 1e-4) to avoid 0/0; bitwise symmetric in (a, b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("log_mean requires positive arguments")
    if lna is None:
        lna = np.log(a)
    if lnb is None:
        lnb = np.log(b)
    du = lnb - lna
    small = np.abs(du) < LOGMEAN_SWITCH
    z = (b - a) / (b + a)
    z2 = z * z
    series = 0.5 * (a + b) / (1.0 + z2 * (1.0 / 3.0 + z2 * (1.0 / 5.0 + z2 / 7.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (b - a) / du
    return np.where(small, series, direct)


def _pair_means(tL: StateTables, tR: StateTables):
    """Arithmetic and logarithmic means consumed by the flux construction."""
    am = lambda x, y: 0.5 * (x + y)
    m = {
        "rho": am(tL.rho, tR.rho),
        "beta": am(tL.beta, tR.beta),
        "W": am(tL.W, tR.W),
        "u": am(tL.u, tR.u),
        "v": am(tL.v, tR.v),
        "bk": am(tL.bk, tR.bk),
        "b0": am(tL.b0, tR.b0),
        "bk2": am(tL.bk**2, tR.bk**2),
        "b02": am(tL.b0**2, tR.b0**2),
        "betaW": am(tL.betaW, tR.betaW),
        "phi": am(tL.phi, tR.phi),
        "B": am(tL.B, tR.B),
        "rho_ln": log_mean(tL.rho, tR.rho, tL.lnrho, tR.lnrho),
        "beta_ln": log_mean(tL.beta, tR.beta, tL.lnbeta, tR.lnbeta),
    }
    return m


def _solve_pair(m, gamma, T_rho, T_beta, T_u, T_b):
    """Closed-form substitution solve of the sparse jump system A^T X = T.

    Column equations of A (coefficients of [V] over the jump basis):
      rho : X_0 / rho_ln                                   = T_rho
      b^m : <beta> X_{5+m}                                 = T_{b^m}
      u^m : <beta> X_{1+m} - <beta><u^m> X_4 / <W>         = T_{u^m}
      beta: a0 X_0 + sum<u>X_{1..3} - <W>X_4 + sum<b>X_{5..7} = T_beta
    """
    a0 = 1.0 + 1.0 / ((gamma - 1.0) * m["beta_ln"])
    X = np.empty((8,) + np.shape(T_rho))
    X[0] = m["rho_ln"] * T_rho
    X[5:8] = T_b / m["beta"]
    su = np.einsum("k...,k...->...", m["u"], T_u)
    sb = np.einsum("k...,k...->...", m["bk"], T_b)
    denom = m["W"] ** 2 - np.einsum("k...,k...->...", m["u"], m["u"])
    X[4] = (a0 * X[0] + (su + sb) / m["beta"] - T_beta) * m["W"] / denom
    X[1:4] = m["u"] * X[4] / m["W"] + T_u / m["beta"]
    return X


def ec_pair_fluxes(tL: StateTables, tR: StateTables, mode="rmhd", dirs=(0, 1, 2)):
    """Two-point EC flux parts (Ut, {Ft_j}) for one pair of states.

    Returns Ut of shape (8, ...) and a dict {j: Ft_j} for j in dirs.
    """
    gamma = tL.gamma
    m = _pair_means(tL, tR)
    W, u, beta = m["W"], m["u"], m["beta"]
    rho, bk, b0 = m["rho"], m["bk"], m["b0"]
    knum = range(3) if mode == "rmhd" else ()

    # coefficient vectors of the exact jump decompositions
    # [W] = sum cW_u[m] [u^m];  [b0] = sum cb0_u [u] + cb0_b [b]
    cW_u = u / W
    cb0_u = (bk - b0 * u / W) / W
    cb0_b = u / W

    # [phi]
    sb2 = m["bk2"].sum(axis=0) - m["b02"] if mode == "rmhd" else 0.0
    cphi_rho = W
    cphi_beta = 0.5 * W * sb2
    cphi_u = (rho + 0.5 * beta * sb2) * cW_u
    if mode == "rmhd":
        cphi_u = cphi_u - m["betaW"] * b0 * cb0_u
        cphi_b = m["betaW"] * (bk - b0 * u / W)
    else:
        cphi_b = np.zeros_like(u)

    Ut = _solve_pair(m, gamma, cphi_rho, cphi_beta, cphi_u, cphi_b)

    # [Phi] = cPhi_beta [beta] + cPhi_u.[u] + cPhi_b.[b]
    if mode == "rmhd":
        cPhi_beta = b0
        cPhi_u = beta * cb0_u
        cPhi_b = beta * cb0_b

    Ft = {}
    v, phi = m["v"], m["phi"]
    for j in dirs:
        # [psi_j] = <v_j>[phi] + <phi>[v_j]; [v_j] = ([u^j] - <v_j>[W])/<W>
        T_rho = v[j] * cphi_rho
        T_beta = v[j] * cphi_beta
        T_u = v[j] * cphi_u - (phi * v[j] / W) * cW_u
        T_u = T_u.copy()
        T_u[j] = T_u[j] + phi / W
        T_b = v[j] * cphi_b
        if mode == "rmhd":
            Bj = m["B"][j]
            T_beta = T_beta - Bj * cPhi_beta
            T_u = T_u - Bj * cPhi_u
            T_b = T_b - Bj * cPhi_b
        Ft[j] = _solve_pair(m, gamma, T_rho, T_beta, T_u, T_b)
    return Ut, Ft


def ec_flux_curvilinear(tL, tR, met_t_L, met_t_R, met_s_L, met_s_R, mode="rmhd"):
    """Curvilinear two-point EC flux for one direction.

    met_t_*: temporal metric J dxi_k/dt (scalar field); met_s_*: spatial
    metric row (d, ...) holding J dxi_k/dx_j.
    """
    d = met_s_L.shape[0]
    Ut, Ft = ec_pair_fluxes(tL, tR, mode, dirs=tuple(range(d)))
    F = 0.5 * (met_t_L + met_t_R) * Ut
    for j in range(d):
        F = F + 0.5 * (met_s_L[j] + met_s_R[j]) * Ft[j]
    return F


def num_entropy_flux(tL, tR, met_t_L, met_t_R, met_s_L, met_s_R, mode="rmhd"):
    """Two-point numerical entropy flux q~ of the EC scheme (consistent with
    met_t eta + sum_j met_j q_j at coincident arguments)."""
    d = met_s_L.shape[0]
    F = ec_flux_curvilinear(tL, tR, met_t_L, met_t_R, met_s_L, met_s_R, mode)
    q = 0.5 * np.einsum("m...,m...->...", tL.V + tR.V, F)
    q = q - 0.25 * (met_t_L + met_t_R) * (tL.phi + tR.phi)
    for j in range(d):
        a = 0.25 * (met_s_L[j] + met_s_R[j])
        q = q - a * (tL.psi[j] + tR.psi[j])
        if mode == "rmhd":
            q = q + 0.5 * a * (tL.B[j] + tR.B[j]) * (tL.Phi + tR.Phi)
    return q


# ----------------------------------------------------------------------
# high-order interface assembly
# ----------------------------------------------------------------------

def combine_pairs(p, kernel_gap, out_axis, nin):
    """Assemble the 2p-th order interface flux from per-gap evaluations.

    kernel_gap(n, lo, count) evaluates the two-point flux between node pairs
    (j, j+n) for count consecutive left nodes starting at relative offset lo
    (0 = the node left of the first interface).  Each gap is evaluated once
    over an extended range and the s-shifts of the combination reuse views,
    so p(p+1)/2 pair sums cost only p kernel evaluations.
    """
    alpha = ALPHA[p]
    acc = None
    for n in range(1, p + 1):
        ext = kernel_gap(n, -(n - 1), nin + n)
        for s in range(n):
            idx = [slice(None)] * ext.ndim
            idx[out_axis] = slice(n - 1 - s, n - 1 - s + nin + 1)
            term = alpha[n - 1] * ext[tuple(idx)]
            acc = term if acc is None else acc + term
    return acc


def _pair_slicer(axis, ghost):
    """Slicing helper: sl(arr, start, count, lead) selects count nodes from
    relative offset start (0 = node left of the first interface)."""
    base = ghost - 1

    def sl(arr, start, count, lead=0):
        idx = [slice(None)] * arr.ndim
        idx[lead + axis] = slice(base + start, base + start + count)
        return arr[tuple(idx)]

    return sl


def highorder_ec_flux(tables: StateTables, met_t_k, met_s_k, axis, ghost, nin,
                      p, mode="rmhd"):
    """2p-th order EC interface flux along one direction.

    tables: per-node StateTables on the ghosted block; met_t_k (…): temporal
    metric for this direction; met_s_k (d, …): its spatial metric row;
    axis: spatial array axis; returns (8, .., nin+1, ..) flux array.
    """
    sl = _pair_slicer(axis, ghost)

    def kernel_gap(n, lo, count):
        idxL = [slice(None)] * tables.rho.ndim
        idxL[axis] = slice(ghost - 1 + lo, ghost - 1 + lo + count)
        idxR = [slice(None)] * tables.rho.ndim
        idxR[axis] = slice(ghost - 1 + lo + n, ghost - 1 + lo + n + count)
        tL = tables.sliced(tuple(idxL))
        tR = tables.sliced(tuple(idxR))
        return ec_flux_curvilinear(
            tL, tR, sl(met_t_k, lo, count), sl(met_t_k, lo + n, count),
            sl(met_s_k, lo, count, 1), sl(met_s_k, lo + n, count, 1), mode)

    return combine_pairs(p, kernel_gap, 1 + axis, nin)


def highorder_source_flux(B, met_s_k, axis, ghost, nin, p):
    """2p-th order Godunov-Powell source flux: combinations of
    sum_j 1/4 (met_j_l + met_j_r)(B_j_l + B_j_r)."""
    sl = _pair_slicer(axis, ghost)
    d = met_s_k.shape[0]

    def kernel_gap(n, lo, count):
        acc = 0.0
        for j in range(d):
            acc = acc + 0.25 \
                * (sl(met_s_k[j], lo, count) + sl(met_s_k[j], lo + n, count)) \
                * (sl(B[j], lo, count) + sl(B[j], lo + n, count))
        return acc

    return combine_pairs(p, kernel_gap, axis, nin)


def highorder_metric_flux(a, axis, ghost, nin, p):
    """2p-th order interface flux of a per-node scalar (arithmetic-mean
    two-point flux under the same combination); its difference quotient is
    the 2p-th order central difference."""
    sl = _pair_slicer(axis, ghost)

    def kernel_gap(n, lo, count):
        return 0.5 * (sl(a, lo, count) + sl(a, lo + n, count))

    return combine_pairs(p, kernel_gap, axis, nin)


def highorder_entropy_flux(tables, met_t_k, met_s_k, axis, ghost, nin, p,
                           mode="rmhd"):
    """2p-th order numerical entropy flux (diagnostic for the EC identity)."""
    sl = _pair_slicer(axis, ghost)

    def kernel_gap(n, lo, count):
        idxL = [slice(None)] * tables.rho.ndim
        idxL[axis] = slice(ghost - 1 + lo, ghost - 1 + lo + count)
        idxR = [slice(None)] * tables.rho.ndim
        idxR[axis] = slice(ghost - 1 + lo + n, ghost - 1 + lo + n + count)
        tL = tables.sliced(tuple(idxL))
        tR = tables.sliced(tuple(idxR))
        return num_entropy_flux(
            tL, tR, sl(met_t_k, lo, count), sl(met_t_k, lo + n, count),
            sl(met_s_k, lo, count, 1), sl(met_s_k, lo + n, count, 1), mode)

    return combine_pairs(p, kernel_gap, axis, nin)
