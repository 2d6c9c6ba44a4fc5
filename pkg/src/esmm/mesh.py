"""Moving-mesh geometry: coordinates, metric terms, and discrete GCLs.

The computational domain is a uniform grid in xi with constant spacings; the
physical mesh is the image x(tau, xi).  Spatial metric terms J dxi_k/dx_j
are discretized with the conservative metrics method (CMM): in 3D the
divergence forms delta_b[delta_a[x_c] x_e] - delta_a[delta_b[x_c] x_e], in
2D plain central differences of the transverse coordinate, in 1D
J dxi/dx == 1.  Because the central-difference operators commute, the
discrete surface conservation laws (SCLs) vanish identically (to roundoff).

The Jacobian J is EVOLVED through the discrete volume conservation law
(VCL), never recomputed geometrically during a run; the geometric value only
initializes it and serves as a drift diagnostic.

Ghost policy: coordinates carry ghost + 2p halo layers (nested differences);
periodic directions wrap with the domain-period offset, non-periodic
directions extrapolate coordinates linearly so metrics stay defined.
"""
from __future__ import annotations

import numpy as np

from .ecflux import ALPHA, highorder_metric_flux


def cdiff(a, axis, p, out=None):
    """Central difference delta_k[a] = 1/2 sum alpha_{p,n} (a_{+n} - a_{-n}).

    Returns a full-size array; entries within p of the ends along `axis` are
    left at zero (callers crop to the valid region).
    """
    alpha = ALPHA[p]
    if out is None:
        out = np.zeros_like(a)
    n_ax = a.shape[axis]

    def sl(lo, hi):
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(lo, hi if hi != 0 else None)
        return tuple(idx)

    core = sl(p, n_ax - p)
    acc = np.zeros(a[core].shape)
    for n in range(1, p + 1):
        acc += 0.5 * alpha[n - 1] * (a[sl(p + n, n_ax - p + n)]
                                     - a[sl(p - n, n_ax - p - n)])
    out[core] = acc
    return out


def cdiff2(a, ax1, ax2, p):
    """Canonical nested central difference delta_ax1 delta_ax2 [a].

    Axes are applied in sorted order so cdiff2(a, j, k, p) and
    cdiff2(a, k, j, p) are bitwise identical.
    """
    lo, hi = sorted((ax1, ax2))
    return cdiff(cdiff(a, lo, p), hi, p)


class MeshBlock:
    """Structured moving mesh block with ghost layers.

    N: evolved nodes per direction; dxi: computational spacings; ghost:
    field-array halo width; p: half-order of the metric differences.
    Coordinate arrays carry ghost + 2p halos.
    """

    def __init__(self, N, dxi, ghost, p, periodic=None, period=None):
        self.d = len(N)
        self.N = tuple(int(n) for n in N)
        self.dxi = np.asarray(dxi, dtype=float)
        self.ghost = int(ghost)
        self.p = int(p)
        self.gc = self.ghost + 2 * self.p
        self.periodic = tuple(periodic) if periodic is not None else (False,) * self.d
        self.period = (np.asarray(period, dtype=float) if period is not None
                       else np.zeros(self.d))
        self.shape_f = tuple(n + 2 * self.ghost for n in self.N)
        self.shape_c = tuple(n + 2 * self.gc for n in self.N)
        self.x = np.zeros((self.d,) + self.shape_c)
        self.xdot = np.zeros((self.d,) + self.shape_c)
        self.J = np.zeros(self.shape_f)
        self.met_s = np.zeros((self.d, self.d) + self.shape_f)
        self.met_t = np.zeros((self.d,) + self.shape_f)

    # -- region helpers ------------------------------------------------
    @property
    def int_f(self):
        """Interior slice tuple for field-shaped arrays."""
        return tuple(slice(self.ghost, self.ghost + n) for n in self.N)

    @property
    def int_c(self):
        return tuple(slice(self.gc, self.gc + n) for n in self.N)

    def field_of_coord(self, a):
        """Crop a coordinate-shaped array (trailing grid axes) to field shape."""
        lead = a.ndim - self.d
        idx = [slice(None)] * lead + [slice(2 * self.p, 2 * self.p + m)
                                      for m in self.shape_f]
        return a[tuple(idx)]

    # -- coordinates ----------------------------------------------------
    def set_coords(self, x_int):
        self.x[(slice(None),) + self.int_c] = x_int
        self.fill_coord_ghosts()

    def set_xdot(self, xd_int):
        self.xdot[(slice(None),) + self.int_c] = xd_int
        self._fill_ghosts(self.xdot, offset=False)

    def fill_coord_ghosts(self):
        self._fill_ghosts(self.x, offset=True)

    def _fill_ghosts(self, arr, offset):
        g = self.gc
        for k in range(self.d):
            ax = 1 + k
            n = self.N[k]

            def sl(lo, hi):
                idx = [slice(None)] * arr.ndim
                idx[ax] = slice(lo, hi if hi != 0 else None)
                return tuple(idx)

            if self.periodic[k]:
                shift = np.zeros((self.d,) + (1,) * self.d)
                if offset:
                    shift[k] = self.period[k]
                arr[sl(0, g)] = arr[sl(n, n + g)] - shift
                arr[sl(g + n, g + n + g)] = arr[sl(g, 2 * g)] + shift
            else:
                if offset:
                    # linear extrapolation keeps metric differences defined
                    for i in range(1, g + 1):
                        arr[sl(g - i, g - i + 1)] = (
                            (i + 1) * arr[sl(g, g + 1)] - i * arr[sl(g + 1, g + 2)])
                        arr[sl(g + n - 1 + i, g + n + i)] = (
                            (i + 1) * arr[sl(g + n - 1, g + n)]
                            - i * arr[sl(g + n - 2, g + n - 1)])
                else:
                    for i in range(1, g + 1):
                        arr[sl(g - i, g - i + 1)] = arr[sl(g, g + 1)]
                        arr[sl(g + n - 1 + i, g + n + i)] = arr[sl(g + n - 1, g + n)]

    # -- metric terms ----------------------------------------------------
    def compute_spatial_metrics(self):
        """CMM spatial metrics on the full field region (incl. field ghosts)."""
        x, p, d = self.x, self.p, self.d
        if d == 1:
            self.met_s[0, 0] = 1.0
            return self.met_s
        if d == 2:
            dx1 = [cdiff(x[c], 0, p) / self.dxi[0] for c in range(2)]
            dx2 = [cdiff(x[c], 1, p) / self.dxi[1] for c in range(2)]
            self.met_s[0, 0] = self.field_of_coord(dx2[1])
            self.met_s[0, 1] = self.field_of_coord(-dx2[0])
            self.met_s[1, 0] = self.field_of_coord(-dx1[1])
            self.met_s[1, 1] = self.field_of_coord(dx1[0])
            return self.met_s
        # 3D: rows k with cyclic (a,b), columns j with cyclic coordinate pair
        cyc = {0: (1, 2), 1: (2, 0), 2: (0, 1)}
        for k in range(3):
            a, b = cyc[k]
            for j in range(3):
                c, e = cyc[j]
                t1 = cdiff(cdiff(x[c], a, p) * x[e], b, p)
                t2 = cdiff(cdiff(x[c], b, p) * x[e], a, p)
                self.met_s[k, j] = self.field_of_coord(
                    (t1 - t2) / (self.dxi[a] * self.dxi[b]))
        return self.met_s

    def compute_temporal_metrics(self):
        """(J dxi_k/dt)_i = -sum_j xdot_j (J dxi_k/dx_j)_i."""
        xd = self.field_of_coord(self.xdot)
        for k in range(self.d):
            self.met_t[k] = -np.einsum("j...,j...->...", xd, self.met_s[k])
        return self.met_t

    def geometric_jacobian(self):
        """Central-difference Jacobian determinant (init / drift diagnostic)."""
        x, p, d = self.x, self.p, self.d
        g = [[cdiff(x[i], k, p) / self.dxi[k] for k in range(d)]
             for i in range(d)]
        if d == 1:
            J = g[0][0]
        elif d == 2:
            J = g[0][0] * g[1][1] - g[0][1] * g[1][0]
        else:
            J = (g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                 - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                 + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]))
        return self.field_of_coord(J)

    def init_jacobian(self):
        self.J = self.geometric_jacobian()
        return self.J

    # -- discrete GCL diagnostics / RHS ----------------------------------
    def _flux_diff(self, scalar, k):
        """(F_{i+1/2} - F_{i-1/2})/dxi_k of the 2p-th order metric flux of a
        field-shaped scalar, on the interior region."""
        ax = scalar.ndim - self.d + k
        fl = highorder_metric_flux(scalar, ax, self.ghost, self.N[k], self.p)
        idx_hi = [slice(None)] * fl.ndim
        idx_lo = [slice(None)] * fl.ndim
        idx_hi[ax] = slice(1, None)
        idx_lo[ax] = slice(0, -1)
        diff = (fl[tuple(idx_hi)] - fl[tuple(idx_lo)]) / self.dxi[k]
        # crop the other axes to interior
        idx = [slice(None)] * diff.ndim
        for kk in range(self.d):
            if kk != k:
                idx[diff.ndim - self.d + kk] = slice(self.ghost,
                                                     self.ghost + self.N[kk])
        return diff[tuple(idx)]

    def scl_residual(self):
        """Left side of the discrete SCLs, per column j (diagnostic)."""
        res = np.zeros((self.d,) + self.N)
        for j in range(self.d):
            for k in range(self.d):
                res[j] += self._flux_diff(self.met_s[k, j], k)
        return res

    def vcl_rhs(self):
        """dJ/dt of the semi-discrete VCL (interior region)."""
        rhs = np.zeros(self.N)
        for k in range(self.d):
            rhs -= self._flux_diff(self.met_t[k], k)
        return rhs
