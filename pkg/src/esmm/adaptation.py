"""Adaptive mesh redistribution: Winslow monitor, low-pass smoothing, Jacobi
iteration on the Euler-Lagrange mesh equations, and movement limiting.

Periodic directions are treated as a torus: monitor derivatives, filter
neighborhoods, Jacobi neighbor couplings, and limiter gaps all wrap (with
the domain-period offset on coordinates).  Non-periodic box faces slide
within their face via the lower-dimensional iteration on the trace of the
monitor; edges (3D) reduce once more; corners are pinned.
"""
from __future__ import annotations

import numpy as np


class MeshDegenerateError(RuntimeError):
    pass


def _pad_scalar(a, periodic):
    """One ghost layer per axis: wrap on periodic axes, edge elsewhere."""
    for k in range(a.ndim):
        pw = [(1, 1) if kk == k else (0, 0) for kk in range(a.ndim)]
        a = np.pad(a, pw, mode="wrap" if periodic[k] else "edge")
    return a


def _pad_coords(x, periodic, period, axis_comp=None):
    """One ghost layer per spatial axis for coordinate stacks (ncomp, N...).

    Periodic wrap adds the domain-period offset to the coordinate component
    belonging to the wrapped axis (axis_comp maps spatial axis -> component;
    identity by default); non-periodic axes extrapolate linearly."""
    nsp = x.ndim - 1
    if axis_comp is None:
        axis_comp = list(range(nsp))
    out = x
    for k in range(nsp):
        pw = [(0, 0)] + [(1, 1) if kk == k else (0, 0) for kk in range(nsp)]
        ax = 1 + k
        if periodic[k]:
            out = np.pad(out, pw, mode="wrap")
            c = axis_comp[k]
            lo = [slice(None)] * (nsp + 1)
            hi = [slice(None)] * (nsp + 1)
            lo[0] = c
            hi[0] = c
            lo[ax] = slice(0, 1)
            hi[ax] = slice(out.shape[ax] - 1, out.shape[ax])
            out[tuple(lo)] -= period[k]
            out[tuple(hi)] += period[k]
        else:
            out = np.pad(out, pw, mode="edge")
            def sl(a, b):
                idx = [slice(None)] * (nsp + 1)
                idx[ax] = slice(a, b)
                return tuple(idx)
            n_ax = out.shape[ax]
            out[sl(0, 1)] = 2 * out[sl(1, 2)] - out[sl(2, 3)]
            out[sl(n_ax - 1, n_ax)] = 2 * out[sl(n_ax - 2, n_ax - 1)] \
                - out[sl(n_ax - 3, n_ax - 2)]
    return out


def build_monitor(sigma, dxi, alpha, lap_weight=0.0, periodic=None):
    """omega = sqrt(1 + alpha |grad sigma|/max + lap_weight |lap sigma|/max).

    Gradient and Laplacian in xi by second-order central differences
    (wrapping on periodic axes); a vanishing max gradient yields omega == 1.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.ndim
    if periodic is None:
        periodic = (False,) * d
    pad = _pad_scalar(sigma, periodic)
    ctr = tuple(slice(1, -1) for _ in range(d))

    def sh(axis, off):
        idx = [slice(1, -1)] * d
        idx[axis] = slice(1 + off, pad.shape[axis] - 1 + off
                          if pad.shape[axis] - 1 + off != 0 else None)
        return pad[tuple(idx)]

    g2 = np.zeros_like(sigma)
    lap = np.zeros_like(sigma)
    for k in range(d):
        g2 += ((sh(k, 1) - sh(k, -1)) / (2.0 * dxi[k])) ** 2
        if lap_weight:
            lap += (sh(k, 1) - 2.0 * sigma + sh(k, -1)) / dxi[k] ** 2
    g = np.sqrt(g2)
    gmax = g.max()
    scale = np.abs(sigma).max() + 1.0
    ratio = g / gmax if gmax > 1e-14 * scale else np.zeros_like(g)
    w2 = 1.0 + alpha * ratio
    if lap_weight:
        lmax = np.abs(lap).max()
        lratio = np.abs(lap) / lmax if lmax > 1e-14 * scale \
            else np.zeros_like(lap)
        w2 = w2 + lap_weight * lratio
    return np.sqrt(w2)


def lowpass_filter(omega, passes=4, periodic=None):
    """Weighted neighborhood average with weights (1/2)^(|j1|+..+|jd|+d);
    weights sum to one so constants are fixed points.  Boundary nodes use
    wrapped (periodic) or reflected neighborhoods."""
    d = omega.ndim
    if periodic is None:
        periodic = (False,) * d
    out = np.asarray(omega, dtype=float)
    offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij"))
    offsets = offsets.reshape(d, -1).T
    for _ in range(passes):
        pad = out
        for k in range(d):
            pw = [(1, 1) if kk == k else (0, 0) for kk in range(d)]
            pad = np.pad(pad, pw,
                         mode="wrap" if periodic[k] else "reflect")
        acc = np.zeros_like(out)
        for off in offsets:
            wgt = 0.5 ** (np.abs(off).sum() + d)
            sl = tuple(slice(1 + o, 1 + o + n) for o, n in zip(off, out.shape))
            acc += wgt * pad[sl]
        out = acc
    return out


def _jacobi_sweep(xpad, wpad, axes, comps, shape):
    """One Jacobi update over padded arrays; returns values on the original
    region for the requested coordinate components."""
    ctr = tuple(slice(1, 1 + n) for n in shape)

    def sh(arr, ax, off):
        sl = list(ctr)
        sl[ax] = slice(1 + off, 1 + off + shape[ax])
        return arr[tuple(sl)]

    w0 = wpad[ctr]
    num = 0.0
    den = 0.0
    for ax in axes:
        wp = sh(wpad, ax, +1)
        wm = sh(wpad, ax, -1)
        num = num + (w0 + wp) * np.stack([sh(xpad[c], ax, +1) for c in comps]) \
                  + (w0 + wm) * np.stack([sh(xpad[c], ax, -1) for c in comps])
        den = den + (2.0 * w0 + wp + wm)
    return num / den


def jacobi_redistribute(x_int, omega, mu=10, periodic=None, period=None):
    """mu Jacobi sweeps of the discretized Euler-Lagrange mesh equations.

    x_int: (d, N1..Nd) node coordinates; omega: smoothed monitor on the same
    region.  Periodic axes wrap; non-periodic face nodes slide within their
    face, 3D edges slide along themselves, corners stay fixed.
    """
    d = x_int.shape[0]
    shape = x_int.shape[1:]
    if periodic is None:
        periodic = (False,) * d
    if period is None:
        period = np.zeros(d)
    x = np.array(x_int, dtype=float)
    free = [k for k in range(d) if not periodic[k]]
    for _ in range(mu):
        xpad = _pad_coords(x, periodic, period)
        wpad = _pad_scalar(omega, periodic)
        xn = x.copy()
        upd = _jacobi_sweep(xpad, wpad, tuple(range(d)), range(d), shape)
        # periodic axes: every node updates; non-periodic: interior only
        sel = tuple(slice(None) if periodic[a] else slice(1, -1)
                    for a in range(d))
        xn[(slice(None),) + sel] = upd[(slice(None),) + sel]
        # non-periodic faces slide within the face
        for k in free:
            for side in (0, -1):
                slab = tuple(side if a == k else slice(None)
                             for a in range(d))
                comps = [c for c in range(d) if c != k]
                if not comps:
                    continue
                sub_axes = [a for a in range(d) if a != k]
                xf = x[(slice(None),) + slab]
                wf = omega[slab]
                sub_per = tuple(periodic[a] for a in sub_axes)
                sub_period = period[sub_axes] if sub_axes else period[:0]
                xfp = _pad_coords(xf, sub_per, sub_period, axis_comp=sub_axes)
                wfp = _pad_scalar(wf, sub_per)
                upd = _jacobi_sweep(xfp, wfp, tuple(range(d - 1)), comps,
                                    xf.shape[1:])
                self_ = tuple(slice(None) if sub_per[a] else slice(1, -1)
                              for a in range(d - 1))
                tgt = xn[(slice(None),) + slab]
                for i, c in enumerate(comps):
                    tgt[c][self_] = upd[i][self_]
        # 3D edges between two non-periodic axes
        if d == 3 and len(free) >= 2:
            for fr in range(3):
                others = [a for a in range(3) if a != fr]
                if periodic[others[0]] or periodic[others[1]]:
                    continue
                for s1 in (0, -1):
                    for s2 in (0, -1):
                        slab = [slice(None)] * 3
                        slab[others[0]] = s1
                        slab[others[1]] = s2
                        slab = tuple(slab)
                        xe = x[(slice(None),) + slab]
                        we = omega[slab]
                        sub_per = (periodic[fr],)
                        xep = _pad_coords(xe, sub_per, period[[fr]], axis_comp=[fr])
                        wep = _pad_scalar(we, sub_per)
                        upd = _jacobi_sweep(xep, wep, (0,), [fr],
                                            xe.shape[1:])
                        sel_e = (slice(None),) if sub_per[0] else (slice(1, -1),)
                        xn[(slice(None),) + slab][fr][sel_e] = upd[0][sel_e]
        x = xn
    return x


def limit_movement(x_old, candidate, periodic=None, period=None):
    """Global movement limiter: x_new = x_old + Dtau (candidate - x_old) with
    Dtau <= 1 chosen so no node moves more than half the gap to its index
    neighbor in any component (gaps wrap on periodic axes).
    Returns (x_new, displacement, Dtau)."""
    d = x_old.shape[0]
    if periodic is None:
        periodic = (False,) * d
    if period is None:
        period = np.zeros(d)
    delta = candidate - x_old
    dtau = 1.0
    xpad = _pad_coords(x_old, periodic, period)
    shape = x_old.shape[1:]
    ctr = tuple(slice(1, 1 + n) for n in shape)
    for k in range(d):
        def sh(ax, off):
            sl = list(ctr)
            sl[ax] = slice(1 + off, 1 + off + shape[ax])
            return xpad[(k,) + tuple(sl)]

        xk = x_old[k]
        gap_m = xk - sh(k, -1)
        gap_p = sh(k, +1) - xk
        # one-sided extrapolated ghost gaps at non-periodic faces are the
        # mirrored interior gaps; face nodes pinned normal to the face
        # never move in component k there anyway
        if np.any(gap_m <= 0) or np.any(gap_p <= 0):
            raise MeshDegenerateError(f"non-monotone input mesh along axis {k}")
        dc = delta[k]
        neg = dc < 0
        pos = dc > 0
        if neg.any():
            dtau = min(dtau, float((gap_m[neg] / (-2.0 * dc[neg])).min()))
        if pos.any():
            dtau = min(dtau, float((gap_p[pos] / (2.0 * dc[pos])).min()))
    disp = dtau * delta
    x_new = x_old + disp
    xnp = _pad_coords(x_new, periodic, period)
    for k in range(d):
        hi = list(ctr)
        hi[k] = slice(2, 2 + shape[k])
        diff = xnp[(k,) + tuple(hi)] - x_new[k]
        if np.any(diff <= 0):
            raise MeshDegenerateError(
                f"movement limiter failed to keep axis {k} monotone")
    return x_new, disp, dtau
