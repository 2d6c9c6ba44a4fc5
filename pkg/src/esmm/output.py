"""Output writers and readers: VTK legacy ASCII structured grids, flat
binary dumps with a self-describing header (magic "ESMM1"), CSV time series,
cut lines, schlieren fields, and convergence tables.

All floating-point text output uses shortest-roundtrip (repr) or 17
significant digits so regression diffs are exact.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"ESMM1"


def _fmt(x):
    return np.format_float_scientific(x, precision=16, unique=False)


# ----------------------------------------------------------------------
# field snapshots
# ----------------------------------------------------------------------

def snapshot_fields(snap, names):
    """Flatten a solver snapshot into an ordered {name: array} dict."""
    out = {}
    for name in names:
        if name == "v":
            for k in range(3):
                out[f"v{k+1}"] = snap["v"][k]
        elif name == "B":
            for k in range(3):
                out[f"B{k+1}"] = snap["B"][k]
        elif name == "omega":
            if snap.get("omega") is not None:
                out["omega"] = snap["omega"]
        else:
            out[name] = snap[name]
    return out


def write_vtk(path, x, fields):
    """VTK legacy ASCII STRUCTURED_GRID with point data (17 sig digits)."""
    d = x.shape[0]
    dims = x.shape[1:]
    full = tuple(dims) + (1,) * (3 - d)
    npts = int(np.prod(dims))
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("esmm structured grid dump\nASCII\n")
        fh.write("DATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {full[0]} {full[1]} {full[2]}\n")
        fh.write(f"POINTS {npts} double\n")
        coords = [x[k].reshape(-1, order="F") for k in range(d)]
        while len(coords) < 3:
            coords.append(np.zeros(npts))
        for i in range(npts):
            fh.write(f"{_fmt(coords[0][i])} {_fmt(coords[1][i])} "
                     f"{_fmt(coords[2][i])}\n")
        fh.write(f"POINT_DATA {npts}\n")
        for name, arr in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            flat = np.asarray(arr).reshape(-1, order="F")
            for v in flat:
                fh.write(f"{_fmt(v)}\n")


def read_vtk(path):
    """Reader for the writer above; returns (x (d,...), {name: array})."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    i = lines.index(next(l for l in lines if l.startswith("DIMENSIONS")))
    dims = tuple(int(t) for t in lines[i].split()[1:])
    d = sum(1 for n in dims if n > 1)
    shape = dims[:d]
    npts = int(np.prod(dims))
    i += 1
    assert lines[i].startswith("POINTS")
    pts = np.array([[float(t) for t in lines[i + 1 + j].split()]
                    for j in range(npts)])
    i += 1 + npts
    x = np.stack([pts[:, k].reshape(shape, order="F") for k in range(d)])
    fields = {}
    while i < len(lines):
        if lines[i].startswith("SCALARS"):
            name = lines[i].split()[1]
            vals = np.array([float(lines[i + 2 + j]) for j in range(npts)])
            fields[name] = vals.reshape(shape, order="F")
            i += 2 + npts
        else:
            i += 1
    return x, fields


def write_binary(path, x, fields):
    """Flat binary dump: magic ESMM1, uint32 header length, JSON header,
    then IEEE-754 little-endian doubles in C order."""
    d = x.shape[0]
    names = []
    arrays = []
    for k in range(d):
        names.append(f"x{k+1}")
        arrays.append(x[k])
    for name, arr in fields.items():
        names.append(name)
        arrays.append(np.asarray(arr, dtype=float))
    header = json.dumps({"dims": list(x.shape[1:]), "fields": names}).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for arr in arrays:
            fh.write(arr.astype("<f8").tobytes())


def read_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        dims = tuple(header["dims"])
        count = int(np.prod(dims))
        fields = {}
        for name in header["fields"]:
            buf = fh.read(8 * count)
            fields[name] = np.frombuffer(buf, dtype="<f8").reshape(dims)
    return fields


# ----------------------------------------------------------------------
# CSV helpers
# ----------------------------------------------------------------------

def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (int, float,
                     np.floating)) else str(v) for v in row) + "\n")


def write_series_csv(path, series):
    keys = list(series.keys())
    rows = zip(*[series[k] for k in keys])
    write_csv(path, keys, rows)


def write_convergence_csv(path, rows):
    header = ["N", "L1", "order_L1", "Linf", "order_Linf"]
    write_csv(path, header,
              [[r["N"], r["L1"], r["order_L1"], r["Linf"], r["order_Linf"]]
               for r in rows])


# ----------------------------------------------------------------------
# derived outputs: schlieren and cut lines
# ----------------------------------------------------------------------

def schlieren(snap, dxi, var="lnrho", k=50.0):
    """exp(-k |grad sigma| / max |grad sigma|) with the physical-space
    gradient on the curvilinear mesh; constant fields give 1 everywhere."""
    if var == "lnrho":
        sigma = np.log(snap["rho"])
    elif var == "rho":
        sigma = snap["rho"]
    elif var == "Bmag":
        sigma = np.sqrt((snap["B"] ** 2).sum(axis=0))
    else:
        raise ValueError(f"unknown schlieren variable '{var}'")
    x = snap["x"]
    d = x.shape[0]
    # dsigma/dx_j on the (possibly curved) mesh via the chain rule through
    # central differences of sigma and the coordinates in index space
    grads_xi = np.stack([np.gradient(sigma, dxi[k2], axis=k2)
                         for k2 in range(d)])
    jac = np.empty((d, d) + sigma.shape)
    for i in range(d):
        for k2 in range(d):
            jac[i, k2] = np.gradient(x[i], dxi[k2], axis=k2)
    g2 = np.zeros_like(sigma)
    jac_m = np.moveaxis(jac, (0, 1), (-2, -1))
    ginv = np.linalg.inv(jac_m)
    for j in range(d):
        comp = sum(ginv[..., k2, j] * grads_xi[k2] for k2 in range(d))
        g2 += comp ** 2
    g = np.sqrt(g2)
    gmax = g.max()
    if gmax <= 1e-14 * (np.abs(sigma).max() + 1.0):
        return np.ones_like(sigma)
    return np.exp(-k * g / gmax)


def extract_cut(snap, spec, field="lnrho"):
    """Cut-line extraction along mesh index lines.

    spec: "diagonal" (i1 == i2), "iline:<j>" (vary i1 at fixed i2 = j), or
    "jline:<i>".  Returns (arclength s, x coordinates (d, n), values)."""
    if field == "lnrho":
        vals = np.log(snap["rho"])
    elif field in snap:
        vals = snap[field]
    elif field == "W":
        v2 = (snap["v"] ** 2).sum(axis=0)
        vals = 1.0 / np.sqrt(1.0 - v2)
    else:
        raise ValueError(f"unknown cut field '{field}'")
    x = snap["x"]
    if spec == "diagonal":
        n = min(vals.shape[0], vals.shape[1])
        idx = (np.arange(n), np.arange(n))
    elif spec.startswith("iline:"):
        j = int(spec.split(":")[1])
        idx = (np.arange(vals.shape[0]), np.full(vals.shape[0], j))
    elif spec.startswith("jline:"):
        i = int(spec.split(":")[1])
        idx = (np.full(vals.shape[1], i), np.arange(vals.shape[1]))
    else:
        raise ValueError(f"unknown cut spec '{spec}'")
    xc = np.stack([x[k][idx] for k in range(x.shape[0])])
    ds = np.sqrt(((xc[:, 1:] - xc[:, :-1]) ** 2).sum(axis=0))
    s = np.concatenate([[0.0], np.cumsum(ds)])
    return s, xc, vals[idx]


def write_cut_csv(path, s, xc, vals):
    d = xc.shape[0]
    header = ["s"] + [f"x{k+1}" for k in range(d)] + ["value"]
    rows = [[s[i]] + [xc[k, i] for k in range(d)] + [vals[i]]
            for i in range(len(s))]
    write_csv(path, header, rows)


# ----------------------------------------------------------------------
# run-artifact emission per output plan
# ----------------------------------------------------------------------

def emit_snapshot(outdir, tag, snap, plan, dxi):
    os.makedirs(outdir, exist_ok=True)
    fields = snapshot_fields(snap, plan.fields)
    for spec in plan.schlieren:
        fields[f"schlieren_{spec.get('var', 'lnrho')}"] = schlieren(
            snap, dxi, spec.get("var", "lnrho"), spec.get("k", 50.0))
    written = []
    if "vtk" in plan.formats:
        path = os.path.join(outdir, f"{tag}.vtk")
        write_vtk(path, snap["x"], fields)
        written.append(path)
    if "binary" in plan.formats:
        path = os.path.join(outdir, f"{tag}.esmm")
        write_binary(path, snap["x"], fields)
        written.append(path)
    for spec in plan.cuts:
        s, xc, vals = extract_cut(snap, spec)
        path = os.path.join(outdir, f"{tag}_cut_{spec.replace(':', '')}.csv")
        write_cut_csv(path, s, xc, vals)
        written.append(path)
    return written
