// Readers for the solver's output formats: CSV tables, VTK legacy ASCII
// structured grids, and the flat binary dumps with the "ESMM1" header.
import * as fs from 'node:fs';

export type Table = { header: string[]; columns: Map<string, Float64Array> };

export type StructuredField = {
  dims: [number, number];          // nodes per index direction
  x: Float64Array;                 // node coordinates, C order (i-major)
  y: Float64Array;
  fields: Map<string, Float64Array>;
};

export function readCsv(path: string): Table {
  const text = fs.readFileSync(path, 'utf8').trim();
  if (text.length === 0) throw new Error(`${path}: empty CSV`);
  const lines = text.split('\n');
  const header = lines[0].split(',').map((s) => s.trim());
  const cols = header.map(() => new Float64Array(lines.length - 1));
  for (let i = 1; i < lines.length; ++i) {
    const parts = lines[i].split(',');
    if (parts.length !== header.length)
      throw new Error(`${path}:${i + 1}: expected ${header.length} fields`);
    for (let j = 0; j < header.length; ++j) cols[j][i - 1] = Number(parts[j]);
  }
  const columns = new Map<string, Float64Array>();
  header.forEach((h, j) => columns.set(h, cols[j]));
  return { header, columns };
}

export function column(t: Table, name: string): Float64Array {
  const c = t.columns.get(name);
  if (!c) throw new Error(`missing CSV column '${name}' (have ${t.header})`);
  return c;
}

/** VTK legacy ASCII STRUCTURED_GRID reader (the solver's dump layout:
 * POINTS in Fortran order over (n1, n2, 1), then SCALARS point data). */
export function readVtk(path: string): StructuredField {
  const lines = fs.readFileSync(path, 'utf8').split('\n');
  let li = 0;
  const seek = (pred: (s: string) => boolean) => {
    while (li < lines.length && !pred(lines[li])) li++;
    if (li >= lines.length) throw new Error(`${path}: truncated VTK file`);
    return lines[li];
  };
  const dimLine = seek((s) => s.startsWith('DIMENSIONS'));
  const dims3 = dimLine.split(/\s+/).slice(1).map(Number);
  const [n1, n2] = [dims3[0], dims3[1]];
  const npts = dims3[0] * dims3[1] * dims3[2];
  seek((s) => s.startsWith('POINTS'));
  li++;
  const x = new Float64Array(npts);
  const y = new Float64Array(npts);
  // VTK points are listed with the first index varying fastest; the solver
  // writes Fortran-flattened (i fastest); convert to C order (i-major)
  for (let q = 0; q < npts; ++q) {
    const p = lines[li + q].trim().split(/\s+/).map(Number);
    const i = q % n1;
    const j = Math.floor(q / n1) % n2;
    x[i * n2 + j] = p[0];
    y[i * n2 + j] = p[1];
  }
  li += npts;
  const fields = new Map<string, Float64Array>();
  while (li < lines.length) {
    if (lines[li].startsWith('SCALARS')) {
      const name = lines[li].split(/\s+/)[1];
      const arr = new Float64Array(npts);
      for (let q = 0; q < npts; ++q) {
        const i = q % n1;
        const j = Math.floor(q / n1) % n2;
        arr[i * n2 + j] = Number(lines[li + 2 + q]);
      }
      fields.set(name, arr);
      li += 2 + npts;
    } else li++;
  }
  return { dims: [n1, n2], x, y, fields };
}

/** Flat binary dump: magic "ESMM1", uint32 LE header length, JSON header
 * {dims, fields}, then little-endian float64 arrays in C order. */
export function readBinary(path: string): StructuredField {
  const buf = fs.readFileSync(path);
  if (buf.subarray(0, 5).toString('ascii') !== 'ESMM1')
    throw new Error(`${path}: bad magic`);
  const hlen = buf.readUInt32LE(5);
  const header = JSON.parse(buf.subarray(9, 9 + hlen).toString('utf8')) as {
    dims: number[];
    fields: string[];
  };
  if (header.dims.length !== 2)
    throw new Error(`${path}: expected a 2D dump, dims=${header.dims}`);
  const [n1, n2] = header.dims;
  const count = n1 * n2;
  let off = 9 + hlen;
  const all = new Map<string, Float64Array>();
  for (const name of header.fields) {
    const arr = new Float64Array(count);
    for (let q = 0; q < count; ++q) arr[q] = buf.readDoubleLE(off + 8 * q);
    off += 8 * count;
    all.set(name, arr);
  }
  const x = all.get('x1');
  const y = all.get('x2');
  if (!x || !y) throw new Error(`${path}: dump lacks coordinates x1/x2`);
  all.delete('x1');
  all.delete('x2');
  return { dims: [n1, n2], x, y, fields: all };
}

export function readField(path: string): StructuredField {
  return path.endsWith('.vtk') ? readVtk(path) : readBinary(path);
}

export function fieldOf(sf: StructuredField, name: string): Float64Array {
  if (name === 'lnrho') {
    const rho = fieldOf(sf, 'rho');
    return Float64Array.from(rho, Math.log);
  }
  const f = sf.fields.get(name);
  if (!f)
    throw new Error(`field '${name}' not in dump (have ${[...sf.fields.keys()]})`);
  return f;
}
