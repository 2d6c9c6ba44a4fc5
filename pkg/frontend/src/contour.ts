// Marching-squares contour extraction on a structured grid.  The cases are
// resolved in index space and segment endpoints are mapped to physical
// coordinates through the (possibly curved) node positions.
import { StructuredField } from './readers.js';

export type Segment = [[number, number], [number, number]];

function lerp(a: number, b: number, fa: number, fb: number, level: number): number {
  const t = (level - fa) / (fb - fa);
  return a + t * (b - a);
}

/** Contour segments of `f` at `level`; returns physical-space segments. */
export function contourSegments(
  sf: StructuredField,
  f: Float64Array,
  level: number,
): Segment[] {
  const [n1, n2] = sf.dims;
  const id = (i: number, j: number) => i * n2 + j;
  const segs: Segment[] = [];
  // edge interpolation returning physical coordinates
  const onEdge = (
    i0: number, j0: number, i1: number, j1: number,
  ): [number, number] => {
    const a = id(i0, j0), b = id(i1, j1);
    const t = (level - f[a]) / (f[b] - f[a]);
    return [sf.x[a] + t * (sf.x[b] - sf.x[a]), sf.y[a] + t * (sf.y[b] - sf.y[a])];
  };
  for (let i = 0; i < n1 - 1; ++i) {
    for (let j = 0; j < n2 - 1; ++j) {
      const v00 = f[id(i, j)], v10 = f[id(i + 1, j)];
      const v01 = f[id(i, j + 1)], v11 = f[id(i + 1, j + 1)];
      let code = 0;
      if (v00 > level) code |= 1;
      if (v10 > level) code |= 2;
      if (v11 > level) code |= 4;
      if (v01 > level) code |= 8;
      if (code === 0 || code === 15) continue;
      // edges: b(ottom) i..i+1 at j, r(ight) at i+1, t(op) at j+1, l(eft) at i
      const eb = () => onEdge(i, j, i + 1, j);
      const er = () => onEdge(i + 1, j, i + 1, j + 1);
      const et = () => onEdge(i, j + 1, i + 1, j + 1);
      const el = () => onEdge(i, j, i, j + 1);
      switch (code) {
        case 1: case 14: segs.push([el(), eb()]); break;
        case 2: case 13: segs.push([eb(), er()]); break;
        case 3: case 12: segs.push([el(), er()]); break;
        case 4: case 11: segs.push([er(), et()]); break;
        case 6: case 9: segs.push([eb(), et()]); break;
        case 7: case 8: segs.push([el(), et()]); break;
        case 5: segs.push([el(), eb()], [er(), et()]); break;
        case 10: segs.push([eb(), er()], [el(), et()]); break;
      }
    }
  }
  return segs;
}

/** n equally spaced levels strictly inside [min, max]. */
export function equallySpacedLevels(f: Float64Array, n: number): number[] {
  let lo = Infinity, hi = -Infinity;
  for (const v of f) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(hi > lo)) return [];
  const levels: number[] = [];
  for (let k = 1; k <= n; ++k) levels.push(lo + ((hi - lo) * k) / (n + 1));
  return levels;
}
