// Figure builders: each returns a complete SVG document string.
import { Table, StructuredField, column, fieldOf } from './readers.js';
import { Canvas, extentOf } from './svg.js';
import { contourSegments, equallySpacedLevels } from './contour.js';

export function leastSquaresSlope(N: Float64Array, err: Float64Array): number {
  // slope of log(err) against log(1/N): positive p for err ~ N^-p
  const n = N.length;
  let sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (let i = 0; i < n; ++i) {
    const lx = Math.log(N[i]);
    const ly = Math.log(err[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/** Log-log convergence plot with least-squares slope annotations. */
export function convergenceFigure(table: Table, title = 'convergence'): string {
  const N = column(table, 'N');
  const series: Array<[string, Float64Array, string]> = [];
  if (table.columns.has('L1')) series.push(['L1', column(table, 'L1'), 'crimson']);
  if (table.columns.has('Linf')) series.push(['Linf', column(table, 'Linf'), 'steelblue']);
  if (series.length === 0) throw new Error('convergence CSV has no L1/Linf columns');
  const logN = Float64Array.from(N, Math.log10);
  const allErr: number[] = [];
  for (const [, e] of series) for (const v of e) allErr.push(Math.log10(v));
  const ext = extentOf(logN, Float64Array.from(allErr), 0.08);
  const cv = new Canvas(560, 430, ext);
  cv.frame(title, 'log10 N', 'log10 error');
  let ty = 70;
  for (const [name, err, color] of series) {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < N.length; ++i) pts.push([Math.log10(N[i]), Math.log10(err[i])]);
    cv.polyline(pts, color, 1.5);
    for (const [x, y] of pts) cv.circle(x, y, 3, color);
    const slope = leastSquaresSlope(N, err);
    cv.text(cv.width - cv.margin - 6, ty, `${name}: slope ${slope.toFixed(2)}`, 13, 'end');
    ty += 18;
  }
  return cv.render();
}

/** Contour figure with n equally spaced levels; optional mesh overlay. */
export function contourFigure(
  sf: StructuredField,
  fieldName: string,
  levels = 40,
  withMesh = false,
  title?: string,
): string {
  const f = fieldOf(sf, fieldName);
  const ext = extentOf(sf.x, sf.y, 0.02);
  const cv = new Canvas(540, 540, ext);
  cv.frame(title ?? `${fieldName} (${levels} contours)`, 'x1', 'x2');
  if (withMesh) drawMesh(cv, sf, '#bbbbbb', 0.4);
  for (const level of equallySpacedLevels(f, levels)) {
    for (const [a, b] of contourSegments(sf, f, level)) {
      cv.polyline([a, b], 'black', 0.7);
    }
  }
  return cv.render();
}

function drawMesh(cv: Canvas, sf: StructuredField, stroke: string, width: number) {
  const [n1, n2] = sf.dims;
  const id = (i: number, j: number) => i * n2 + j;
  for (let i = 0; i < n1; ++i) {
    const pts: Array<[number, number]> = [];
    for (let j = 0; j < n2; ++j) pts.push([sf.x[id(i, j)], sf.y[id(i, j)]]);
    cv.polyline(pts, stroke, width);
  }
  for (let j = 0; j < n2; ++j) {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < n1; ++i) pts.push([sf.x[id(i, j)], sf.y[id(i, j)]]);
    cv.polyline(pts, stroke, width);
  }
}

/** Mesh-only figure (node lines of the adapted mesh). */
export function meshFigure(sf: StructuredField, title = 'mesh'): string {
  const ext = extentOf(sf.x, sf.y, 0.02);
  const cv = new Canvas(540, 540, ext);
  cv.frame(title, 'x1', 'x2');
  drawMesh(cv, sf, 'black', 0.5);
  return cv.render();
}

/** Grayscale schlieren rendering: one filled quad per mesh cell. */
export function schlierenFigure(
  sf: StructuredField,
  fieldName: string,
  title?: string,
): string {
  const f = fieldOf(sf, fieldName);
  const [n1, n2] = sf.dims;
  const id = (i: number, j: number) => i * n2 + j;
  const ext = extentOf(sf.x, sf.y, 0.02);
  const cv = new Canvas(540, 540, ext);
  let lo = Infinity, hi = -Infinity;
  for (const v of f) { if (v < lo) lo = v; if (v > hi) hi = v; }
  const span = hi > lo ? hi - lo : 1.0;
  for (let i = 0; i < n1 - 1; ++i) {
    for (let j = 0; j < n2 - 1; ++j) {
      const mean = 0.25 * (f[id(i, j)] + f[id(i + 1, j)] + f[id(i, j + 1)] + f[id(i + 1, j + 1)]);
      const g = Math.round(255 * (mean - lo) / span);
      cv.polygon(
        [
          [sf.x[id(i, j)], sf.y[id(i, j)]],
          [sf.x[id(i + 1, j)], sf.y[id(i + 1, j)]],
          [sf.x[id(i + 1, j + 1)], sf.y[id(i + 1, j + 1)]],
          [sf.x[id(i, j + 1)], sf.y[id(i, j + 1)]],
        ],
        `rgb(${g},${g},${g})`,
      );
    }
  }
  cv.frame(title ?? `schlieren ${fieldName}`, 'x1', 'x2');
  return cv.render();
}

/** Cut-line comparison: one curve per input table (s or x1 against value). */
export function cutlineFigure(tables: Array<[string, Table]>, title = 'cut'): string {
  const colors = ['black', 'crimson', 'steelblue', 'seagreen', 'darkorange'];
  const xsAll: number[] = [], ysAll: number[] = [];
  const curves: Array<[string, Float64Array, Float64Array]> = [];
  for (const [label, t] of tables) {
    const s = t.columns.has('s') ? column(t, 's') : column(t, 'x1');
    const v = column(t, 'value');
    curves.push([label, s, v]);
    for (const q of s) xsAll.push(q);
    for (const q of v) ysAll.push(q);
  }
  const ext = extentOf(Float64Array.from(xsAll), Float64Array.from(ysAll), 0.05);
  const cv = new Canvas(620, 430, ext);
  cv.frame(title, 'arc length', 'value');
  let ty = 70;
  curves.forEach(([label, s, v], k) => {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < s.length; ++i) pts.push([s[i], v[i]]);
    cv.polyline(pts, colors[k % colors.length], 1.2);
    cv.text(cv.width - cv.margin - 6, ty, label, 12, 'end');
    ty += 16;
  });
  return cv.render();
}

/** Total-entropy evolution curves from series CSVs. */
export function entropyFigure(tables: Array<[string, Table]>, title = 'total entropy'): string {
  const colors = ['black', 'crimson', 'steelblue', 'seagreen'];
  const xs: number[] = [], ys: number[] = [];
  const curves: Array<[string, Float64Array, Float64Array]> = [];
  for (const [label, t] of tables) {
    const tt = column(t, 't');
    const S = column(t, 'entropy');
    curves.push([label, tt, S]);
    for (const q of tt) xs.push(q);
    for (const q of S) ys.push(q);
  }
  const ext = extentOf(Float64Array.from(xs), Float64Array.from(ys), 0.05);
  const cv = new Canvas(620, 430, ext);
  cv.frame(title, 't', 'sum J eta / nodes');
  let ty = 70;
  curves.forEach(([label, tt, S], k) => {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < tt.length; ++i) pts.push([tt[i], S[i]]);
    cv.polyline(pts, colors[k % colors.length], 1.3);
    cv.text(cv.width - cv.margin - 6, ty, label, 12, 'end');
    ty += 16;
  });
  return cv.render();
}
