// Minimal SVG document builder with a data-space -> viewport mapping.

export type Extent = { xmin: number; xmax: number; ymin: number; ymax: number };

export class Canvas {
  readonly parts: string[] = [];
  constructor(
    readonly width: number,
    readonly height: number,
    readonly ext: Extent,
    readonly margin = 52,
  ) {}

  sx(x: number): number {
    const { xmin, xmax } = this.ext;
    return this.margin + ((x - xmin) / (xmax - xmin)) * (this.width - 2 * this.margin);
  }

  sy(y: number): number {
    const { ymin, ymax } = this.ext;
    return this.height - this.margin - ((y - ymin) / (ymax - ymin)) * (this.height - 2 * this.margin);
  }

  polyline(pts: Array<[number, number]>, stroke: string, width = 1.0, fill = 'none') {
    const d = pts.map(([x, y]) => `${this.sx(x).toFixed(2)},${this.sy(y).toFixed(2)}`).join(' ');
    this.parts.push(`<polyline points="${d}" fill="${fill}" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(pts: Array<[number, number]>, fill: string) {
    const d = pts.map(([x, y]) => `${this.sx(x).toFixed(2)},${this.sy(y).toFixed(2)}`).join(' ');
    this.parts.push(`<polygon points="${d}" fill="${fill}" stroke="none"/>`);
  }

  circle(x: number, y: number, r: number, fill: string) {
    this.parts.push(`<circle cx="${this.sx(x).toFixed(2)}" cy="${this.sy(y).toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, size = 13, anchor = 'start') {
    this.parts.push(
      `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-size="${size}" ` +
        `font-family="sans-serif" text-anchor="${anchor}">${s}</text>`,
    );
  }

  frame(title: string, xlabel: string, ylabel: string) {
    const m = this.margin;
    this.parts.push(
      `<rect x="${m}" y="${m}" width="${this.width - 2 * m}" height="${this.height - 2 * m}" ` +
        `fill="none" stroke="black" stroke-width="1"/>`,
    );
    this.text(this.width / 2, m - 14, title, 15, 'middle');
    this.text(this.width / 2, this.height - 10, xlabel, 13, 'middle');
    this.parts.push(
      `<text x="14" y="${this.height / 2}" font-size="13" font-family="sans-serif" ` +
        `text-anchor="middle" transform="rotate(-90 14 ${this.height / 2})">${ylabel}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join('\n') +
      '\n</svg>\n'
    );
  }
}

export function extentOf(xs: ArrayLike<number>, ys: ArrayLike<number>, pad = 0.0): Extent {
  let xmin = Infinity, xmax = -Infinity, ymin = Infinity, ymax = -Infinity;
  for (let i = 0; i < xs.length; ++i) {
    if (xs[i] < xmin) xmin = xs[i];
    if (xs[i] > xmax) xmax = xs[i];
  }
  for (let i = 0; i < ys.length; ++i) {
    if (ys[i] < ymin) ymin = ys[i];
    if (ys[i] > ymax) ymax = ys[i];
  }
  if (xmax === xmin) { xmax += 1; xmin -= 1; }
  if (ymax === ymin) { ymax += 1; ymin -= 1; }
  const dx = (xmax - xmin) * pad, dy = (ymax - ymin) * pad;
  return { xmin: xmin - dx, xmax: xmax + dx, ymin: ymin - dy, ymax: ymax + dy };
}
