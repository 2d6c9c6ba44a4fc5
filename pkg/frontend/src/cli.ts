// Batch figure renderer: one figure per invocation.
//
//   node dist/cli.js convergence --input conv.csv --output fig.svg
//   node dist/cli.js contour     --input dump.vtk --field rho --levels 40
//                                [--mesh] --output fig.svg
//   node dist/cli.js mesh        --input dump.vtk --output fig.svg
//   node dist/cli.js schlieren   --input dump.vtk --field schlieren_lnrho
//   node dist/cli.js cutline     --input a.csv [--input b.csv ...]
//   node dist/cli.js entropy     --input series.csv [--input ...]
import * as fs from 'node:fs';
import * as path from 'node:path';
import { readCsv, readField } from './readers.js';
import {
  contourFigure, convergenceFigure, cutlineFigure, entropyFigure,
  meshFigure, schlierenFigure,
} from './figures.js';

type Opts = { inputs: string[]; output: string; field: string; levels: number; mesh: boolean };

function parseArgs(argv: string[]): { kind: string; opts: Opts } {
  const kind = argv[0];
  const opts: Opts = { inputs: [], output: 'figure.svg', field: 'rho', levels: 40, mesh: false };
  for (let i = 1; i < argv.length; ++i) {
    switch (argv[i]) {
      case '--input': opts.inputs.push(argv[++i]); break;
      case '--output': opts.output = argv[++i]; break;
      case '--field': opts.field = argv[++i]; break;
      case '--levels': opts.levels = Number(argv[++i]); break;
      case '--mesh': opts.mesh = true; break;
      default: throw new Error(`unknown argument '${argv[i]}'`);
    }
  }
  if (!kind) throw new Error('usage: cli.js <kind> --input ... --output out.svg');
  if (opts.inputs.length === 0) throw new Error('at least one --input is required');
  return { kind, opts };
}

export function render(kind: string, opts: Opts): string {
  const label = (p: string) => path.basename(p).replace(/\.[^.]+$/, '');
  switch (kind) {
    case 'convergence':
      return convergenceFigure(readCsv(opts.inputs[0]), label(opts.inputs[0]));
    case 'contour':
      return contourFigure(readField(opts.inputs[0]), opts.field, opts.levels, opts.mesh);
    case 'mesh':
      return meshFigure(readField(opts.inputs[0]), label(opts.inputs[0]));
    case 'schlieren':
      return schlierenFigure(readField(opts.inputs[0]), opts.field);
    case 'cutline':
      return cutlineFigure(opts.inputs.map((p) => [label(p), readCsv(p)]));
    case 'entropy':
      return entropyFigure(opts.inputs.map((p) => [label(p), readCsv(p)]));
    default:
      throw new Error(`unknown figure kind '${kind}'`);
  }
}

export function main(argv: string[]): number {
  try {
    const { kind, opts } = parseArgs(argv);
    const svg = render(kind, opts);
    fs.writeFileSync(opts.output, svg);
    console.log(`wrote ${opts.output}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
  process.exit(main(process.argv.slice(2)));
}
