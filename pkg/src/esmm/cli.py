"""Command-line interface.

Subcommands:
  solve    --config cfg.toml [--threads N] [--override key=val ...]
  converge --problem id --scheme ec|es --order n --N a,b,c [...]
  check    (fast property suite: EC contract, SCL residual, free-stream)

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys


def _set_threads(n):
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _apply_override(cfg, key, val):
    import json
    target = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        target = getattr(target, part)
    name = parts[-1]
    if isinstance(target, dict):
        old = target.get(name)
    else:
        old = getattr(target, name)
    try:
        parsed = json.loads(val)
    except json.JSONDecodeError:
        parsed = val
    if isinstance(old, tuple) and isinstance(parsed, list):
        parsed = tuple(parsed)
    if isinstance(target, dict):
        target[name] = parsed
    else:
        setattr(target, name, parsed)


def cmd_solve(args):
    from .config import ConfigError, echo_config, parse_config
    from .output import emit_snapshot, write_series_csv
    from .solver import Simulation, StepFailure

    try:
        cfg, setup = parse_config(args.config)
        for ov in args.override or ():
            key, _, val = ov.partition("=")
            if not val:
                raise ConfigError(f"bad override '{ov}' (expected key=val)")
            _apply_override(cfg, key, val)
        cfg.validate(setup.d)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outdir = cfg.output.directory
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "effective_config.toml"), "w") as fh:
        fh.write(echo_config(cfg, setup))
    sim = Simulation(setup, cfg)

    def on_output(sim_, snap):
        tag = f"{cfg.problem}_t{snap['t']:.6g}"
        emit_snapshot(outdir, tag, snap, cfg.output, sim_.dxi)

    try:
        art = sim.run(output_times=cfg.output.times, on_output=on_output)
    except StepFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        from .output import write_binary, snapshot_fields
        snap = sim.snapshot()
        write_binary(os.path.join(outdir, "failure_dump.esmm"), snap["x"],
                     snapshot_fields(snap, ("rho", "p", "v", "B", "J")))
        write_series_csv(os.path.join(outdir, "series.csv"), sim.series)
        return 3
    final = art.snapshots[-1]
    emit_snapshot(outdir, f"{cfg.problem}_final", final, cfg.output, sim.dxi)
    write_series_csv(os.path.join(outdir, "series.csv"), sim.series)
    print(f"{cfg.problem}: {art.nsteps} steps to t={sim.t:.6g} "
          f"in {art.walltime:.1f}s; outputs in {outdir}/")
    return 0


def cmd_converge(args):
    from .config import ConfigError, SimulationConfig
    from .output import write_convergence_csv
    from .problems import make_problem
    from .solver import StepFailure, convergence_study

    try:
        N_list = [int(t) for t in args.N.split(",")]
        base = make_problem(args.problem)
        if base.exact is None:
            raise ConfigError(f"problem '{args.problem}' has no exact solution")
        d = base.d

        def setup_factory(N):
            return make_problem(args.problem)

        def cfg_factory(N):
            shape = tuple(N * (n // min(base.default_N))
                          for n in base.default_N) if args.anisotropic \
                else (N,) * d
            cfg = SimulationConfig(
                args.problem, shape, scheme=args.scheme, order=args.order,
                mesh_mode=args.mesh_mode,
                dt_rule=args.dt_rule, cfl=args.cfl,
                t_final=args.t_final)
            return cfg.validate(d)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        rows, slope = convergence_study(setup_factory, cfg_factory, N_list)
    except StepFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    write_convergence_csv(args.out, rows)
    print(f"N      L1           order    Linf         order")
    for r in rows:
        print(f"{r['N']:<6d} {r['L1']:.4e}  {r['order_L1']:6.3f}  "
              f"{r['Linf']:.4e}  {r['order_Linf']:6.3f}")
    print(f"least-squares L1 slope: {slope:.3f}; table written to {args.out}")
    return 0


def cmd_check(args):
    from .selfcheck import run_all
    results = run_all(verbose=True)
    return 0 if all(r[3] for r in results) else 3


def build_parser():
    ap = argparse.ArgumentParser(prog="esmm", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("solve", help="run a configured simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--threads", type=int, default=0)
    s.add_argument("--override", action="append", metavar="key=val")
    s.set_defaults(func=cmd_solve)
    c = sub.add_parser("converge", help="vortex convergence study")
    c.add_argument("--problem", required=True)
    c.add_argument("--scheme", choices=("ec", "es"), required=True)
    c.add_argument("--order", type=int, required=True)
    c.add_argument("--N", required=True, help="comma-separated grid sizes")
    c.add_argument("--mesh-mode", default="prescribed",
                   choices=("uniform", "prescribed", "adaptive"))
    c.add_argument("--dt-rule", default="cfl", choices=("cfl", "dx2", "dx53"))
    c.add_argument("--cfl", type=float, default=None)
    c.add_argument("--t-final", type=float, default=None)
    c.add_argument("--anisotropic", action="store_true",
                   help="scale the preset's anisotropic default shape")
    c.add_argument("--out", default="convergence.csv")
    c.add_argument("--threads", type=int, default=0)
    c.set_defaults(func=cmd_converge)
    k = sub.add_parser("check", help="fast property-test suite")
    k.add_argument("--threads", type=int, default=0)
    k.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    _set_threads(getattr(args, "threads", 0)
                 or int(os.environ.get("ESMM_THREADS", 0) or 0))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
