"""Simulation configuration: dataclass, TOML parsing with validation, and
echo of the effective (post-default) configuration."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .problems import PRESETS, make_problem


class ConfigError(ValueError):
    pass


_SCHEME_ORDERS = {"ec": (2, 4, 6), "es": (1, 3, 5)}


@dataclass
class OutputPlan:
    directory: str = "out"
    times: tuple = ()
    formats: tuple = ("csv",)          # vtk | binary | csv
    fields: tuple = ("rho", "p", "v", "B", "J", "omega")
    cuts: tuple = ()                   # "diagonal" | "iline:<j>" | "jline:<i>"
    schlieren: tuple = ()              # dicts: {"var": ..., "k": ...}


@dataclass
class SimulationConfig:
    problem: str
    N: tuple
    scheme: str = "es"
    order: int = 5
    mesh_mode: str = "adaptive"        # uniform | prescribed | adaptive
    cfl: float = None
    dt_rule: str = "cfl"               # cfl | dx2 | dx53
    t_final: float = None
    gamma: float = None
    monitor: dict = field(default_factory=dict)
    output: OutputPlan = field(default_factory=OutputPlan)
    r_kind: str = "cholesky"
    rmhd_bound: str = "light"
    weno_nonlinear: bool = True
    threads: int = 0

    @property
    def p(self):
        if self.scheme == "ec":
            return self.order // 2
        return (self.order + 1) // 2

    def validate(self, d):
        if self.scheme not in _SCHEME_ORDERS:
            raise ConfigError(f"unknown scheme '{self.scheme}'")
        if self.order not in _SCHEME_ORDERS[self.scheme]:
            raise ConfigError(
                f"order {self.order} invalid for scheme '{self.scheme}' "
                f"(allowed: {_SCHEME_ORDERS[self.scheme]})")
        if self.mesh_mode not in ("uniform", "prescribed", "adaptive"):
            raise ConfigError(f"unknown mesh mode '{self.mesh_mode}'")
        if self.cfl is None:
            self.cfl = 0.4 if d <= 2 else 0.3
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"CFL {self.cfl} outside (0, 1]")
        if self.dt_rule not in ("cfl", "dx2", "dx53"):
            raise ConfigError(f"unknown dt rule '{self.dt_rule}'")
        if len(self.N) != d:
            raise ConfigError(f"N has {len(self.N)} entries, problem is {d}D")
        if self.output.times and self.t_final is not None:
            ts = list(self.output.times)
            if ts != sorted(ts) or ts[0] < 0 or ts[-1] > self.t_final + 1e-12:
                raise ConfigError("output times must be sorted within "
                                  "[0, t_final]")
        return self


_KNOWN = {
    "problem": {"id", "N", "gamma", "t_final"},
    "scheme": {"flavor", "order", "cfl", "dt_rule", "r_kind", "rmhd_bound",
               "weno_nonlinear"},
    "mesh": {"mode"},
    "monitor": {"alpha", "sigma", "lap_weight", "passes", "jacobi_iters",
                "stride", "initial_cycles"},
    "output": {"directory", "times", "formats", "fields", "cuts",
               "schlieren"},
}


def parse_config(path):
    """Parse and validate a TOML config; returns (SimulationConfig, setup)."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for section, keys in doc.items():
        if section not in _KNOWN:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(keys) - _KNOWN[section]
        if unknown:
            raise ConfigError(
                f"{path}: unknown key(s) {sorted(unknown)} in [{section}]")
    prob = doc.get("problem", {})
    pid = prob.get("id")
    if pid not in PRESETS:
        raise ConfigError(f"{path}: [problem].id must be one of {PRESETS}")
    setup = make_problem(pid)
    scheme = doc.get("scheme", {})
    if "order" not in scheme:
        raise ConfigError(f"{path}: missing [scheme].order")
    N = tuple(prob.get("N", setup.default_N))
    mon = dict(setup.monitor)
    mon.update(doc.get("monitor", {}))
    out = doc.get("output", {})
    plan = OutputPlan(
        directory=out.get("directory", "out"),
        times=tuple(out.get("times", ())),
        formats=tuple(out.get("formats", ("csv",))),
        fields=tuple(out.get("fields", ("rho", "p", "v", "B", "J", "omega"))),
        cuts=tuple(out.get("cuts", ())),
        schlieren=tuple(out.get("schlieren", ())),
    )
    cfg = SimulationConfig(
        problem=pid,
        N=N,
        scheme=scheme.get("flavor", "es"),
        order=int(scheme["order"]),
        mesh_mode=doc.get("mesh", {}).get("mode", "adaptive"),
        cfl=scheme.get("cfl"),
        dt_rule=scheme.get("dt_rule", "cfl"),
        t_final=prob.get("t_final", setup.t_final),
        gamma=prob.get("gamma"),
        monitor=mon,
        output=plan,
        r_kind=scheme.get("r_kind", "cholesky"),
        rmhd_bound=scheme.get("rmhd_bound", "light"),
        weno_nonlinear=bool(scheme.get("weno_nonlinear", True)),
    )
    if cfg.t_final is None:
        cfg.t_final = setup.t_final
    cfg.validate(setup.d)
    return cfg, setup


def echo_config(cfg: SimulationConfig, setup):
    """Serialize the effective configuration back to TOML text."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, str):
            return f'"{v}"'
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        raise TypeError(type(v))

    lines = ["[problem]",
             f'id = "{cfg.problem}"',
             f"N = {fmt(list(cfg.N))}",
             f"gamma = {fmt(cfg.gamma if cfg.gamma is not None else setup.gamma)}",
             f"t_final = {fmt(cfg.t_final)}",
             "",
             "[scheme]",
             f'flavor = "{cfg.scheme}"',
             f"order = {cfg.order}",
             f"cfl = {fmt(cfg.cfl)}",
             f'dt_rule = "{cfg.dt_rule}"',
             f'r_kind = "{cfg.r_kind}"',
             f'rmhd_bound = "{cfg.rmhd_bound}"',
             f"weno_nonlinear = {fmt(cfg.weno_nonlinear)}",
             "",
             "[mesh]",
             f'mode = "{cfg.mesh_mode}"',
             "",
             "[monitor]"]
    for k, v in sorted(cfg.monitor.items()):
        lines.append(f"{k} = {fmt(v)}")
    lines += ["", "[output]",
              f'directory = "{cfg.output.directory}"',
              f"times = {fmt(list(cfg.output.times))}",
              f"formats = {fmt(list(cfg.output.formats))}",
              f"fields = {fmt(list(cfg.output.fields))}",
              f"cuts = {fmt(list(cfg.output.cuts))}"]
    return "\n".join(lines) + "\n"
