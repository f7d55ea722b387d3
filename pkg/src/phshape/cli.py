"""Command line experiment runner.

Every subcommand reads the same JSON experiment file::

    phshape run --config baseline.json --out results/
    phshape poles --config baseline.json --out results/
    phshape run --config baseline.json --out sweep/ --sweep shaping.beta=0,1e6,5e6

Failures exit with status 1 after printing one line
``error: <code>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .closed_loop import assemble_dynamic
from .discretize import DiscretePlant, discretize
from .errors import ConfigurationError, ParseError, PHShapeError
from .experiment import run_closed_loop
from .integrator import InitialCondition, SimConfig, settle_time
from .model import string_plant
from .shaping import Controller, design_controller
from .spectrum import leaf_poles, stability_margin


@dataclass
class PlantParams:
    length: float = 2.0
    tension: float = 1.4e6
    density: float = 1.225
    damping: float = 1e-3


@dataclass
class DiscretizationParams:
    p: int = 50
    gamma: float = 0.5
    dt: float = 5e-5
    t_final: float = 3e-2


@dataclass
class ActuationParams:
    mode: str = "full"
    m: int | None = None


@dataclass
class ShapingParams:
    alpha: float = 4000.0
    beta: float | None = 5e6
    Qm: list | None = None


@dataclass
class InitialParams:
    mu: float = 1.5
    sigma2: float = 0.113
    amplitude: float = 1.0


@dataclass
class OutputParams:
    directory: str = "out"
    stride: int = 10
    band_fraction: float = 0.02


@dataclass
class ExperimentConfig:
    plant: PlantParams = field(default_factory=PlantParams)
    discretization: DiscretizationParams = field(default_factory=DiscretizationParams)
    actuation: ActuationParams = field(default_factory=ActuationParams)
    shaping: ShapingParams = field(default_factory=ShapingParams)
    initial_condition: InitialParams = field(default_factory=InitialParams)
    outputs: OutputParams = field(default_factory=OutputParams)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def m(self) -> int:
        return self.actuation.m if self.actuation.m is not None else self.discretization.p

    def sim_config(self, stride=None) -> SimConfig:
        d = self.discretization
        return SimConfig(dt=d.dt, t_final=d.t_final,
                         record_stride=stride or self.outputs.stride)


_SECTIONS = {
    "plant": PlantParams,
    "discretization": DiscretizationParams,
    "actuation": ActuationParams,
    "shaping": ShapingParams,
    "initial_condition": InitialParams,
    "outputs": OutputParams,
}


def _positive(errors, where, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        errors.append(f"{where} must be a positive number, got {value!r}")


def validate_config(raw) -> ExperimentConfig:
    """Parse and check an experiment document.

    ``raw`` may be a dict, a JSON string or a path. All problems are
    collected and raised together as a ``ConfigurationError`` whose
    ``errors`` attribute lists them.
    """
    if isinstance(raw, Path) or (isinstance(raw, str) and not raw.lstrip().startswith("{")):
        raw = Path(raw).read_text()
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError("experiment document must be a JSON object")

    errors = []
    sections = {}
    for key in raw:
        if key not in _SECTIONS:
            errors.append(f"unknown section {key!r}")
    for name, cls in _SECTIONS.items():
        body = raw.get(name, {})
        if not isinstance(body, dict):
            errors.append(f"{name} must be an object")
            body = {}
        if name == "shaping" and "Qm" in body and "beta" not in body:
            body = dict(body, beta=None)
        known = cls.__dataclass_fields__
        unknown = [k for k in body if k not in known]
        errors += [f"unknown field {name}.{k}" for k in unknown]
        sections[name] = cls(**{k: v for k, v in body.items() if k in known})
    cfg = ExperimentConfig(**sections)

    pl, d, a, s, ic, out = (cfg.plant, cfg.discretization, cfg.actuation, cfg.shaping,
                            cfg.initial_condition, cfg.outputs)
    for k in ("length", "tension", "density", "damping"):
        _positive(errors, f"plant.{k}", getattr(pl, k))
    for k in ("dt", "t_final"):
        _positive(errors, f"discretization.{k}", getattr(d, k))
    if not isinstance(d.p, int) or isinstance(d.p, bool) or d.p < 1:
        errors.append(f"discretization.p must be a positive integer, got {d.p!r}")
    if not (isinstance(d.gamma, (int, float)) and 0 < d.gamma < 1):
        errors.append(f"discretization.gamma must lie in (0, 1), got {d.gamma!r}")
    if (isinstance(d.dt, (int, float)) and isinstance(d.t_final, (int, float))
            and d.dt > 0 and d.t_final > 0 and d.dt > d.t_final):
        errors.append("discretization.dt must not exceed t_final")
    if a.mode not in ("full", "patches"):
        errors.append(f"actuation.mode must be 'full' or 'patches', got {a.mode!r}")
    p_ok = isinstance(d.p, int) and d.p >= 1
    if a.m is not None and (not isinstance(a.m, int) or isinstance(a.m, bool) or a.m < 1):
        errors.append(f"actuation.m must be a positive integer, got {a.m!r}")
    elif p_ok:
        if a.mode == "full":
            if a.m is not None and a.m != d.p:
                errors.append("actuation.mode 'full' requires m = p")
        elif a.m is None:
            errors.append("actuation.m is required for mode 'patches'")
        elif d.p % a.m:
            errors.append(f"m must divide p (p = {d.p}, m = {a.m})")
    if not isinstance(s.alpha, (int, float)) or s.alpha < 0:
        errors.append(f"shaping.alpha must be nonnegative, got {s.alpha!r}")
    if (s.beta is None) == (s.Qm is None):
        errors.append("give exactly one of shaping.beta or shaping.Qm")
    elif s.beta is not None and (not isinstance(s.beta, (int, float)) or s.beta < 0):
        errors.append(f"shaping.beta must be nonnegative, got {s.beta!r}")
    elif s.Qm is not None and p_ok and np.shape(s.Qm) != (d.p, d.p):
        errors.append(f"shaping.Qm must be {d.p}x{d.p}")
    _positive(errors, "initial_condition.sigma2", ic.sigma2)
    if not isinstance(out.stride, int) or out.stride < 1:
        errors.append(f"outputs.stride must be a positive integer, got {out.stride!r}")
    if not (isinstance(out.band_fraction, (int, float)) and 0 < out.band_fraction < 1):
        errors.append("outputs.band_fraction must lie in (0, 1)")

    if errors:
        exc = ConfigurationError("; ".join(errors))
        exc.errors = errors
        raise exc
    return cfg


def build_plant(cfg: ExperimentConfig) -> DiscretePlant:
    pl = cfg.plant
    cont = string_plant(pl.length, pl.tension, pl.density, pl.damping)
    return discretize(cont, cfg.discretization.p, cfg.discretization.gamma)


def build_controller(cfg: ExperimentConfig, plant: DiscretePlant) -> Controller:
    s = cfg.shaping
    Qm = None if s.Qm is None else np.asarray(s.Qm, dtype=float)
    return design_controller(plant, cfg.m, s.alpha, beta=s.beta, Qm=Qm)


def _meta(cfg):
    return {"p": cfg.discretization.p, "m": cfg.m, "alpha": cfg.shaping.alpha,
            "beta": cfg.shaping.beta, "gamma": cfg.discretization.gamma}


def run_pipeline(cfg: ExperimentConfig, out=None, stride=None) -> dict:
    """Discretize, design, simulate and analyze; write all artifacts to ``out``."""
    out = Path(out or cfg.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    plant = build_plant(cfg)
    ctrl = build_controller(cfg, plant)
    ic = InitialCondition("gaussian", cfg.initial_condition.mu, cfg.initial_condition.sigma2,
                          cfg.initial_condition.amplitude)
    res = run_closed_loop(plant, ctrl, ic, cfg.sim_config(stride))
    traj = res.trajectory
    ps = leaf_poles(res.loop, _meta(cfg))
    st = settle_time(traj.times, traj.endpoint, cfg.outputs.band_fraction)

    (out / "plant.json").write_text(plant.to_json())
    (out / "controller.json").write_text(ctrl.to_json())
    traj.to_csv(out / "trajectory.csv")
    ps.write(out / "poles.csv")
    report = {
        "settle_time": st.seconds,
        "settled": st.settled,
        "final_H": float(traj.hamiltonian[-1]),
        "initial_H": float(traj.hamiltonian[0]),
        "casimir_drift": traj.casimir_drift(),
        "stability_margin": stability_margin(ps),
        "residual": float(ctrl.residual),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigurationError(f"--sweep expects param=v1,v2,..., got {text!r}")
    name, values = text.split("=", 1)
    parsed = []
    for v in values.split(","):
        try:
            parsed.append(json.loads(v))
        except json.JSONDecodeError:
            parsed.append(v)
    return name.strip(), parsed


def _stage(args, cfg: ExperimentConfig, out: Path):
    if args.command == "validate":
        print(cfg.to_json())
        return
    out.mkdir(parents=True, exist_ok=True)
    plant = build_plant(cfg)
    if args.command == "discretize":
        (out / "plant.json").write_text(plant.to_json())
        return
    ctrl = build_controller(cfg, plant)
    if args.command == "design":
        (out / "controller.json").write_text(ctrl.to_json())
        return
    if args.command == "poles":
        leaf_poles(assemble_dynamic(plant, ctrl), _meta(cfg)).write(out / "poles.csv")
        return
    ic = InitialCondition("gaussian", cfg.initial_condition.mu, cfg.initial_condition.sigma2,
                          cfg.initial_condition.amplitude)
    if args.command == "simulate":
        res = run_closed_loop(plant, ctrl, ic, cfg.sim_config(args.stride))
        res.trajectory.to_csv(out / "trajectory.csv")
        return
    report = run_pipeline(cfg, out, args.stride)
    print(json.dumps(report, sort_keys=True))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="phshape", description=__doc__.splitlines()[0])
    parser.add_argument("command",
                        choices=["discretize", "design", "simulate", "poles", "run", "validate"])
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--out", help="output directory (default: outputs.directory)")
    parser.add_argument("--sweep", help="param=v1,v2,... fanned out over worker threads")
    parser.add_argument("--stride", type=int, help="record every N-th time step")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
        raw = json.loads(text)
    except OSError as exc:
        print(f"error: input-error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: parse-error: {args.config} line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 1

    try:
        if args.sweep:
            name, values = _parse_sweep(args.sweep)
            jobs = []
            for v in values:
                doc = copy.deepcopy(raw)
                _set_path(doc, name, v)
                cfg = validate_config(doc)
                base = Path(args.out or cfg.outputs.directory)
                jobs.append((cfg, base / f"{name}={v}"))
            with ThreadPoolExecutor() as pool:
                list(pool.map(lambda job: _stage(args, *job), jobs))
        else:
            cfg = validate_config(raw)
            _stage(args, cfg, Path(args.out or cfg.outputs.directory))
    except PHShapeError as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {exc.code}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
