"""Command-line front end.

Configuration is an INI document with one section per concern::

    [model]    kind (toy|parametric), a_x, a_y, u_max, delta_s, n_u,
               demand_file, soc_per_power, fuel_per_power,
               tank_capacity_l, fuel_price_eur_per_l
    [profile]  path, or count / distance_m / speed_mps; optional max_step_s
    [grid]     dx, dp, domain_lo, domain_hi
    [sets]     x0_center, x0_radius, k_lo, k_hi
    [synth]    tol
    [converge] dx_list
    [output]   dir

Relative paths resolve against the config file's directory. Command-line
flags override file values; ``--set section.key=value`` overrides anything.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from hybridreach.admissibility import is_admissible
from hybridreach.dp import ValueField, load_values, solve
from hybridreach.errors import (
    ConfigurationError,
    HybridReachError,
    NotReachableError,
    ReconstructionError,
    ValidationError,
)
from hybridreach.levelset import BallSet, BoxSet, StateGrid
from hybridreach.model import (
    EnergyState,
    EVOnly,
    HybridSystemModel,
    ParametricParams,
    ParametricVehicle,
    ToyModel,
    ToyModelParams,
)
from hybridreach.oracle import toy_autonomy
from hybridreach.profile import DrivingProfile, constant_profile, load_profile
from hybridreach.reach import autonomy, min_time_csv, range_report, reachable_csv
from hybridreach.synth import HybridPoint, synthesize

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_UNREACHABLE = 0, 1, 2, 3


@dataclass
class RunConfig:
    model: HybridSystemModel
    profile: DrivingProfile
    dx: float
    dp: Optional[float]
    domain_lo: tuple[float, float]
    domain_hi: tuple[float, float]
    x0_center: tuple[float, float]
    x0_radius: Optional[float]
    constraint: BoxSet
    output_dir: Path
    tank_capacity_l: float = 6.0
    fuel_price: float = 1.5
    toy_params: Optional[ToyModelParams] = None
    synth_tol: Optional[float] = None
    dx_list: tuple[float, ...] = field(default_factory=tuple)
    threads: int = 1

    def grid(self, dx: Optional[float] = None) -> StateGrid:
        return StateGrid.build(dx or self.dx, self.model.lag, self.dp, self.domain_lo, self.domain_hi)

    def initial(self, dx: Optional[float] = None) -> BallSet:
        # default radius keeps a whole grid cell inside the ball
        radius = self.x0_radius if self.x0_radius is not None else math.sqrt(2) * (dx or self.dx)
        return BallSet(self.x0_center, radius)


def _pair(text: str, key: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigurationError(f"{key}: expected two comma-separated numbers, got {text!r}")
    return (_num(parts[0], key), _num(parts[1], key))


def _num(text: str, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"{key}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{key}: must be finite")
    return value


def _file(base: Path, text: str, key: str) -> Path:
    path = Path(text)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigurationError(f"{key}: file not found: {path}")
    return path


def _load_demand(path: Path) -> dict[int, float]:
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows or [c.strip() for c in rows[0]] != ["k", "demand"]:
        raise ValidationError(f"{path}: expected header k,demand")
    table = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            table[int(row[0])] = float(row[1])
        except (ValueError, IndexError):
            raise ValidationError(f"{path}: line {lineno}: malformed row") from None
    return table


def load_config(path: Path, overrides: Sequence[str] = ()) -> RunConfig:
    """Parse and validate a run configuration.

    Raises:
        ConfigurationError: Missing file, missing key or invalid value.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path, encoding="utf-8")
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.partition(".")
        if not sep or not dot:
            raise ConfigurationError(f"override {item!r} is not section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value)
    base = path.parent

    def get(section: str, key: str, default: Optional[str] = None) -> Optional[str]:
        return parser.get(section, key, fallback=default)

    def need(section: str, key: str) -> str:
        value = get(section, key)
        if value is None:
            raise ConfigurationError(f"missing [{section}] {key}")
        return value

    # profile
    if get("profile", "path"):
        profile = load_profile(_file(base, need("profile", "path"), "profile.path"))
    else:
        profile = constant_profile(
            int(_num(need("profile", "count"), "profile.count")),
            _num(need("profile", "distance_m"), "profile.distance_m"),
            _num(need("profile", "speed_mps"), "profile.speed_mps"),
        )
    if get("profile", "max_step_s"):
        profile = profile.substepped(_num(need("profile", "max_step_s"), "profile.max_step_s"))

    # model
    kind = get("model", "kind", "toy")
    n_u = int(_num(get("model", "n_u", "8"), "model.n_u"))
    toy_params = None
    if kind == "toy":
        toy_params = ToyModelParams(
            _num(need("model", "a_x"), "model.a_x"),
            _num(need("model", "a_y"), "model.a_y"),
            _num(need("model", "u_max"), "model.u_max"),
            _num(need("model", "delta_s"), "model.delta_s"),
            n_u,
        )
        model: HybridSystemModel = ToyModel(toy_params)
    elif kind == "parametric":
        params = ParametricParams(
            _load_demand(_file(base, need("model", "demand_file"), "model.demand_file")),
            _num(need("model", "a_y"), "model.a_y"),
            _num(need("model", "u_max"), "model.u_max"),
            _num(need("model", "delta_s"), "model.delta_s"),
            n_u,
            _num(get("model", "soc_per_power", "1"), "model.soc_per_power"),
            _num(get("model", "fuel_per_power", "1"), "model.fuel_per_power"),
            _num(get("model", "tank_capacity_l", "6"), "model.tank_capacity_l"),
        )
        model = ParametricVehicle(params)
        model.check_profile(profile)
    else:
        raise ConfigurationError(f"model.kind must be toy or parametric, got {kind!r}")

    dx_list_text = get("converge", "dx_list")
    radius = get("sets", "x0_radius")
    tol = get("synth", "tol")
    out = Path(get("output", "dir", "out"))
    cfg = RunConfig(
        model=model,
        profile=profile,
        dx=_num(need("grid", "dx"), "grid.dx"),
        dp=_num(get("grid", "dp"), "grid.dp") if get("grid", "dp") else None,
        domain_lo=_pair(get("grid", "domain_lo", "-0.2, -0.2"), "grid.domain_lo"),
        domain_hi=_pair(get("grid", "domain_hi", "1.2, 1.2"), "grid.domain_hi"),
        x0_center=_pair(need("sets", "x0_center"), "sets.x0_center"),
        x0_radius=_num(radius, "sets.x0_radius") if radius else None,
        constraint=BoxSet(_pair(get("sets", "k_lo", "0, 0"), "sets.k_lo"), _pair(get("sets", "k_hi", "1, 1"), "sets.k_hi")),
        output_dir=out if out.is_absolute() else base / out,
        tank_capacity_l=_num(get("model", "tank_capacity_l", "6"), "model.tank_capacity_l"),
        fuel_price=_num(get("model", "fuel_price_eur_per_l", "1.5"), "model.fuel_price_eur_per_l"),
        toy_params=toy_params,
        synth_tol=_num(tol, "synth.tol") if tol else None,
        dx_list=tuple(_num(v, "converge.dx_list") for v in dx_list_text.split(",")) if dx_list_text else (),
    )
    cfg.grid()  # validate grid parameters eagerly
    return cfg


def _solve(cfg: RunConfig, model: Optional[HybridSystemModel] = None, dx: Optional[float] = None):
    return solve(
        model or cfg.model, cfg.profile, cfg.grid(dx), cfg.initial(dx), cfg.constraint, threads=cfg.threads
    )


def _out(cfg: RunConfig, name: str) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir / name


def cmd_solve(cfg: RunConfig, args: argparse.Namespace) -> int:
    field_, report = _solve(cfg)
    field_.dump(_out(cfg, "value_field.bin"))
    text = report.as_text()
    _out(cfg, "solve_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_autonomy(cfg: RunConfig, args: argparse.Namespace) -> int:
    field_, _ = _solve(cfg)
    ev_field, _ = _solve(cfg, EVOnly(cfg.model))
    aut = autonomy(field_)
    fuel_trace: list[float] = []
    initial = None
    if aut.stage != 0:
        _, traj = synthesize(field_, cfg.model, tol=cfg.synth_tol)
        fuel_trace = traj.fuel_trace()
        initial = traj.states[0]
    report = range_report(field_, ev_field, fuel_trace, cfg.tank_capacity_l, cfg.fuel_price, initial)
    text = report.as_text() + f"autonomy_time_s = {aut.time_s!r}\n"
    if cfg.toy_params is not None and cfg.toy_params.a_x > cfg.toy_params.u_max:
        exact = toy_autonomy(cfg.toy_params, *cfg.x0_center).autonomy_s
        text += f"analytic_autonomy_s = {exact!r}\nepsilon_s = {abs(aut.time_s - exact)!r}\n"
    _out(cfg, "range_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _parse_target(text: str) -> HybridPoint:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 5:
        raise ConfigurationError("--target expects stage,soc,fuel,q,p")
    return HybridPoint(int(parts[0]), EnergyState(_num(parts[1], "soc"), _num(parts[2], "fuel")), int(parts[3]), _num(parts[4], "p"))


def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    target = _parse_target(args.target) if args.target else None
    field_, _ = _solve(cfg)
    controller, traj = synthesize(field_, cfg.model, target, tol=cfg.synth_tol)
    traj.to_csv(_out(cfg, "trajectory.csv"))
    verdict = is_admissible(traj.profile, controller, cfg.model)
    nodes = ",".join(str(s.node) for s in controller.switches) or "none"
    final = traj.states[-1]
    sys.stdout.write(
        f"stages = {traj.stages}\n"
        f"switch_nodes = {nodes}\n"
        f"final_soc = {final.soc!r}\n"
        f"final_fuel = {final.fuel!r}\n"
        f"admissible = {'yes' if verdict else 'no: ' + verdict.message}\n"
    )
    return EXIT_OK if verdict else EXIT_INTERNAL


def cmd_converge(cfg: RunConfig, args: argparse.Namespace) -> int:
    if cfg.toy_params is None:
        raise ConfigurationError("converge needs model.kind = toy (closed-form autonomy)")
    dx_list = tuple(_num(v, "--dx-list") for v in args.dx_list.split(",")) if args.dx_list else cfg.dx_list
    if not dx_list:
        raise ConfigurationError("no dx list given ([converge] dx_list or --dx-list)")
    exact = toy_autonomy(cfg.toy_params, *cfg.x0_center).autonomy_s
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("dx", "first_empty_stage", "autonomy_s", "analytic_s", "epsilon_s", "wall_time_s"))
    previous = math.inf
    for dx in dx_list:
        start = time.perf_counter()
        field_, _ = _solve(cfg, dx=dx)
        wall = time.perf_counter() - start
        aut = autonomy(field_)
        eps = abs(aut.time_s - exact)
        if eps > previous:
            sys.stderr.write(f"warning: error grew from {previous:.4g} to {eps:.4g} at dx={dx}\n")
        previous = eps
        stage = "route_completed" if aut.stage is None else aut.stage
        writer.writerow((repr(dx), stage, repr(aut.time_s), repr(exact), repr(eps), f"{wall:.3f}"))
    _out(cfg, "convergence.csv").write_text(buf.getvalue(), encoding="utf-8")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_export(cfg: RunConfig, args: argparse.Namespace) -> int:
    if args.field:
        grid = cfg.grid()
        values = load_values(args.field)
        expected = (len(cfg.profile) + 1, *grid.dims())
        if values.shape != expected:
            raise ConfigurationError(f"{args.field}: shape {values.shape} does not match the config ({expected})")
        field_ = ValueField(values, grid, cfg.profile, cfg.model.lag, tuple(cfg.model.modes), constraint=cfg.constraint)
    else:
        field_, _ = _solve(cfg)
    min_time_csv(field_, _out(cfg, "min_time.csv"))
    for k in range(field_.stages + 1):
        reachable_csv(field_, k, _out(cfg, f"reachable_{k:03d}.csv"))
    sys.stdout.write(f"exported {field_.stages + 1} stages to {cfg.output_dir}\n")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "autonomy": cmd_autonomy,
    "synth": cmd_synth,
    "converge": cmd_converge,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridreach", description="Reachability and range analysis for range-extended EVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--dx", type=float)
        p.add_argument("--dp", type=float)
        p.add_argument("--profile", help="profile CSV path")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        if name == "synth":
            p.add_argument("--target", help="stage,soc,fuel,q,p")
        if name == "converge":
            p.add_argument("--dx-list", help="comma-separated grid steps")
        if name == "export":
            p.add_argument("--field", type=Path, help="value_field.bin from a previous solve")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.dx is not None:
        overrides.append(f"grid.dx={args.dx!r}")
    if args.dp is not None:
        overrides.append(f"grid.dp={args.dp!r}")
    if args.profile is not None:
        overrides.append(f"profile.path={Path(args.profile).resolve()}")
    try:
        cfg = load_config(args.config, overrides)
        if args.out is not None:
            cfg.output_dir = args.out
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        cfg.threads = args.threads
        return COMMANDS[args.command](cfg, args)
    except NotReachableError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_UNREACHABLE
    except ReconstructionError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INTERNAL
    except (HybridReachError, configparser.Error, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
