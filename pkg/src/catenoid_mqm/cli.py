"""Command-line front end: simulate, sweep, potential, init-moments, verify."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .catenoid import (
    MOMENT_ORDER,
    MomentState,
    PhasePoint,
    SystemParams,
    classical_potential,
    classical_transmission_threshold,
    effective_potential,
)
from .dynamics import (
    RHS_SOURCES,
    IntegrationError,
    Trajectory,
    classify,
    conserved_report,
    default_horizon,
    hamiltonian_value,
    integrate,
    run_and_classify,
    turning_points,
    verdict_flip,
)
from .initial_states import (
    MEASURES,
    LISTED_MOMENTS,
    GaussianPacket,
    QuadratureError,
    initial_moments,
    select_measure,
)
from . import verify as verify_mod

log = logging.getLogger("catenoid_mqm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

CSV_COLUMNS = ("t", "theta", "theta_unwound", "p_theta", "z", "p_z",
               *(i.label() for i in MOMENT_ORDER), "H_Q", "U_theta", "U_z")
SWEEP_COLUMNS = ("a", "p_z0", "verdict", "crossing_time", "turning_time", "min_z", "max_excursion",
                 "t_end", "drift_H", "drift_p_theta", "drift_G0200", "min_U_theta", "min_U_z", "note")
FRAME_COLUMNS = ("frame", "t", "a", "theta_unwound", "z", "p_z", "H_Q")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    hbar: float = 1.0
    mass: float = 1.0
    R: float = 0.5
    # initial classical point; p_z = -a unless pz is given
    theta0: float = 0.0
    p_theta: float = 1.0
    z0: float = 1.0
    a: float = 1.0
    pz: float | None = None
    # moments: "listed" uses the reference initial values, "packet" integrates the packet
    moments: str = "listed"
    lam: float = 10.0
    sigma_z: float = math.sqrt(0.1)
    measure: str = "auto"
    classical: bool = False
    reproduce_paper: bool = False
    rhs: str | None = None
    T: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    sample_dt: float = 1e-3
    z_far: float | None = None
    out: str | None = None
    seed: int = 0
    points: int = 1000
    a_min: float = 0.0
    a_max: float = 9.0
    a_steps: int = 10
    frame_dt: float = 0.01
    workers: int = 1
    z_min: float = -3.0
    z_max: float = 3.0
    samples: int = 601
    at_time: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "mass", "R", "lam", "sigma_z", "abs_tol", "rel_tol", "sample_dt", "frame_dt"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.moments not in ("listed", "packet"):
            raise ConfigError("moments must be 'listed' or 'packet'")
        if self.measure != "auto" and self.measure not in MEASURES:
            raise ConfigError(f"measure must be auto or one of {sorted(MEASURES)}")
        if self.rhs is not None and self.rhs not in RHS_SOURCES:
            raise ConfigError(f"rhs must be one of {RHS_SOURCES}")
        if self.a_steps < 1 or self.a_max < self.a_min:
            raise ConfigError("sweep grid is empty")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.at_time < 0:
            raise ConfigError("at_time must be >= 0")

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.hbar, self.mass, self.R)

    @property
    def rhs_source(self) -> str:
        if self.rhs:
            return self.rhs
        return "transcribed" if self.reproduce_paper else "generated"

    @property
    def p_z0(self) -> float:
        return -self.a if self.pz is None else self.pz

    def grid(self) -> list[float]:
        if self.a_steps == 1:
            return [self.a_min]
        return [float(x) for x in np.linspace(self.a_min, self.a_max, self.a_steps)]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if raw.lower() in ("none", "") and "None" in kind:
        return None
    try:
        if kind.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def read_config_file(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = read_config_file(args.config) if args.config else {}
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values)


# --- initial data ------------------------------------------------------------------


def _packet(cfg: RunConfig, centre: float | None = None) -> GaussianPacket:
    z0 = cfg.z0 if centre is None else centre
    return GaussianPacket(cfg.theta0, z0, cfg.lam, cfg.sigma_z, l=cfg.p_z0 / cfg.hbar,
                          m_w=cfg.p_theta / cfg.hbar)


def initial_record(cfg: RunConfig) -> tuple[dict, dict]:
    """Moments for the run plus metadata describing where they came from."""
    if cfg.classical:
        return {i: 0.0 for i in MOMENT_ORDER}, {"moments": "none (classical run)"}
    if cfg.moments == "listed":
        vals = {i: LISTED_MOMENTS.get(tuple(i), 0.0) for i in MOMENT_ORDER}
        return vals, {"moments": "listed initial values"}
    packet = _packet(cfg)
    if cfg.measure == "auto":
        best, rows = select_measure(packet, cfg.params)
        measure, centre = best["measure"], best["z0"]
    else:
        measure, centre, rows = cfg.measure, cfg.z0, None
    vals = initial_moments(_packet(cfg, centre), cfg.params, measure)
    meta = {"moments": "packet", "measure": measure, "quadrature_centre": centre}
    if rows is not None:
        meta["measure_residuals"] = rows
    return vals, meta


def initial_state(cfg: RunConfig) -> tuple[MomentState, dict]:
    vals, meta = initial_record(cfg)
    point = PhasePoint(cfg.theta0, cfg.p_theta, cfg.z0, cfg.p_z0)
    return MomentState.from_moments(point, vals), meta


# --- output helpers -------------------------------------------------------------------


def format_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        wrapped = traj.theta
        for k in range(len(traj.t)):
            y = traj.y[k]
            w.writerow([format_float(traj.t[k]), format_float(wrapped[k]), format_float(y[0]), format_float(y[1]), format_float(y[2]), format_float(y[3]),
                        *(format_float(v) for v in y[4:14]), format_float(traj.H_Q[k]), format_float(traj.U_theta[k]),
                        format_float(traj.U_z[k])])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(getattr(k, "label", lambda: k)()): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def write_json(path: Path, record: dict) -> None:
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


# --- commands -------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    state0, meta = initial_state(cfg)
    params = cfg.params
    T = cfg.T if cfg.T is not None else default_horizon(state0, params)
    traj = integrate(state0, params, T, cfg.rhs_source, cfg.abs_tol, cfg.rel_tol,
                     cfg.sample_dt, cfg.z_far)
    verdict = classify(traj, cfg.z_far)
    drift = conserved_report(traj)
    out = Path(cfg.out or "trajectory.csv")
    write_trajectory_csv(out, traj)
    summary = {
        "rhs": cfg.rhs_source,
        "T": T,
        "initial": {"theta": cfg.theta0, "p_theta": cfg.p_theta, "z": cfg.z0, "p_z": cfg.p_z0},
        "initial_meta": meta,
        "classification": asdict(verdict),
        "turning_points": len(turning_points(traj)),
        "drift": drift.as_dict(),
        "classical_threshold": classical_transmission_threshold(cfg.z0, cfg.p_theta, params),
        "n_steps": traj.metadata["n_steps"],
        "tolerances": [cfg.abs_tol, cfg.rel_tol],
    }
    msg = f"{verdict.verdict} (rhs={cfg.rhs_source}, T={T:.6g}, min_z={verdict.min_z:.6g})"
    if verdict.verdict == "Undetermined":
        # keep going past T so the summary also says where the run was heading
        horizon = max(T, default_horizon(state0, params))
        ext = run_and_classify(state0, params, horizon, cfg.rhs_source, cfg.abs_tol, cfg.rel_tol,
                               cfg.sample_dt, cfg.z_far).classification
        summary["continued_classification"] = {**asdict(ext), "horizon": horizon}
        msg += f"; continued to t<={horizon:.6g}: {ext.verdict}"
    write_json(out.with_suffix(".json"), summary)
    print(msg)
    return EXIT_OK


def _sweep_point(args):
    cfg, a = args
    cfg = replace(cfg, a=a, pz=None)
    state0, _ = initial_state(cfg)
    res = run_and_classify(state0, cfg.params, cfg.T, cfg.rhs_source, cfg.abs_tol, cfg.rel_tol,
                           cfg.sample_dt, cfg.z_far)
    c, traj = res.classification, res.trajectory
    row = {"a": a, "p_z0": cfg.p_z0, "verdict": c.verdict, "crossing_time": c.crossing_time,
           "turning_time": c.turning_time, "min_z": c.min_z, "max_excursion": c.max_excursion,
           "note": c.note}
    frames = []
    if traj is not None:
        d = conserved_report(traj)
        row.update(t_end=traj.t_end, drift_H=d.drift_H, drift_p_theta=d.drift_p_theta,
                   drift_G0200=d.drift_G0200, min_U_theta=d.min_U_theta, min_U_z=d.min_U_z)
        n = int(math.floor(traj.t_end / cfg.frame_dt + 1e-9))
        for k in range(n + 1):
            t = k * cfg.frame_dt
            y = traj.y[0] if k == 0 else traj.dense(t)
            frames.append((k, t, a, y[0], y[2], y[3], hamiltonian_value(y, cfg.params, cfg.rhs_source)))
    return row, frames


def cmd_sweep(cfg: RunConfig) -> int:
    grid = cfg.grid()
    jobs = [(cfg, a) for a in grid]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))  # map keeps grid order
    else:
        results = [_sweep_point(j) for j in jobs]
    out = Path(cfg.out or "sweep.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row, _ in results:
            w.writerow([format_float(row.get(c)) for c in SWEEP_COLUMNS])
    frame_path = out.with_name(out.stem + "_frames.csv")
    with open(frame_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAME_COLUMNS)
        rows = sorted((fr for _, frames in results for fr in frames), key=lambda r: (r[0], grid.index(r[2])))
        for fr in rows:
            w.writerow([fr[0], *(format_float(v) for v in fr[1:])])
    for row, _ in results:
        print(f"a={row['a']:.6g} {row['verdict']}" + (f" ({row['note']})" if row["note"] else ""))
    flip = verdict_flip(grid, [row["verdict"] for row, _ in results])
    if flip.after is None:
        print(f"no verdict change on the grid (all {flip.before})")
    else:
        print(f"a* in ({flip.last_before:.6g}, {flip.first_after:.6g}): {flip.before} -> {flip.after}"
              + ("" if flip.monotone else " (not monotone)"))
    return EXIT_OK


def potential_table(cfg: RunConfig) -> np.ndarray:
    state0, _ = initial_state(cfg)
    params = cfg.params
    source = "generated" if cfg.rhs_source == "generated" else "transcribed"
    if cfg.at_time > 0:
        traj = integrate(state0, params, cfg.at_time, cfg.rhs_source, cfg.abs_tol, cfg.rel_tol,
                         cfg.sample_dt)
        state_t = traj.state_at(cfg.at_time)
    else:
        state_t = state0
    z = np.linspace(cfg.z_min, cfg.z_max, cfg.samples)
    v_class = classical_potential(z, state0, params, source)
    v_eff = effective_potential(z, state_t, params, source)
    return np.column_stack([z, v_class, v_eff])


def cmd_potential(cfg: RunConfig) -> int:
    table = potential_table(cfg)
    out = Path(cfg.out or "potential.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("z", "V_class", "V_eff"))
        for row in table:
            w.writerow([format_float(v) for v in row])
    print(f"wrote {len(table)} rows to {out}")
    return EXIT_OK


def init_moments_record(cfg: RunConfig) -> dict:
    cfg = replace(cfg, moments="packet", classical=False)
    state, meta = initial_state(cfg)
    p = state.point
    values = {"theta": p.theta, "p_theta": p.p_theta, "z": p.z, "p_z": p.p_z}
    values.update({i.label(): v for i, v in state.moments().items()})
    return {"values": values, "lam": cfg.lam, "sigma_z": cfg.sigma_z, "R": cfg.R, **meta}


def cmd_init_moments(cfg: RunConfig) -> int:
    text = json.dumps(_jsonable(init_moments_record(cfg)), indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    checks = verify_mod.run_all(cfg.params, cfg.seed, cfg.points)
    report = verify_mod.format_report(checks)
    Path(cfg.out or "verify_report.txt").write_text(report)
    sys.stdout.write(report)
    ok = all(c.passed for c in checks if c.normative)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "potential": cmd_potential,
    "init-moments": cmd_init_moments,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--out", help="output path")
    g.add_argument("--rhs", choices=RHS_SOURCES, help="equations of motion")
    g.add_argument("--seed", type=int)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--hbar", type=float)
    g.add_argument("--mass", type=float)
    g.add_argument("--R", type=float)
    g.add_argument("--a", type=float, help="initial p_z = -a")
    g.add_argument("--pz", type=float, help="initial p_z (overrides --a)")
    g.add_argument("--p-theta", dest="p_theta", type=float)
    g.add_argument("--z0", type=float)
    g.add_argument("--theta0", type=float)
    g.add_argument("--moments", choices=("listed", "packet"))
    g.add_argument("--lam", type=float)
    g.add_argument("--sigma-z", dest="sigma_z", type=float)
    g.add_argument("--measure", choices=("auto", *MEASURES))
    g.add_argument("--classical", action="store_const", const=True, help="zero moment block")
    g.add_argument("--reproduce-paper", dest="reproduce_paper", action="store_const", const=True,
                   help="default to the transcribed equations")
    g.add_argument("--T", type=float, help="integration horizon")
    g.add_argument("--sample-dt", dest="sample_dt", type=float)
    g.add_argument("--z-far", dest="z_far", type=float)
    g.add_argument("--points", type=int, help="random points for canonical checks")
    g.add_argument("--a-min", dest="a_min", type=float)
    g.add_argument("--a-max", dest="a_max", type=float)
    g.add_argument("--a-steps", dest="a_steps", type=int)
    g.add_argument("--frame-dt", dest="frame_dt", type=float)
    g.add_argument("--workers", type=int)
    g.add_argument("--z-min", dest="z_min", type=float)
    g.add_argument("--z-max", dest="z_max", type=float)
    g.add_argument("--samples", type=int)
    g.add_argument("--at-time", dest="at_time", type=float)

    parser = argparse.ArgumentParser(prog="catenoid-mqm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except (IntegrationError, QuadratureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
