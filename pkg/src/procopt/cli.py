"""Batch experiment runner: propagations, optimizations, cross-evaluations.

Configuration is a single INI-style file with ``key = value`` sections::

    [run]
    scenario = optimize            ; informational; the CLI verb decides
    output_dir = out               ; overridden by $PROCOPT_OUTPUT_DIR

    [model]
    preset = lambda-rb87-default
    ; optional overrides: delta_p, delta_s, gamma_1, gamma_3, e0_p, e0_s

    [grid]
    t_f = 20.0
    steps = 2000

    [functional]
    kind = fc                      ; fc fnc fhs fgeo fstate purity coherence
    gate = qft                     ; phase | qft (fidelity/fstate kinds)
    phase_phi = 3.141592653589793
    w_angle = 0.5
    w_length = 0.5
    smoothing = 1e-8

    [guess]
    family = blackman              ; blackman | gaussian | sinusoid

    [krotov]
    max_iterations = 500
    delta_j_tol = 1e-7
    zeta_a = 0.01
    weight_pump = 1.0
    weight_stokes = 1.0

    [educated]                     ; scenario `educated` only
    pre_t_f = 5.0
    pre_steps = 500
    pre_max_iterations = 300

    [cross_eval]                   ; scenario `cross-eval` only
    kinds = fc,fnc,fhs,fgeo
    max_workers = 4

Verbs: ``propagate``, ``optimize``, ``cross-eval``, ``educated``,
``validate-config``; all take ``--config <path>`` and optionally
``--seed-fields <csv>`` (columns t_us, eps_pump, eps_stokes) to inject
external guess-field samples.

Emitted CSV files are UTF-8, LF-terminated, full double precision (17
significant digits), so re-parsing reproduces every value bit-exactly.
Process-matrix checkpoints use the plain-text dump of
:func:`procopt.process.chi_to_text`: a header line with the Hilbert-space
dimension, then the N^2 x N^2 matrix row-major, one row per line, entries
as comma-joined ``re,im`` pairs separated by spaces.

Exit codes: 0 success, 1 configuration error, 2 numeric invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (
    TimeGrid,
    check_trajectory,
    propagate_forward,
    trajectory_process,
)
from .functionals import (
    FunctionalSpec,
    evolved_probe_states,
    f_c,
    f_geo,
    f_hs,
    f_nc,
    f_state,
)
from .krotov import KrotovConfig, OptimizationResult, run
from .lambda_system import (
    GUESS_FAMILIES,
    PRESETS,
    LambdaParams,
    TargetGate,
    guess_field,
    lambda_model,
    rescale_field,
    target_process,
)
from .process import InvariantViolation, chi_to_text, coherence_l1, purity

SCENARIOS = ("propagate", "optimize", "cross-eval", "educated")
FIDELITY_KINDS = ("fc", "fnc", "fhs", "fgeo")


class ConfigError(Exception):
    """The run configuration cannot be parsed or is inconsistent."""


@dataclass
class RunConfig:
    """Parsed experiment configuration."""

    scenario: str | None
    output_dir: Path
    params: LambdaParams
    grid: TimeGrid
    functional_kind: str
    gate: TargetGate
    w_angle: float
    w_length: float
    smoothing: float
    guess_family: str
    krotov: KrotovConfig
    weights: dict
    pre_t_f: float
    pre_steps: int
    pre_max_iterations: int
    cross_kinds: tuple
    max_workers: int


def _get(cp, section, key, cast, default):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing required option [{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from exc


def load_config(path) -> RunConfig:
    """Parse and validate a run-configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    scenario = _get(cp, "run", "scenario", str, "") or None
    if scenario and scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    outdir = Path(os.environ.get("PROCOPT_OUTPUT_DIR")
                  or _get(cp, "run", "output_dir", str, "out"))

    preset = _get(cp, "model", "preset", str, "lambda-rb87-default")
    if preset not in PRESETS:
        raise ConfigError(f"unknown model preset {preset!r}")
    base = PRESETS[preset]
    params = LambdaParams(
        delta_p=_get(cp, "model", "delta_p", float, base.delta_p),
        delta_s=_get(cp, "model", "delta_s", float, base.delta_s),
        gamma_1=_get(cp, "model", "gamma_1", float, base.gamma_1),
        gamma_3=_get(cp, "model", "gamma_3", float, base.gamma_3),
        e0_p=_get(cp, "model", "e0_p", float, base.e0_p),
        e0_s=_get(cp, "model", "e0_s", float, base.e0_s),
    )

    t_f = _get(cp, "grid", "t_f", float, None)
    steps = _get(cp, "grid", "steps", int, None)
    if t_f <= 0:
        raise ConfigError("t_f must be positive")
    grid = TimeGrid(0.0, t_f, steps)

    kind = _get(cp, "functional", "kind", str, "fc")
    gate_name = _get(cp, "functional", "gate", str, "qft")
    if gate_name == "phase":
        gate = TargetGate.phase(_get(cp, "functional", "phase_phi", float, float(np.pi)))
    elif gate_name == "qft":
        gate = TargetGate.qft()
    else:
        raise ConfigError(f"unknown gate {gate_name!r}; choose phase or qft")

    family = _get(cp, "guess", "family", str, "blackman")
    if family not in GUESS_FAMILIES:
        raise ConfigError(f"unknown guess family {family!r}")

    weights = {
        "pump": _get(cp, "krotov", "weight_pump", float, 1.0),
        "stokes": _get(cp, "krotov", "weight_stokes", float, 1.0),
    }
    try:
        kconf = KrotovConfig(
            max_iterations=_get(cp, "krotov", "max_iterations", int, 500),
            delta_j_tol=_get(cp, "krotov", "delta_j_tol", float, 1e-7),
            zeta_a=_get(cp, "krotov", "zeta_a", float, 0.01),
            weights=weights,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cross_raw = _get(cp, "cross_eval", "kinds", str, ",".join(FIDELITY_KINDS))
    cross_kinds = tuple(k.strip() for k in cross_raw.split(",") if k.strip())
    for k in cross_kinds:
        if k not in FIDELITY_KINDS:
            raise ConfigError(f"cross-eval kind {k!r} must be one of {FIDELITY_KINDS}")

    try:
        cfg = RunConfig(
            scenario=scenario,
            output_dir=outdir,
            params=params,
            grid=grid,
            functional_kind=kind,
            gate=gate,
            w_angle=_get(cp, "functional", "w_angle", float, 0.5),
            w_length=_get(cp, "functional", "w_length", float, 0.5),
            smoothing=_get(cp, "functional", "smoothing", float, 1e-8),
            guess_family=family,
            krotov=kconf,
            weights=weights,
            pre_t_f=_get(cp, "educated", "pre_t_f", float, 5.0),
            pre_steps=_get(cp, "educated", "pre_steps", int, 500),
            pre_max_iterations=_get(cp, "educated", "pre_max_iterations", int, 300),
            cross_kinds=cross_kinds,
            max_workers=_get(cp, "cross_eval", "max_workers", int, 4),
        )
        # trip FunctionalSpec validation early so bad kinds fail as config errors
        _make_spec(cfg, kind)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _make_spec(cfg: RunConfig, kind: str) -> FunctionalSpec:
    model = lambda_model(cfg.params)
    target = target_process(cfg.gate, model.basis)
    return FunctionalSpec(
        kind=kind,
        target=target if kind in FIDELITY_KINDS else None,
        target_unitary=cfg.gate.matrix if kind == "fstate" else None,
        w_angle=cfg.w_angle,
        w_length=cfg.w_length,
        smoothing=cfg.smoothing,
    )


def _guess_fields(cfg: RunConfig, grid: TimeGrid, seed_csv=None) -> list:
    fields = [guess_field(cfg.guess_family, role, cfg.params, grid,
                          weight=cfg.weights[role])
              for role in ("pump", "stokes")]
    if seed_csv is None:
        return fields
    if not Path(seed_csv).exists():
        raise ConfigError(f"seed-fields file not found: {seed_csv}")
    data = np.genfromtxt(seed_csv, delimiter=",", names=True)
    if data.dtype.names is None or "t_us" not in data.dtype.names:
        raise ConfigError(f"seed-fields file {seed_csv} needs a t_us column")
    t = np.atleast_1d(data["t_us"])
    out = []
    for f in fields:
        col = f"eps_{f.label}"
        if col not in data.dtype.names:
            raise ConfigError(f"seed-fields file {seed_csv} is missing column {col}")
        vals = np.interp(grid.midpoints(), t, np.atleast_1d(data[col]))
        out.append(f.with_values(vals))
    return out


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) or isinstance(x, np.floating):
        return f"{x:.17g}"
    return str(x)


def emit_csv(path, header, rows) -> None:
    """Write a UTF-8, LF-terminated CSV at full double precision."""
    rows = list(rows)
    if not rows:
        raise ValueError(f"refusing to emit empty CSV {path}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _report_row(cfg: RunConfig, model, chi) -> tuple:
    target = target_process(cfg.gate, model.basis)
    fstate_val = f_state(cfg.gate.matrix, evolved_probe_states(chi))
    return (
        f_c(chi, target),
        f_nc(chi, target),
        f_hs(chi, target),
        f_geo(chi, target, cfg.w_angle, cfg.w_length),
        fstate_val,
        purity(chi),
        coherence_l1(chi),
    )


REPORT_HEADER = ["fc", "fnc", "fhs", "fgeo", "fstate", "purity", "coherence"]


def _write_iterations(path, result: OptimizationResult) -> None:
    header = ["n", "f_value", "j_d", "j_total",
              "max_update_pump", "max_update_stokes", "purity", "coherence"]
    rows = [(r.n, r.f_value, r.j_d, r.j_total, r.max_updates[0], r.max_updates[1],
             r.purity, r.coherence) for r in result.records]
    emit_csv(path, header, rows)


def _write_fields(path, grid: TimeGrid, fields) -> None:
    rows = zip(grid.midpoints(), *[f.values for f in fields])
    emit_csv(path, ["t_us"] + [f"eps_{f.label}" for f in fields], rows)


def scenario_propagate(cfg: RunConfig, outdir: Path, seed_csv=None) -> None:
    model = lambda_model(cfg.params)
    fields = _guess_fields(cfg, cfg.grid, seed_csv)
    traj = propagate_forward(model, fields, cfg.grid)
    check_trajectory(model, traj)
    chi = trajectory_process(model, traj)
    emit_csv(outdir / "report.csv", REPORT_HEADER, [_report_row(cfg, model, chi)])
    target = target_process(cfg.gate, model.basis)
    rows = []
    for k in range(0, cfg.grid.steps + 1):
        c = trajectory_process(model, traj, k)
        rows.append((cfg.grid.points()[k], purity(c), coherence_l1(c), f_c(c, target)))
    emit_csv(outdir / "trajectory.csv", ["t_us", "purity", "coherence", "fc"], rows)
    (outdir / "chi_final.txt").write_text(chi_to_text(chi), encoding="utf-8")


def _optimize(cfg: RunConfig, grid: TimeGrid, kind: str, fields, outdir: Path,
              max_iterations=None, tag: str = "") -> OptimizationResult:
    model = lambda_model(cfg.params)
    spec = _make_spec(cfg, kind)
    kconf = cfg.krotov if max_iterations is None else KrotovConfig(
        max_iterations=max_iterations,
        delta_j_tol=cfg.krotov.delta_j_tol,
        zeta_a=cfg.krotov.zeta_a,
        weights=cfg.krotov.weights,
    )

    def checkpoint(n, current):
        _write_fields(outdir / f"fields_checkpoint{tag}_{n:06d}.csv", grid, current)

    return run(model, grid, spec, fields, kconf, checkpoint=checkpoint)


def scenario_optimize(cfg: RunConfig, outdir: Path, seed_csv=None) -> None:
    model = lambda_model(cfg.params)
    fields = _guess_fields(cfg, cfg.grid, seed_csv)
    result = _optimize(cfg, cfg.grid, cfg.functional_kind, fields, outdir)
    check_trajectory(model, result.final_trajectory)
    _write_iterations(outdir / "iterations.csv", result)
    _write_fields(outdir / "final_fields.csv", cfg.grid, result.final_fields)
    chi = trajectory_process(model, result.final_trajectory)
    (outdir / "chi_final.txt").write_text(chi_to_text(chi), encoding="utf-8")
    emit_csv(outdir / "report.csv", REPORT_HEADER, [_report_row(cfg, model, chi)])


def scenario_cross_eval(cfg: RunConfig, outdir: Path, seed_csv=None) -> None:
    """Optimize each fidelity, then evaluate every fidelity on each optimum."""
    model = lambda_model(cfg.params)
    target = target_process(cfg.gate, model.basis)

    def one(kind):
        fields = _guess_fields(cfg, cfg.grid, seed_csv)
        return kind, _optimize(cfg, cfg.grid, kind, fields, outdir, tag="_" + kind)

    workers = max(1, min(cfg.max_workers, len(cfg.cross_kinds)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = dict(pool.map(one, cfg.cross_kinds))

    evaluators = {"fc": f_c, "fnc": f_nc, "fhs": f_hs,
                  "fgeo": lambda a, b: f_geo(a, b, cfg.w_angle, cfg.w_length)}
    rows = []
    for k in cfg.cross_kinds:
        res = results[k]
        chi = trajectory_process(model, res.final_trajectory)
        row = [k]
        for l in cfg.cross_kinds:
            # diagonal cells repeat the optimizer's own final value exactly
            row.append(res.records[-1].f_value if l == k else evaluators[l](chi, target))
        rows.append(tuple(row))
        _write_iterations(outdir / f"iterations_{k}.csv", res)
    emit_csv(outdir / "cross_eval.csv", ["optimized"] + list(cfg.cross_kinds), rows)


def scenario_educated(cfg: RunConfig, outdir: Path, seed_csv=None) -> None:
    """Pre-optimize at a short final time, rescale the fields, re-optimize."""
    pre_grid = TimeGrid(0.0, cfg.pre_t_f, cfg.pre_steps)
    pre_fields = _guess_fields(cfg, pre_grid, seed_csv)
    stage1 = _optimize(cfg, pre_grid, cfg.functional_kind, pre_fields, outdir,
                       max_iterations=cfg.pre_max_iterations, tag="_stage1")
    _write_iterations(outdir / "stage1_iterations.csv", stage1)

    educated = [rescale_field(f, cfg.pre_t_f, cfg.grid.tf, cfg.grid)
                for f in stage1.final_fields]
    _write_fields(outdir / "educated_fields.csv", cfg.grid, educated)

    stage2 = _optimize(cfg, cfg.grid, cfg.functional_kind, educated, outdir,
                       tag="_stage2")
    _write_iterations(outdir / "stage2_iterations.csv", stage2)
    _write_fields(outdir / "final_fields.csv", cfg.grid, stage2.final_fields)
    model = lambda_model(cfg.params)
    chi = trajectory_process(model, stage2.final_trajectory)
    (outdir / "chi_final.txt").write_text(chi_to_text(chi), encoding="utf-8")
    emit_csv(outdir / "report.csv", REPORT_HEADER, [_report_row(cfg, model, chi)])


def run_scenario(scenario: str, cfg: RunConfig, seed_csv=None) -> None:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    dispatch = {
        "propagate": scenario_propagate,
        "optimize": scenario_optimize,
        "cross-eval": scenario_cross_eval,
        "educated": scenario_educated,
    }
    dispatch[scenario](cfg, outdir, seed_csv)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="procopt",
        description="Process-matrix optimal-control experiment runner",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in SCENARIOS + ("validate-config",):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--seed-fields", default=None,
                       help="CSV (t_us, eps_pump, eps_stokes) of guess-field samples")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.verb == "validate-config":
        print(f"{args.config}: ok")
        return 0
    try:
        run_scenario(args.verb, cfg, seed_csv=args.seed_fields)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (InvariantViolation, ValueError, RuntimeError) as exc:
        print(f"numeric invariant violation: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
