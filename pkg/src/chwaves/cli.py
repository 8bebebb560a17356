"""Command-line entry point.

Subcommands: simulate, compare, sweep, classify-kernel, dispersion, soliton.
Human-readable progress goes to stderr; machine outputs are files under
--output-dir (plus the one-line classify-kernel summary on stdout).

Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure
(blow-up or contamination) with partial results still written.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .asymptotics import SmallParams
from .harness import (
    ExperimentConfig,
    Horizon,
    ProfileSpec,
    fit_orders,
    profile_field,
    run_comparison,
    soliton_benchmark,
    sweep_from_rule,
    write_comparison_csv,
    write_convergence_csv,
    write_metadata,
)
from .kernels import classify_symbol, exponential_kernel, fractional_kernel, load_kernel_table
from .models import (
    FirstOrderState,
    ModelSpec,
    PARENT_FAMILIES,
    SecondOrderState,
    build_operator,
    conserved_mass,
)
from .spectral import WaveField, derivative, make_grid
from .timestepping import BlowUpError, StepLimitError, StepPolicy, integrate

log = logging.getLogger("chwaves")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config loading


def load_schema() -> dict:
    with resources.files("chwaves.schemas").joinpath("experiment.schema.json").open() as fh:
        return json.load(fh)


def _apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply key=value overrides (dotted keys) on top of the file values."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return data


def experiment_from_dict(data: dict) -> ExperimentConfig:
    try:
        import jsonschema

        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match schema: {exc.message}") from exc

    profile = ProfileSpec(
        kind=data["profile"]["kind"],
        amplitude=data["profile"].get("amplitude", 1.0),
        width=data["profile"].get("width", 1.0),
        values=tuple(data["profile"]["values"]) if "values" in data["profile"] else None,
    )
    sweep_spec = data["sweep"]
    if isinstance(sweep_spec, dict):
        sweep = sweep_from_rule(sweep_spec["rule"], sweep_spec["eps0"], sweep_spec["count"])
    else:
        sweep = [tuple(p) for p in sweep_spec]
    horizons = tuple(
        Horizon(h["kind"], h.get("t0", 1.0)) for h in data.get("horizons", [])
    ) or (Horizon("inv_delta", 1.0), Horizon("fixed", 5.0))
    grid = data.get("grid", {})
    policy_spec = data.get("policy", {})
    if "dt" not in policy_spec and "cfl" not in policy_spec:
        policy_spec = {**policy_spec, "cfl": 0.5}
    try:
        policy = StepPolicy(**policy_spec)
        return ExperimentConfig(
            profile=profile,
            sweep=tuple(sweep),
            models=tuple(data["models"]),
            nu=data.get("nu", 1.0),
            horizons=horizons,
            n_points=grid.get("n_points", 1024),
            y_length=grid.get("y_length", 40.0),
            policy=policy,
            closure=data.get("closure", "matched"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_experiment(path: Path, overrides: list[str]) -> ExperimentConfig:
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    return experiment_from_dict(_apply_overrides(data, overrides))


# ---------------------------------------------------------------------------
# shared helpers


def _parse_profile(text: str) -> ProfileSpec:
    """Parse 'gaussian:0.1,5' / 'sech2:1,2' (kind:amplitude,width)."""
    kind, _, rest = text.partition(":")
    if kind not in ("gaussian", "sech2"):
        raise ConfigError(f"unknown profile {kind!r} (expected gaussian or sech2)")
    amplitude, width = 1.0, 1.0
    if rest:
        parts = rest.split(",")
        try:
            amplitude = float(parts[0])
            if len(parts) > 1:
                width = float(parts[1])
        except ValueError:
            raise ConfigError(f"could not parse profile parameters {rest!r}")
    return ProfileSpec(kind=kind, amplitude=amplitude, width=width)


def _policy_from_args(args) -> StepPolicy:
    kwargs = {}
    if getattr(args, "max_steps", None):
        kwargs["max_steps"] = args.max_steps
    if getattr(args, "dt", None):
        return StepPolicy(dt=args.dt, **kwargs)
    return StepPolicy(cfl=getattr(args, "cfl", 0.5) or 0.5, **kwargs)


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_spec(args) -> ModelSpec:
    frame = getattr(args, "frame", "original") or "original"
    kwargs = {}
    if frame != "original":
        kwargs["epsilon"] = args.epsilon if args.epsilon is not None else 1.0
        kwargs["delta"] = args.delta if args.delta is not None else 1.0
    if args.model == "nonlocal":
        kernel = (
            fractional_kernel(args.nu) if args.nu != 1.0 else exponential_kernel()
        )
        return ModelSpec("nonlocal", nu=args.nu, kernel=kernel, frame=frame, **kwargs)
    return ModelSpec(args.model, nu=args.nu, frame=frame, **kwargs)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    out = _outdir(args)
    spec = _model_spec(args)
    grid = make_grid(args.n, args.length)
    op = build_operator(spec, grid)
    profile = _parse_profile(args.profile)
    v0 = profile_field(grid, profile)
    if spec.family in PARENT_FAMILIES:
        # right-going d'Alembert start; sweep/compare use the matched closure
        init = SecondOrderState(u=v0, w=WaveField(grid, -derivative(v0, 1).values))
    else:
        init = FirstOrderState(v=v0)
    policy = _policy_from_args(args)
    dt = policy.resolve_dt(op)
    stride = max(1, int(math.ceil(args.t_end / dt)) // max(1, args.snapshots))
    started = time.perf_counter()
    code = 0
    try:
        traj = integrate(op, init, args.t_end, policy, sample_every=stride)
    except (BlowUpError, StepLimitError) as exc:
        log.error("run failed: %s", exc)
        (out / "run.json").write_text(
            json.dumps({"status": f"failed: {exc}", "model": spec.family}, indent=2) + "\n"
        )
        return 2

    lines = ["time,mass,max_norm"]
    for i, t in enumerate(traj.times):
        mass = traj.mass[i, 0]
        lines.append(f"{t:.12g},{mass:.12g},{traj.max_norm[i]:.12g}")
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")

    header = "x," + ",".join(f"t={t:.12g}" for t in traj.times)
    rows = [header]
    fields = [
        (s.v.values if spec.family not in PARENT_FAMILIES else s.u.values)
        for s in traj.states
    ]
    for j, x in enumerate(grid.nodes):
        rows.append(f"{x:.12g}," + ",".join(f"{f[j]:.12g}" for f in fields))
    (out / "snapshots.csv").write_text("\n".join(rows) + "\n")

    write_metadata(
        {
            "command": "simulate",
            "model": spec.family,
            "nu": spec.nu,
            "frame": spec.frame,
            "profile": vars(profile) | {"values": None},
            "n": args.n,
            "length": args.length,
            "t_end": args.t_end,
            "dt": traj.dt,
            "n_steps": traj.n_steps,
        },
        out / "run.json",
        time.perf_counter() - started,
    )
    log.info("wrote %s and %s", out / "trajectory.csv", out / "snapshots.csv")
    return code


def _run_experiment(config: ExperimentConfig, out: Path, jobs: int, fit: bool) -> int:
    started = time.perf_counter()
    result = run_comparison(config, jobs=jobs)
    write_comparison_csv(result, out / "comparison.csv")
    status = {r.status for r in result.records}
    extra = {"run_statuses": sorted(status)}
    code = 0
    if any(s != "ok" for s in status) or any(r.contaminated for r in result.records):
        code = 2
    if fit:
        try:
            horizon = config.horizons[0].kind
            report = fit_orders(result, norm="l2", horizon=horizon)
            write_convergence_csv(report, out / "convergence.csv")
            extra["slopes"] = {m: s for m, (s, _r) in report.slopes.items()}
        except ValueError as exc:
            log.warning("order fit skipped: %s", exc)
            extra["fit_error"] = str(exc)
    write_metadata(config.to_dict(), out / "metadata.json", time.perf_counter() - started, extra)
    log.info("wrote %s", out / "comparison.csv")
    return code


def cmd_compare(args) -> int:
    out = _outdir(args)
    if args.config:
        config = load_experiment(Path(args.config), args.set or [])
    else:
        if args.epsilon is None or args.delta is None:
            raise ConfigError("compare needs either --config or --epsilon and --delta")
        SmallParams(args.epsilon, args.delta, args.nu)
        models = tuple(args.models.split(",")) if args.models else (
            ("kdv", "bbm", "ch") if args.nu == 1.0 else ("fkdv", "fbbm", "fch")
        )
        config = ExperimentConfig(
            profile=_parse_profile(args.profile),
            sweep=((args.epsilon, args.delta),),
            models=models,
            nu=args.nu,
            horizons=(Horizon("inv_delta", 1.0),),
            n_points=args.n,
            y_length=args.length,
            policy=_policy_from_args(args),
        )
    return _run_experiment(config, out, jobs=1, fit=False)


def cmd_sweep(args) -> int:
    out = _outdir(args)
    config = load_experiment(Path(args.config), args.set or [])
    return _run_experiment(config, out, jobs=args.jobs, fit=True)


def cmd_classify_kernel(args) -> int:
    if args.table:
        kernel = load_kernel_table(args.table)
    elif args.kind == "exponential":
        kernel = exponential_kernel()
    elif args.kind == "fractional":
        kernel = fractional_kernel(args.nu)
    else:
        raise ConfigError("classify-kernel needs --table or --kind")
    result = classify_symbol(kernel, xi_max=args.xi_max)
    print(
        f"nu_estimate={result.nu_estimate:.8g} residual={result.fit_residual:.3e} "
        f"fit_range=({result.fit_range[0]:.4g},{result.fit_range[1]:.4g}) "
        f"success={result.success}"
    )
    if args.output_dir:
        out = _outdir(args)
        (out / "classification.json").write_text(
            json.dumps(
                {
                    "nu_estimate": result.nu_estimate,
                    "fit_residual": result.fit_residual,
                    "fit_range": list(result.fit_range),
                    "success": result.success,
                    "message": result.message,
                },
                indent=2,
            )
            + "\n"
        )
    return 0 if result.success else 2


def cmd_dispersion(args) -> int:
    out = _outdir(args)
    spec = _model_spec(args)
    grid = make_grid(args.n, args.length)
    op = build_operator(spec, grid)
    order = np.argsort(grid.wavenumbers)
    xi = grid.wavenumbers[order]
    omega = op.omega[order]
    mass = op.mass_values[order]
    lines = ["xi,omega,phase_speed,mass_symbol"]
    for i in range(len(xi)):
        speed = omega[i] / xi[i] if xi[i] != 0 else float("nan")
        lines.append(f"{xi[i]:.12g},{omega[i]:.12g},{speed:.12g},{mass[i]:.12g}")
    (out / "dispersion.csv").write_text("\n".join(lines) + "\n")
    log.info("wrote %s", out / "dispersion.csv")
    return 0


def cmd_soliton(args) -> int:
    out = _outdir(args)
    grid = make_grid(args.n, args.length)
    started = time.perf_counter()
    report = soliton_benchmark(args.amplitude, grid, _policy_from_args(args))
    payload = {
        "amplitude": report.amplitude,
        "speed": report.speed,
        "t_transit": report.t_transit,
        "residual_t0": report.residual_t0,
        "linf_error": report.linf_error,
        "shape_error": report.shape_error,
        "phase_error": report.phase_error,
        "n_points": report.n_points,
        "dt": report.dt,
        "wall_time_s": time.perf_counter() - started,
    }
    (out / "soliton_report.json").write_text(json.dumps(payload, indent=2) + "\n")
    log.info(
        "soliton transit: linf_error=%.3e shape_error=%.3e residual_t0=%.3e",
        report.linf_error, report.shape_error, report.residual_t0,
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chwaves",
        description="Simulate nonlocal elastic strain waves and their "
        "unidirectional long-wave reductions on periodic domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, grid_defaults=(512, 40.0)):
        p.add_argument("--output-dir", default="chwaves-out", help="directory for machine outputs")
        p.add_argument("--n", type=int, default=grid_defaults[0], help="grid points (even)")
        p.add_argument("--length", type=float, default=grid_defaults[1], help="domain length")
        p.add_argument("--dt", type=float, default=None, help="fixed time step")
        p.add_argument("--cfl", type=float, default=0.5, help="CFL number (used when --dt absent)")
        p.add_argument("--max-steps", type=int, default=None, dest="max_steps")

    sim = sub.add_parser("simulate", help="run one model from a named profile")
    add_common(sim)
    sim.add_argument("--model", required=True,
                     choices=["nonlocal", "ibq", "fibq", "kdv", "bbm", "ch", "fkdv", "fbbm", "fch"])
    sim.add_argument("--nu", type=float, default=1.0)
    sim.add_argument("--frame", choices=["original", "ys", "xt"], default="original")
    sim.add_argument("--epsilon", type=float, default=None)
    sim.add_argument("--delta", type=float, default=None)
    sim.add_argument("--profile", default="gaussian:0.1,5", help="kind:amplitude,width")
    sim.add_argument("--t-end", type=float, required=True, dest="t_end")
    sim.add_argument("--snapshots", type=int, default=16, help="approximate snapshot count")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="parent vs reduced models at one (epsilon, delta)")
    add_common(cmp_, grid_defaults=(1024, 40.0))
    cmp_.add_argument("--config", default=None, help="experiment JSON (single-point sweep)")
    cmp_.add_argument("--set", action="append", help="config override key=value", default=None)
    cmp_.add_argument("--epsilon", type=float, default=None)
    cmp_.add_argument("--delta", type=float, default=None)
    cmp_.add_argument("--nu", type=float, default=1.0)
    cmp_.add_argument("--models", default=None, help="comma-separated families")
    cmp_.add_argument("--profile", default="gaussian:1,1")
    cmp_.set_defaults(func=cmd_compare)

    swp = sub.add_parser("sweep", help="full (epsilon, delta) sweep from a config file")
    swp.add_argument("--config", required=True)
    swp.add_argument("--set", action="append", help="config override key=value", default=None)
    swp.add_argument("--output-dir", default="chwaves-out")
    swp.add_argument("--jobs", type=int, default=1, help="parallel sweep-point jobs")
    swp.set_defaults(func=cmd_sweep)

    cls = sub.add_parser("classify-kernel", help="estimate the dispersion exponent of a kernel")
    cls.add_argument("--table", default=None, help="CSV with columns xi, symbol")
    cls.add_argument("--kind", choices=["exponential", "fractional"], default=None)
    cls.add_argument("--nu", type=float, default=1.0, help="nu for --kind fractional")
    cls.add_argument("--xi-max", type=float, default=0.5, dest="xi_max")
    cls.add_argument("--output-dir", default=None)
    cls.set_defaults(func=cmd_classify_kernel)

    dsp = sub.add_parser("dispersion", help="tabulate the linear dispersion relation")
    add_common(dsp, grid_defaults=(256, 40.0))
    dsp.add_argument("--model", required=True,
                     choices=["nonlocal", "ibq", "fibq", "kdv", "bbm", "ch", "fkdv", "fbbm", "fch"])
    dsp.add_argument("--nu", type=float, default=1.0)
    dsp.add_argument("--frame", choices=["original", "ys", "xt"], default="original")
    dsp.add_argument("--epsilon", type=float, default=None)
    dsp.add_argument("--delta", type=float, default=None)
    dsp.set_defaults(func=cmd_dispersion)

    sol = sub.add_parser("soliton", help="one-transit traveling-wave benchmark")
    add_common(sol, grid_defaults=(512, 80.0))
    sol.add_argument("--amplitude", type=float, default=0.5)
    sol.set_defaults(func=cmd_soliton)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except ValueError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
