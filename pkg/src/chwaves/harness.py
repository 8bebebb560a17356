"""Validation experiments: parent-vs-reduced comparisons over (epsilon, delta)
sweeps, convergence-order fits, the soliton transit benchmark, conservation
reports and the moving-frame consistency check.

Every sweep point is an independent job (share-nothing); results are merged in
sweep order so identical configs produce identical CSV output.
"""

from __future__ import annotations

import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from ._version import __version__
from .asymptotics import SmallParams, frame_params, unidirectional_initial_data
from .models import (
    FirstOrderState,
    ModelSpec,
    build_parent,
    build_unidirectional,
    build_unidirectional_scaled,
)
from .spectral import Grid, WaveField, derivative, linf_norm, make_grid, shift
from .timestepping import BlowUpError, StepLimitError, StepPolicy, Trajectory, integrate

CSV_COLUMNS = (
    "epsilon",
    "delta",
    "nu",
    "model",
    "norm_L2",
    "norm_Linf",
    "mass_drift",
    "contaminated_flag",
    "t_end",
    "n_points",
    "dt",
)

CONTAMINATION_TOL = 1e-10


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class ProfileSpec:
    """Named initial shape for the slow profile U0(Y)."""

    kind: str  # "gaussian" | "sech2" | "custom"
    amplitude: float = 1.0
    width: float = 1.0
    values: tuple | None = None  # custom samples

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "sech2", "custom"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind != "custom" and self.width <= 0:
            raise ValueError("profile width must be positive")
        if self.kind == "custom" and self.values is None:
            raise ValueError("custom profile requires explicit samples")


def profile_field(grid: Grid, profile: ProfileSpec) -> WaveField:
    """Sample the profile on the grid, centered at the domain midpoint."""
    if profile.kind == "custom":
        return WaveField(grid, np.asarray(profile.values, dtype=float))
    arg = (grid.nodes - 0.5 * grid.length) / profile.width
    if profile.kind == "gaussian":
        values = profile.amplitude * np.exp(-(arg**2))
    else:
        values = profile.amplitude / np.cosh(arg) ** 2
    return WaveField(grid, values)


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class Horizon:
    kind: str  # "inv_delta" (t_end = t0/delta) | "fixed" (t_end = t0)
    t0: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("inv_delta", "fixed"):
            raise ValueError(f"unknown horizon kind {self.kind!r}")
        if self.t0 <= 0:
            raise ValueError("horizon t0 must be positive")

    def t_end(self, delta: float) -> float:
        return self.t0 / delta if self.kind == "inv_delta" else self.t0


def sweep_from_rule(rule: str, eps0: float, count: int) -> list[tuple[float, float]]:
    """Generate sweep points from a path rule; currently 'delta2-eq-eps'."""
    if rule != "delta2-eq-eps":
        raise ValueError(f"unknown sweep rule {rule!r}")
    if count < 1:
        raise ValueError("count must be >= 1")
    return [(eps0 / 2**k, math.sqrt(eps0 / 2**k)) for k in range(count)]


@dataclass(frozen=True)
class ExperimentConfig:
    profile: ProfileSpec
    sweep: tuple  # tuple of (epsilon, delta) pairs
    models: tuple  # unidirectional family names
    nu: float = 1.0
    horizons: tuple = (Horizon("inv_delta", 1.0), Horizon("fixed", 5.0))
    n_points: int = 1024
    y_length: float = 40.0
    policy: StepPolicy = field(default_factory=lambda: StepPolicy(cfl=0.5))
    closure: str = "matched"

    def __post_init__(self) -> None:
        if len(self.sweep) == 0:
            raise ValueError("sweep must be nonempty")
        for eps, delta in self.sweep:
            SmallParams(eps, delta, self.nu)  # bounds check
        for m in self.models:
            if m not in ("kdv", "bbm", "ch", "fkdv", "fbbm", "fch"):
                raise ValueError(f"unknown model under test {m!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = {
            k: v for k, v in asdict(self.policy).items() if v is not None
        }
        return d


def default_experiment(nu: float = 1.0, **overrides) -> ExperimentConfig:
    """The standard Gaussian experiment on the path delta^2 = epsilon."""
    models = ("kdv", "bbm", "ch") if nu == 1.0 else ("fkdv", "fbbm", "fch")
    base = dict(
        profile=ProfileSpec(kind="gaussian", amplitude=1.0, width=1.0),
        sweep=tuple(sweep_from_rule("delta2-eq-eps", 0.1, 4)),
        models=models,
        nu=nu,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class RunRecord:
    epsilon: float
    delta: float
    nu: float
    model: str
    norm_l2: float
    norm_linf: float
    mass_drift: float
    contaminated: bool
    t_end: float
    n_points: int
    dt: float
    horizon: str
    status: str = "ok"


@dataclass(frozen=True)
class ComparisonResult:
    config: ExperimentConfig
    records: tuple

    def rows(self, horizon: str | None = None, model: str | None = None):
        out = [r for r in self.records]
        if horizon is not None:
            out = [r for r in out if r.horizon == horizon]
        if model is not None:
            out = [r for r in out if r.model == model]
        return out


@dataclass(frozen=True)
class ConvergenceReport:
    norm: str
    horizon: str
    slopes: dict  # model -> (slope, rms fit residual)
    ratios: dict  # "ch/bbm" etc -> list of ratios along the path
    ratio_decreasing: dict  # same keys -> bool
    epsilons: tuple


# ---------------------------------------------------------------------------
# diagnostics


def conservation_report(traj: Trajectory) -> float:
    """Max relative mass drift over the trajectory (max across components).

    The drift of each component is normalized by max(|initial mass|, initial
    L1 mass) so components with vanishing signed mass are still measured on a
    meaningful scale; an identically zero run reports zero drift.
    """
    init = traj.states[0]
    arr0 = init.as_array()
    length = init.grid.length
    drifts = []
    for i in range(traj.mass.shape[1]):
        m = traj.mass[:, i]
        scale = max(abs(m[0]), float(np.mean(np.abs(arr0[i])) * length))
        dev = float(np.max(np.abs(m - m[0])))
        drifts.append(0.0 if dev == 0.0 else dev / scale)
    return max(drifts)


def boundary_contamination(traj: Trajectory) -> float:
    """Largest edge-to-peak field ratio over the sampled trajectory."""
    worst = 0.0
    for state in traj.states:
        arr = state.as_array()
        values = arr[0]  # strain / v component
        peak = np.max(np.abs(values))
        if peak == 0.0:
            continue
        n = values.shape[0]
        m = max(2, n // 64)
        edge = max(np.max(np.abs(values[:m])), np.max(np.abs(values[-m:])))
        worst = max(worst, float(edge / peak))
    return worst


# ---------------------------------------------------------------------------
# the sweep


def _nan_record(eps, delta, nu, model, t_end, n_points, horizon, status) -> RunRecord:
    return RunRecord(
        epsilon=eps,
        delta=delta,
        nu=nu,
        model=model,
        norm_l2=float("nan"),
        norm_linf=float("nan"),
        mass_drift=float("nan"),
        contaminated=True,
        t_end=t_end,
        n_points=n_points,
        dt=float("nan"),
        horizon=horizon,
        status=status,
    )


def _sample_stride(t_end: float, dt: float, target_samples: int = 16) -> int:
    n_steps = max(1, int(np.ceil(t_end / dt)))
    return max(1, n_steps // target_samples)


def _run_point(config: ExperimentConfig, index: int) -> list:
    """All runs of one sweep point; never raises on numerical failure."""
    eps, delta = config.sweep[index]
    nu = config.nu
    params = SmallParams(eps, delta, nu)
    ygrid = make_grid(config.n_points, config.y_length)
    u0 = profile_field(ygrid, config.profile)

    records = []
    try:
        state0 = unidirectional_initial_data(u0, params, closure=config.closure)
    except Exception as exc:  # resolution failures poison the whole point
        for horizon in config.horizons:
            t_end = horizon.t_end(delta)
            for model in config.models:
                records.append(
                    _nan_record(
                        eps, delta, nu, model, t_end, config.n_points,
                        horizon.kind, f"initial-data: {exc}",
                    )
                )
        return records

    xgrid = state0.grid
    parent_spec = ModelSpec("ibq") if nu == 1.0 else ModelSpec("fibq", nu=nu)
    parent_op = build_parent(parent_spec, xgrid)
    v0 = FirstOrderState(v=state0.u, time=0.0)

    for horizon in config.horizons:
        t_end = horizon.t_end(delta)
        parent_dt = config.policy.resolve_dt(parent_op)
        try:
            parent_traj = integrate(
                parent_op,
                state0,
                t_end,
                config.policy,
                sample_every=_sample_stride(t_end, parent_dt),
            )
            parent_u = parent_traj.final.u
            parent_drift = conservation_report(parent_traj)
            parent_contaminated = boundary_contamination(parent_traj) > CONTAMINATION_TOL
        except (BlowUpError, StepLimitError) as exc:
            for model in config.models:
                records.append(
                    _nan_record(
                        eps, delta, nu, model, t_end, config.n_points,
                        horizon.kind, f"parent: {exc}",
                    )
                )
            continue

        for model in config.models:
            op = build_unidirectional(ModelSpec(model, nu=nu), xgrid)
            dt = config.policy.resolve_dt(op)
            try:
                traj = integrate(
                    op, v0, t_end, config.policy,
                    sample_every=_sample_stride(t_end, dt),
                )
            except (BlowUpError, StepLimitError) as exc:
                records.append(
                    _nan_record(
                        eps, delta, nu, model, t_end, config.n_points,
                        horizon.kind, f"{model}: {exc}",
                    )
                )
                continue
            diff = traj.final.v.values - parent_u.values
            dx = xgrid.spacing
            record = RunRecord(
                epsilon=eps,
                delta=delta,
                nu=nu,
                model=model,
                norm_l2=float(np.sqrt(dx * np.sum(diff**2))),
                norm_linf=float(np.max(np.abs(diff))),
                mass_drift=max(parent_drift, conservation_report(traj)),
                contaminated=bool(
                    parent_contaminated
                    or boundary_contamination(traj) > CONTAMINATION_TOL
                ),
                t_end=t_end,
                n_points=config.n_points,
                dt=dt,
                horizon=horizon.kind,
            )
            records.append(record)
    return records


def run_comparison(config: ExperimentConfig, jobs: int = 1) -> ComparisonResult:
    """Run the full sweep; per-run failures are recorded, never raised."""
    indices = range(len(config.sweep))
    if jobs <= 1:
        chunks = [_run_point(config, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_point, config, i) for i in indices]
            chunks = [f.result() for f in futures]  # deterministic ordered merge
    records = tuple(rec for chunk in chunks for rec in chunk)
    return ComparisonResult(config=config, records=records)


# ---------------------------------------------------------------------------
# convergence-order fitting


def fit_power_law(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y against log x, with rms fit residual."""
    if len(x) < 3:
        raise ValueError("need at least three points for an order fit")
    if np.any(np.asarray(y) <= 0) or np.any(~np.isfinite(y)):
        raise ValueError("errors must be positive and finite for a log-log fit")
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coef, lx)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def fit_orders(
    result: ComparisonResult,
    path_rule: str = "delta2-eq-eps",
    norm: str = "l2",
    horizon: str = "inv_delta",
) -> ConvergenceReport:
    """Fit per-model convergence orders along the sweep path and report the
    accuracy ratios between models (ch/bbm, ch/kdv and fractional analogues)."""
    if path_rule != "delta2-eq-eps":
        raise ValueError(f"unknown path rule {path_rule!r}")
    if norm not in ("l2", "linf"):
        raise ValueError("norm must be 'l2' or 'linf'")
    rows = [r for r in result.rows(horizon=horizon) if r.status == "ok"]
    if not rows:
        raise ValueError(f"no successful rows for horizon {horizon!r}")
    for r in rows:
        if abs(r.delta**2 - r.epsilon) > 1e-9 * r.epsilon:
            raise ValueError(
                f"sweep point (eps={r.epsilon}, delta={r.delta}) is off the "
                "path delta^2 = epsilon"
            )
    models = sorted({r.model for r in rows})
    eps_sorted = sorted({r.epsilon for r in rows}, reverse=True)

    def err(model, eps):
        for r in rows:
            if r.model == model and r.epsilon == eps:
                return r.norm_l2 if norm == "l2" else r.norm_linf
        return None

    slopes = {}
    for model in models:
        eps_m = [e for e in eps_sorted if err(model, e) is not None]
        errs = np.array([err(model, e) for e in eps_m])
        slopes[model] = fit_power_law(np.array(eps_m), errs)

    ratios, decreasing = {}, {}
    for hi, lo in (("ch", "bbm"), ("ch", "kdv"), ("fch", "fbbm"), ("fch", "fkdv")):
        if hi in models and lo in models:
            common = [
                e for e in eps_sorted
                if err(hi, e) is not None and err(lo, e) is not None
            ]
            series = [err(hi, e) / err(lo, e) for e in common]
            key = f"{hi}/{lo}"
            ratios[key] = series
            # along the path epsilon decreases; require the ratio to decrease too
            decreasing[key] = all(b < a for a, b in zip(series, series[1:]))
    return ConvergenceReport(
        norm=norm,
        horizon=horizon,
        slopes=slopes,
        ratios=ratios,
        ratio_decreasing=decreasing,
        epsilons=tuple(eps_sorted),
    )


# ---------------------------------------------------------------------------
# soliton benchmark


@dataclass(frozen=True)
class SolitonReport:
    amplitude: float
    speed: float
    t_transit: float
    residual_t0: float
    linf_error: float
    shape_error: float
    phase_error: float
    n_points: int
    dt: float


def kdv_soliton(grid: Grid, amplitude: float, center: float | None = None) -> WaveField:
    """Traveling-wave profile A sech^2(sqrt(A/6) (x - x0)) of the kdv model.

    Periodized by summing images so the sampled function is smooth across the
    seam; the image cross-terms it adds to the model residual are quadratic in
    the (exponentially small) tails.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    x0 = 0.5 * grid.length if center is None else center
    kappa = math.sqrt(amplitude / 6.0) if amplitude > 0 else 0.0
    values = np.zeros_like(grid.nodes)
    for m in (-2, -1, 0, 1, 2):
        values += amplitude / np.cosh(kappa * (grid.nodes - x0 + m * grid.length)) ** 2
    return WaveField(grid, values)


def soliton_benchmark(
    amplitude: float, grid: Grid, policy: StepPolicy | None = None
) -> SolitonReport:
    """Propagate the analytic soliton for one domain transit and report errors.

    The closed form is validated first: its spectral residual in the kdv
    right-hand side at t = 0 must be at machine level before the profile is
    trusted as a reference.  The phase error is extracted from the first
    Fourier mode; the shape error is the max-norm mismatch after removing the
    measured phase shift.
    """
    policy = policy or StepPolicy(cfl=0.5)
    op = build_unidirectional(ModelSpec("kdv"), grid)
    v0 = kdv_soliton(grid, amplitude)
    speed = 1.0 + amplitude / 3.0
    # residual of the traveling-wave claim: v_t = -c v_x must match the rhs
    rhs0 = op.rhs(v0.values[np.newaxis, :])[0]
    residual = float(np.max(np.abs(rhs0 + speed * derivative(v0, 1).values)))
    if amplitude == 0.0:
        return SolitonReport(
            amplitude, speed, grid.length / speed, residual,
            0.0, 0.0, 0.0, grid.n_points, policy.resolve_dt(op),
        )
    t_transit = grid.length / speed
    state0 = FirstOrderState(v=v0, time=0.0)
    dt = policy.resolve_dt(op)
    traj = integrate(op, state0, t_transit, policy, sample_every=_sample_stride(t_transit, dt))
    v_end = traj.final.v
    linf_error = float(np.max(np.abs(v_end.values - v0.values)))
    xi1 = grid.wavenumbers[1]
    c0 = np.fft.fft(v0.values)[1]
    cT = np.fft.fft(v_end.values)[1]
    shift_est = float(-np.angle(cT / c0) / xi1)
    shape_error = float(np.max(np.abs(shift(v_end, -shift_est).values - v0.values)))
    return SolitonReport(
        amplitude=amplitude,
        speed=speed,
        t_transit=t_transit,
        residual_t0=residual,
        linf_error=linf_error,
        shape_error=shape_error,
        phase_error=shift_est,
        n_points=grid.n_points,
        dt=traj.dt,
    )


# ---------------------------------------------------------------------------
# frame consistency


@dataclass(frozen=True)
class FrameConsistencyReport:
    tau_end: float
    t_end: float
    linf_difference: float
    moving_frame_final: WaveField
    original_frame_final: WaveField


def frame_consistency_check(
    v0: WaveField,
    tau_end: float = 1.0,
    nu: float = 1.0,
    policy: StepPolicy | None = None,
) -> FrameConsistencyReport:
    """Solve the moving-frame equation and the original-frame equation for the
    same initial data and compare after mapping between the frames.

    The moving-frame solve uses the "xt" operator with epsilon = delta = 1;
    the profile is transferred node-to-node through zeta = a x, evolved to
    tau_end (i.e. t_end = 3 tau_end / a), and the moving-frame result is
    shifted by 0.6 a t_end before comparison.
    """
    policy = policy or StepPolicy(cfl=0.5)
    p = frame_params(nu)
    family = "ch" if nu == 1.0 else "fch"
    zgrid = v0.grid

    scaled_spec = ModelSpec(family, nu=nu, frame="xt", epsilon=1.0, delta=1.0)
    scaled_op = build_unidirectional_scaled(scaled_spec, zgrid)
    scaled_traj = integrate(
        scaled_op, FirstOrderState(v=v0, time=0.0), tau_end, policy
    , sample_every=10**9)

    t_end = 3.0 * tau_end / p.a
    xgrid = make_grid(zgrid.n_points, zgrid.length / p.a)
    orig_op = build_unidirectional(ModelSpec(family, nu=nu), xgrid)
    orig_traj = integrate(
        orig_op,
        FirstOrderState(v=WaveField(xgrid, v0.values.copy()), time=0.0),
        t_end,
        policy,
        sample_every=10**9,
    )

    mapped = shift(scaled_traj.final.v, 0.6 * p.a * t_end)
    diff = float(np.max(np.abs(orig_traj.final.v.values - mapped.values)))
    return FrameConsistencyReport(
        tau_end=tau_end,
        t_end=t_end,
        linf_difference=diff,
        moving_frame_final=mapped,
        original_frame_final=orig_traj.final.v,
    )


# ---------------------------------------------------------------------------
# persistence


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_comparison_csv(result: ComparisonResult, path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for r in result.records:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.epsilon, r.delta, r.nu, r.model, r.norm_l2, r.norm_linf,
                    r.mass_drift, r.contaminated, r.t_end, r.n_points, r.dt,
                )
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_convergence_csv(report: ConvergenceReport, path) -> None:
    lines = ["model,norm,horizon,slope,fit_residual"]
    for model, (slope, resid) in sorted(report.slopes.items()):
        lines.append(
            f"{model},{report.norm},{report.horizon},{_fmt(slope)},{_fmt(resid)}"
        )
    for key, series in sorted(report.ratios.items()):
        flat = ";".join(_fmt(v) for v in series)
        lines.append(
            f"ratio:{key},{report.norm},{report.horizon},"
            f"{_fmt(report.ratio_decreasing[key])},{flat}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_metadata(config_dict: dict, path, wall_time_s: float, extra: dict | None = None) -> None:
    meta = {
        "schema_version": 1,
        "config": config_dict,
        "versions": {
            "chwaves": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall_time_s,
    }
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
