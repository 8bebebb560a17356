"""Fixed-step classical RK4 integration with blow-up guards and trajectory capture.

No adaptivity: every convergence-order measurement in the harness depends on a
clean, uniform step size.  The default step comes from a CFL number against the
model's maximal linear phase speed over the grid wavenumbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import EvolutionOperator, FirstOrderState, SecondOrderState


class BlowUpError(RuntimeError):
    """Field norm exceeded the blow-up threshold or became non-finite."""

    def __init__(self, message: str, time: float, norm: float):
        super().__init__(message)
        self.time = time
        self.norm = norm


class StepLimitError(RuntimeError):
    """The run would need more steps than the policy allows."""


class ProbeFitError(RuntimeError):
    """The order probe could not produce a meaningful fit."""


@dataclass(frozen=True)
class StepPolicy:
    """Step-size policy: either a fixed dt or a CFL number (exactly one).

    With cfl set, dt = cfl * dx / s_max where s_max is the operator's maximal
    linear phase speed over the grid wavenumbers.
    """

    dt: float | None = None
    cfl: float | None = None
    max_steps: int = 2_000_000
    blowup_threshold: float = 1e6

    def __post_init__(self) -> None:
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("set exactly one of dt and cfl")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cfl is not None and not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")

    def resolve_dt(self, op: EvolutionOperator) -> float:
        if self.dt is not None:
            return float(self.dt)
        s_max = op.max_phase_speed
        if s_max <= 0.0:
            s_max = 1.0  # dispersionless operator: fall back to unit speed
        return float(self.cfl) * op.grid.spacing / s_max


@dataclass
class Trajectory:
    """Sampled states of one run plus per-sample diagnostics."""

    times: np.ndarray
    states: list
    mass: np.ndarray  # shape (n_samples, n_components)
    max_norm: np.ndarray
    dt: float
    n_steps: int

    @property
    def final(self):
        return self.states[-1]

    def __post_init__(self) -> None:
        if len(self.states) == 0:
            raise ValueError("trajectory must contain at least one sample")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


def _component_masses(arr: np.ndarray, length: float) -> np.ndarray:
    return arr.mean(axis=1) * length


def _rk4_step(rhs, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    op: EvolutionOperator,
    init,
    t_end: float,
    policy: StepPolicy | None = None,
    sample_every: int = 1,
) -> Trajectory:
    """Advance init to t_end with classical RK4 at fixed dt.

    The final step is shortened to land exactly on t_end.  Raises BlowUpError
    when the max norm exceeds policy.blowup_threshold or turns non-finite, and
    StepLimitError when more than policy.max_steps steps would be needed.
    Every sample_every-th step is recorded (plus the initial and final states).
    """
    if policy is None:
        policy = StepPolicy(cfl=0.5)
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    t0 = float(init.time)
    if not t_end > t0:
        raise ValueError(f"t_end ({t_end}) must exceed the initial time ({t0})")

    dt = policy.resolve_dt(op)
    span = t_end - t0
    n_full = int(np.floor(span / dt + 1e-12))
    remainder = span - n_full * dt
    has_tail = remainder > 1e-12 * max(abs(t_end), 1.0)
    n_steps = n_full + (1 if has_tail else 0)
    if n_steps > policy.max_steps:
        raise StepLimitError(
            f"run needs {n_steps} steps, policy allows {policy.max_steps}"
        )

    y = init.as_array().astype(float, copy=True)
    length = op.grid.length

    times = [t0]
    samples = [y.copy()]
    masses = [_component_masses(y, length)]
    norms = [float(np.max(np.abs(y)))]

    t = t0
    for step in range(1, n_steps + 1):
        h = dt if step <= n_full else remainder
        y = _rk4_step(op.rhs, y, h)
        t = t0 + (step * dt if step <= n_full else span)
        norm = float(np.max(np.abs(y)))
        if not np.isfinite(norm):
            raise BlowUpError("non-finite values detected", time=t, norm=norm)
        if norm > policy.blowup_threshold:
            raise BlowUpError(
                f"max norm {norm:.3e} exceeded threshold "
                f"{policy.blowup_threshold:.3e} at t = {t:.6g}",
                time=t,
                norm=norm,
            )
        if step % sample_every == 0 or step == n_steps:
            times.append(t)
            samples.append(y.copy())
            masses.append(_component_masses(y, length))
            norms.append(norm)

    states = [op.state_from_array(arr, tm) for arr, tm in zip(samples, times)]
    return Trajectory(
        times=np.array(times),
        states=states,
        mass=np.array(masses),
        max_norm=np.array(norms),
        dt=dt,
        n_steps=n_steps,
    )


def step_order_probe(
    op: EvolutionOperator,
    init,
    t_end: float,
    dt_list,
    stepper=None,
) -> float:
    """Observed convergence order from a log-log fit of terminal error vs dt.

    Terminal states for every dt in dt_list are compared against a reference
    run at min(dt_list)/8 (fine enough that its own error does not bias the
    fitted slope even for a first-order method).  ``stepper`` may replace the
    RK4 step (test hook, e.g. a forward-Euler step); it receives (rhs, y, dt)
    and returns the new y.
    """
    dts = sorted(float(d) for d in dt_list)
    if len(dts) < 3:
        raise ValueError("need at least three dt values")
    ratios = np.array([dts[i + 1] / dts[i] for i in range(len(dts) - 1)])
    if np.any(ratios < 1.2) or np.max(ratios) / np.min(ratios) > 1.5:
        raise ValueError("dt values must form a (roughly) geometric progression")
    step = stepper or _rk4_step

    def terminal(dt: float) -> np.ndarray:
        span = float(t_end) - float(init.time)
        n_full = int(np.floor(span / dt + 1e-12))
        remainder = span - n_full * dt
        y = init.as_array().astype(float, copy=True)
        for _ in range(n_full):
            y = step(op.rhs, y, dt)
        if remainder > 1e-12 * max(abs(t_end), 1.0):
            y = step(op.rhs, y, remainder)
        return y

    reference = terminal(dts[0] / 8.0)
    errors = np.array([float(np.max(np.abs(terminal(dt) - reference))) for dt in dts])
    if np.any(errors <= 0.0):
        raise ProbeFitError("terminal error vanished; nothing to fit")
    slope = float(np.polyfit(np.log(np.array(dts)), np.log(errors), 1)[0])
    return slope


def make_first_order_state(op: EvolutionOperator, values, time: float = 0.0):
    from .spectral import WaveField

    return FirstOrderState(WaveField(op.grid, np.asarray(values, float)), time)


def make_second_order_state(op: EvolutionOperator, u_values, w_values, time: float = 0.0):
    from .spectral import WaveField

    return SecondOrderState(
        WaveField(op.grid, np.asarray(u_values, float)),
        WaveField(op.grid, np.asarray(w_values, float)),
        time,
    )
