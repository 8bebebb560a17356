"""Numerical machinery of the two-parameter long-wave expansion.

The expansion writes the parent strain as u(x,t) = eps * U(Y, S) with the
stretched coordinates Y = delta (x - t), S = delta t, and expands

    U = U0(Y) + eps U1 + delta^(2 nu) U2 + eps delta^(2 nu) U3 + ...

The correction profiles are fixed by their S-derivatives; this module uses the
zero-initial-data gauge U1 = U2 = U3 = 0 at S = 0 (any other choice merely
redefines U0), which makes every correction polynomial in S:

    U1 = S * U1S,   U2 = S * U2S,   U3 = S * U3S(0) + S^2/2 * U3SS.

Provided here: the moving-frame parameters a, b, c and coordinate maps, the
scaling of a slow profile onto the fast grid, construction of the hierarchy
terms (integer and fractional paths), evaluation of the parent-equation
residual of a truncated expansion, and the right-going initial-velocity
closure for parent runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import SecondOrderState
from .spectral import (
    Grid,
    WaveField,
    dealiased_product,
    derivative,
    make_grid,
    require_resolved,
    resample,
)

EPS_DELTA_CAP = 0.5  # beyond this the small-parameter premise is meaningless


@dataclass(frozen=True)
class SmallParams:
    """Amplitude (epsilon), inverse-wavelength (delta) and kernel exponent (nu)."""

    epsilon: float
    delta: float
    nu: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon <= EPS_DELTA_CAP):
            raise ValueError(f"epsilon must lie in (0, {EPS_DELTA_CAP}], got {self.epsilon}")
        if not (0.0 < self.delta <= EPS_DELTA_CAP):
            raise ValueError(f"delta must lie in (0, {EPS_DELTA_CAP}], got {self.delta}")
        if self.nu < 1.0:
            raise ValueError(f"nu must be >= 1, got {self.nu}")

    @property
    def delta_2nu(self) -> float:
        return self.delta ** (2.0 * self.nu)


@dataclass(frozen=True)
class FrameParams:
    """Moving-frame constants: X = a Y + b S, T = c S."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("frame parameters must be positive")


def frame_params(nu: float) -> FrameParams:
    """a = (4/5)^(1/(2 nu)), b = (2/5) a, c = a/3."""
    if nu < 1.0:
        raise ValueError(f"nu must be >= 1, got {nu}")
    a = (4.0 / 5.0) ** (1.0 / (2.0 * nu))
    return FrameParams(a=a, b=0.4 * a, c=a / 3.0)


def original_frame_map(nu: float, t, x):
    """Map original coordinates (x, t) to moving-frame coordinates (zeta, tau)."""
    p = frame_params(nu)
    zeta = p.a * (np.asarray(x, float) - 0.6 * np.asarray(t, float))
    tau = (p.a / 3.0) * np.asarray(t, float)
    return zeta, tau


def inverse_frame_map(nu: float, zeta, tau):
    """Inverse of original_frame_map: (zeta, tau) -> (x, t)."""
    p = frame_params(nu)
    t = 3.0 * np.asarray(tau, float) / p.a
    x = np.asarray(zeta, float) / p.a + 0.6 * t
    return x, t


@dataclass(frozen=True)
class HierarchyTerms:
    """S-derivatives of the expansion corrections, and the assembled U_S."""

    u0: WaveField
    u1_s: WaveField
    u2_s: WaveField
    u3_s: WaveField  # at the requested S
    u3_s0: WaveField
    u3_ss: WaveField
    u_s: WaveField  # eps*U1S + delta^(2nu)*U2S + eps*delta^(2nu)*U3S at S
    s: float
    fractional: bool


def _wf(grid: Grid, values: np.ndarray) -> WaveField:
    return WaveField(grid, values)


def _apply_mult(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft(mult * np.fft.fft(values)))


def _multipliers(grid: Grid, nu: float, use_fractional: bool) -> dict:
    """Composed Fourier multipliers for the hierarchy; the dispersive operator
    is |xi|^(2 nu) on the fractional path and -d^2/dY^2 on the integer path,
    composed in one pass so both paths see identical roundoff structure."""
    xi = grid.wavenumbers
    n = grid.n_points
    d1 = (1j * xi).copy()
    d1[n // 2] = 0.0
    disp = np.abs(xi) ** (2.0 * nu) if use_fractional else xi**2
    return {"d1": d1, "d2": -(xi**2), "disp": disp, "disp_d1": disp * d1}


def hierarchy_terms(
    u0: WaveField,
    params: SmallParams,
    s: float = 0.0,
    use_fractional: bool | None = None,
) -> HierarchyTerms:
    """Construct the correction S-derivatives for a given leading profile U0.

    use_fractional selects the dispersive-operator path; by default the
    fractional path is taken exactly when params.nu != 1.  At nu = 1 both
    paths agree to roundoff.
    """
    require_resolved(u0)
    if use_fractional is None:
        use_fractional = params.nu != 1.0
    grid = u0.grid
    eps, d2n = params.epsilon, params.delta_2nu
    m = _multipliers(grid, params.nu, use_fractional)

    u0u0y = dealiased_product(u0, derivative(u0, 1))  # U0 U0'
    u0_sq = dealiased_product(u0, u0)
    u1_s = _wf(grid, -0.5 * _apply_mult(u0_sq.values, m["d1"]))

    # disp = (-D^2)^nu (fractional) or -D^2 (integer): with Ld := disp applied,
    #   U2S  = +(1/2) Ld U0'
    #   U3S0 = +(3/4) Ld (U0 U0') - (1/4) U0 Ld U0'
    #   U3SS = -(1/4) Ld (U0^2)'' - (1/2) (U0 Ld U0')'
    # the integer forms with Ld = -D^2 reduce to the pure-derivative closed forms.
    ld_u0y = _apply_mult(u0.values, m["disp_d1"])
    u2_s = _wf(grid, 0.5 * ld_u0y)
    u0_ld_u0y = dealiased_product(u0, _wf(grid, ld_u0y))
    u3_s0 = _wf(
        grid,
        0.75 * _apply_mult(u0u0y.values, m["disp"]) - 0.25 * u0_ld_u0y.values,
    )
    u3_ss = _wf(
        grid,
        -0.25 * _apply_mult(u0_sq.values, m["disp"] * m["d2"])
        - 0.5 * _apply_mult(u0_ld_u0y.values, m["d1"]),
    )

    u3_s = _wf(grid, u3_s0.values + s * u3_ss.values)
    u_s = _wf(grid, eps * u1_s.values + d2n * u2_s.values + eps * d2n * u3_s.values)
    return HierarchyTerms(
        u0=u0,
        u1_s=u1_s,
        u2_s=u2_s,
        u3_s=u3_s,
        u3_s0=u3_s0,
        u3_ss=u3_ss,
        u_s=u_s,
        s=float(s),
        fractional=use_fractional,
    )


def expansion_residual(
    u0: WaveField,
    params: SmallParams,
    order: int,
    use_fractional: bool | None = None,
) -> float:
    """Max norm of the parent-equation residual of the truncated expansion at S = 0.

    order counts the retained corrections: 0 keeps U0 alone, 1 adds eps U1,
    2 adds delta^(2 nu) U2, 3 adds eps delta^(2 nu) U3.  S-derivatives are
    evaluated analytically through the polynomial-in-S closed forms; Y
    derivatives spectrally.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"order must be one of 0, 1, 2, 3, got {order}")
    if use_fractional is None:
        use_fractional = params.nu != 1.0
    terms = hierarchy_terms(u0, params, s=0.0, use_fractional=use_fractional)
    grid = u0.grid
    eps, d2n = params.epsilon, params.delta_2nu
    m = _multipliers(grid, params.nu, use_fractional)

    n = grid.n_points
    u_s = np.zeros(n)
    u_ss = np.zeros(n)
    if order >= 1:
        u_s += eps * terms.u1_s.values
    if order >= 2:
        u_s += d2n * terms.u2_s.values
    if order >= 3:
        u_s += eps * d2n * terms.u3_s0.values
        u_ss += eps * d2n * terms.u3_ss.values

    # U_SS - 2 U_YS + delta^(2 nu) Ld (U_SS + U_YY - 2 U_SY) - eps (U^2)_YY
    # at S = 0, with Ld = (-D^2)^nu resp. -D^2; the integer grouping
    # -delta^2 (U_YYYY + U_YYSS - 2 U_YYYS) is exactly -D^2 of the parenthesis.
    u_s_y = _apply_mult(u_s, m["d1"])
    disp_arg = u_ss + _apply_mult(u0.values, m["d2"]) - 2.0 * u_s_y
    u0_sq_yy = _apply_mult(dealiased_product(u0, u0).values, m["d2"])
    residual = (
        u_ss
        - 2.0 * u_s_y
        + d2n * _apply_mult(disp_arg, m["disp"])
        - eps * u0_sq_yy
    )
    return float(np.max(np.abs(residual)))


def scale_down(u0: WaveField, params: SmallParams, n_target: int | None = None) -> WaveField:
    """Realize u(x, 0) = eps * U0(delta x) on the fast grid.

    The fast grid has length L_Y / delta so its nodes satisfy delta x_j = Y_j;
    the slow profile is transferred by (exact, band-limited) spectral
    resampling when n_target differs from the slow grid's point count.
    """
    require_resolved(u0)
    m = int(n_target) if n_target is not None else u0.grid.n_points
    if m < u0.grid.n_points:
        raise ValueError(
            f"target grid too coarse: {m} points cannot represent the "
            f"{u0.grid.n_points}-point slow profile"
        )
    values = resample(u0, m).values if m != u0.grid.n_points else u0.values
    x_grid = make_grid(m, u0.grid.length / params.delta)
    return WaveField(x_grid, params.epsilon * values)


def unidirectional_initial_data(
    u0: WaveField,
    params: SmallParams,
    n_target: int | None = None,
    closure: str = "matched",
    use_fractional: bool | None = None,
) -> SecondOrderState:
    """Parent initial data selecting the right-going wave family.

    u(x,0) = eps U0(delta x); the initial velocity is
    u_t(x,0) = eps delta (U_S - U_Y)|_{S=0} with U_S assembled from the
    hierarchy at the expansion's full order ("matched" closure), or the cruder
    d'Alembert closure u_t = -u_x ("dalembert", for ablation runs).
    """
    if closure not in ("matched", "dalembert"):
        raise ValueError(f"closure must be 'matched' or 'dalembert', got {closure!r}")
    u_field = scale_down(u0, params, n_target)
    m = u_field.grid.n_points
    u0_y = derivative(u0, 1)
    if closure == "matched":
        terms = hierarchy_terms(u0, params, s=0.0, use_fractional=use_fractional)
        slow = _wf(u0.grid, terms.u_s.values - u0_y.values)
    else:
        slow = _wf(u0.grid, -u0_y.values)
    slow_values = resample(slow, m).values if m != u0.grid.n_points else slow.values
    w_field = WaveField(u_field.grid, params.epsilon * params.delta * slow_values)
    return SecondOrderState(u=u_field, w=w_field, time=0.0)
