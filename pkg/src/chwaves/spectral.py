"""Periodic pseudospectral infrastructure: grids, transforms, Fourier multipliers.

Transform convention
--------------------
``forward`` returns coefficients ``c_k = (L/n) * sum_j f(x_j) exp(-i xi_k x_j)``,
i.e. a Riemann-sum approximation of the continuous Fourier integral over one
period.  Consequences, relied on throughout the package and asserted by tests:

* ``c_0`` equals the mean of the samples times the domain length,
* the discrete Parseval identity reads ``dx * sum_j |f_j|^2 = (1/L) * sum_k |c_k|^2``,
* multiplier (symbol) application is normalization-free: a chain
  ``fft -> multiply -> ifft`` needs no extra factors.

The wavenumber at index ``n/2`` (Nyquist) is stored with a positive sign; all
even multipliers are insensitive to that choice and odd-order derivative
multipliers zero the Nyquist mode so real output stays real.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ResolutionError(ValueError):
    """A field's spectral tail is too large for the requested operation."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, length) with n_points nodes.

    Derived arrays (set once, read-only): ``nodes`` and ``wavenumbers``.
    The wavenumber layout follows the FFT index order with the Nyquist entry
    flipped to +pi*n/length.
    """

    n_points: int
    length: float
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_points % 2 != 0 or self.n_points < 8:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise ValueError(f"length must be a positive real, got {self.length}")
        n, length = self.n_points, float(self.length)
        nodes = np.arange(n) * (length / n)
        xi = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
        xi[n // 2] = abs(xi[n // 2])
        nodes.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "wavenumbers", xi)

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def mode_numbers(self) -> np.ndarray:
        """Signed integer mode indices in FFT order (Nyquist positive)."""
        k = np.rint(self.wavenumbers * self.length / (2.0 * np.pi)).astype(int)
        return k


def make_grid(n_points: int, length: float) -> Grid:
    """Build a periodic grid; n_points must be even and >= 8."""
    return Grid(n_points=int(n_points), length=float(length))


@dataclass(frozen=True)
class WaveField:
    """Real samples of a scalar field on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class SpectrumField:
    """Complex Fourier coefficients of a field, indexed like grid.wavenumbers."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (self.grid.n_points,):
            raise ValueError(
                f"coefficients shape {coeffs.shape} does not match grid "
                f"({self.grid.n_points},)"
            )
        object.__setattr__(self, "coefficients", coeffs)


@dataclass(frozen=True)
class FourierSymbol:
    """Even, real Fourier multiplier xi -> m(xi), vectorized over arrays."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(xi, dtype=float)), dtype=float)
        return out

    def __call__(self, xi):
        return self.evaluate(xi)


def forward(fld: WaveField) -> SpectrumField:
    """Forward transform under the documented (L/n) convention."""
    grid = fld.grid
    scale = grid.length / grid.n_points
    return SpectrumField(grid, scale * np.fft.fft(fld.values))


def inverse(spec: SpectrumField) -> WaveField:
    """Inverse transform; output is the real part (imag is roundoff for
    conjugate-symmetric input)."""
    grid = spec.grid
    scale = grid.n_points / grid.length
    return WaveField(grid, np.real(np.fft.ifft(spec.coefficients)) * scale)


def apply_symbol(spec: SpectrumField, sym: FourierSymbol) -> SpectrumField:
    """Multiply coefficients by sym(xi_k); symbol must be finite on the grid."""
    mult = sym.evaluate(spec.grid.wavenumbers)
    if not np.all(np.isfinite(mult)):
        bad = spec.grid.wavenumbers[~np.isfinite(mult)]
        raise ValueError(f"symbol is not finite at grid wavenumbers {bad[:4]}")
    return SpectrumField(spec.grid, spec.coefficients * mult)


def derivative_multiplier(grid: Grid, order: int) -> np.ndarray:
    """Complex multiplier of d^order/dx^order; odd orders zero the Nyquist mode."""
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    xi = grid.wavenumbers
    power = xi**order
    # (i*xi)^m by quadrant of m mod 4; avoids complex pow roundoff.
    rem = order % 4
    if rem == 0:
        mult = power.astype(complex)
    elif rem == 1:
        mult = 1j * power
    elif rem == 2:
        mult = (-power).astype(complex)
    else:
        mult = -1j * power
    if order % 2 == 1:
        mult = mult.copy()
        mult[grid.n_points // 2] = 0.0
    return mult


def derivative(fld: WaveField, order: int) -> WaveField:
    """Spectral d^order/dx^order with real output enforced."""
    grid = fld.grid
    mult = derivative_multiplier(grid, order)
    return WaveField(grid, np.real(np.fft.ifft(mult * np.fft.fft(fld.values))))


def fractional_laplacian_multiplier(grid: Grid, nu: float) -> np.ndarray:
    if nu < 1.0:
        raise ValueError(f"fractional order nu must be >= 1, got {nu}")
    return np.abs(grid.wavenumbers) ** (2.0 * nu)


def fractional_laplacian(fld: WaveField, nu: float) -> WaveField:
    """Fourier multiplier |xi|^(2 nu); nu >= 1. nu=1 matches -d^2/dx^2."""
    mult = fractional_laplacian_multiplier(fld.grid, nu)
    return WaveField(fld.grid, np.real(np.fft.ifft(mult * np.fft.fft(fld.values))))


def convolve(fld: WaveField, kernel_symbol: FourierSymbol) -> WaveField:
    """Periodic convolution with the kernel defined by its Fourier symbol."""
    return inverse(apply_symbol(forward(fld), kernel_symbol))


def dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean mask retaining modes with |k| <= n/3 (two-thirds rule)."""
    k = grid.mode_numbers
    return 3 * np.abs(k) <= grid.n_points


def dealias(spec: SpectrumField) -> SpectrumField:
    """Zero every coefficient with mode index |k| > n/3."""
    return SpectrumField(spec.grid, spec.coefficients * dealias_mask(spec.grid))


def dealiased_product(a: WaveField, b: WaveField) -> WaveField:
    """Pseudospectral product with the two-thirds rule applied to the inputs
    and to the product itself."""
    if a.grid is not b.grid and a.grid != b.grid:
        raise ValueError("product factors must live on the same grid")
    mask = dealias_mask(a.grid)
    a_low = np.real(np.fft.ifft(np.fft.fft(a.values) * mask))
    b_low = np.real(np.fft.ifft(np.fft.fft(b.values) * mask))
    prod = np.real(np.fft.ifft(np.fft.fft(a_low * b_low) * mask))
    return WaveField(a.grid, prod)


def shift(fld: WaveField, offset: float) -> WaveField:
    """Evaluate the trigonometric interpolant of f at x - offset on the nodes.

    The Nyquist coefficient is rotated by cos(xi_N * offset), which is the
    node-exact shift of the cosine-convention Nyquist mode of real data.
    """
    grid = fld.grid
    n = grid.n_points
    coeffs = np.fft.fft(fld.values)
    phase = np.exp(-1j * grid.wavenumbers * offset)
    phase[n // 2] = np.cos(grid.wavenumbers[n // 2] * offset)
    return WaveField(grid, np.real(np.fft.ifft(coeffs * phase)))


def resample(fld: WaveField, n_target: int, tail_tol: float = 1e-12) -> WaveField:
    """Band-limited resampling onto n_target uniform nodes of the same period.

    Upsampling is exact (zero padding, Nyquist split).  Downsampling requires
    the discarded band to be empty up to tail_tol of the peak coefficient,
    otherwise a ResolutionError is raised.
    """
    grid = fld.grid
    n = grid.n_points
    m = int(n_target)
    if m % 2 != 0 or m < 8:
        raise ValueError(f"n_target must be even and >= 8, got {n_target}")
    if m == n:
        return WaveField(grid, fld.values.copy())
    coeffs = np.fft.fft(fld.values)
    out = np.zeros(m, dtype=complex)
    if m > n:
        half = n // 2
        out[:half] = coeffs[:half]
        out[m - half + 1 :] = coeffs[half + 1 :]
        out[half] = 0.5 * coeffs[half]
        out[m - half] = 0.5 * coeffs[half]
    else:
        half = m // 2
        dropped = coeffs[half + 1 : n - half]
        peak = np.max(np.abs(coeffs))
        if peak > 0 and np.max(np.abs(dropped)) > tail_tol * peak:
            raise ResolutionError(
                "target grid too coarse: discarded spectral band holds "
                f"{np.max(np.abs(dropped)) / peak:.3e} of the peak coefficient"
            )
        out[:half] = coeffs[:half]
        out[m - half :] = coeffs[n - half :]
        # the old +/- m/2 modes both sample to (-1)^j on the coarse nodes
        out[half] = coeffs[half] + coeffs[n - half]
    out_grid = make_grid(m, grid.length)
    return WaveField(out_grid, np.real(np.fft.ifft(out)) * (m / n))


def spectral_tail_fraction(fld: WaveField) -> float:
    """Max coefficient magnitude in the top third of the spectrum over the peak."""
    coeffs = np.fft.fft(fld.values)
    peak = np.max(np.abs(coeffs))
    if peak == 0.0:
        return 0.0
    hi = ~dealias_mask(fld.grid)
    return float(np.max(np.abs(coeffs[hi])) / peak)


def require_resolved(fld: WaveField, tol: float = 1e-8) -> None:
    frac = spectral_tail_fraction(fld)
    if frac > tol:
        raise ResolutionError(
            f"field under-resolved: spectral tail is {frac:.3e} of peak (tol {tol:g})"
        )


def l2_norm(fld: WaveField) -> float:
    """Discrete L2 norm sqrt(dx * sum f_j^2)."""
    return float(np.sqrt(fld.grid.spacing * np.sum(fld.values**2)))


def linf_norm(fld: WaveField) -> float:
    return float(np.max(np.abs(fld.values)))
