"""Constitutive kernels as Fourier symbols, plus the small-wavenumber classifier.

Every kernel is represented by its Fourier symbol; convolutions are realized
exactly in Fourier space and no real-space quadrature is ever performed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import FourierSymbol


@dataclass(frozen=True)
class KernelSpec:
    """A constitutive kernel: its kind, Fourier symbol and optional real-space form."""

    kind: str  # "exponential" | "fractional" | "tabulated"
    symbol: FourierSymbol
    nu: float | None = None
    real_space: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        s0 = float(self.symbol.evaluate(np.array([0.0]))[0])
        if abs(s0 - 1.0) > 1e-12:
            raise ValueError(f"kernel symbol must satisfy symbol(0) = 1, got {s0!r}")


@dataclass(frozen=True)
class ClassificationResult:
    """Outcome of the small-wavenumber power-law fit 1/symbol - 1 ~ C (xi^2)^nu."""

    nu_estimate: float
    fit_residual: float
    fit_range: tuple[float, float]
    success: bool
    message: str = ""


def exponential_kernel() -> KernelSpec:
    """Kernel (1/2) exp(-|x|); symbol 1/(1 + xi^2)."""

    def sym(xi):
        return 1.0 / (1.0 + xi**2)

    def beta(x):
        return 0.5 * np.exp(-np.abs(np.asarray(x, dtype=float)))

    return KernelSpec(
        kind="exponential",
        symbol=FourierSymbol(sym, name="(1+xi^2)^-1"),
        nu=1.0,
        real_space=beta,
    )


def fractional_kernel(nu: float) -> KernelSpec:
    """Kernel with symbol 1/(1 + |xi|^(2 nu)); nu >= 1. nu = 1 is the exponential kernel."""
    if nu < 1.0:
        raise ValueError(f"fractional kernel requires nu >= 1, got {nu}")
    nu = float(nu)

    def sym(xi):
        return 1.0 / (1.0 + np.abs(xi) ** (2.0 * nu))

    return KernelSpec(
        kind="fractional",
        symbol=FourierSymbol(sym, name=f"(1+|xi|^{2.0 * nu:g})^-1"),
        nu=nu,
    )


def tabulated_kernel(xi_samples: np.ndarray, symbol_samples: np.ndarray) -> KernelSpec:
    """Kernel from tabulated (xi, symbol) pairs, linearly interpolated in |xi|.

    The table must start at xi = 0 with symbol exactly 1 (up to 1e-12), be
    strictly increasing in xi, and evaluation outside the tabulated range is
    rejected.
    """
    xi = np.asarray(xi_samples, dtype=float)
    val = np.asarray(symbol_samples, dtype=float)
    if xi.ndim != 1 or xi.shape != val.shape or xi.size < 2:
        raise ValueError("table must be two equal-length 1-d columns with >= 2 rows")
    if xi[0] != 0.0:
        raise ValueError(f"table must start at xi = 0, got {xi[0]}")
    if not np.all(np.diff(xi) > 0):
        raise ValueError("table xi column must be strictly increasing")
    if not np.all(np.isfinite(val)):
        raise ValueError("table symbol column must be finite")
    xi_max = xi[-1]

    def sym(q):
        aq = np.abs(np.asarray(q, dtype=float))
        if np.any(aq > xi_max * (1.0 + 1e-12)):
            raise ValueError(
                f"tabulated symbol queried at |xi| = {np.max(aq):g} beyond "
                f"table range [0, {xi_max:g}]"
            )
        return np.interp(aq, xi, val)

    return KernelSpec(kind="tabulated", symbol=FourierSymbol(sym, name="tabulated"))


def load_kernel_table(path) -> KernelSpec:
    """Read a two-column CSV (xi, symbol) and build a tabulated kernel.

    A single header row is tolerated when its first cell is not numeric.
    """
    xi, val = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: row {i + 1} does not have two columns")
            try:
                x = float(row[0])
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}: non-numeric value in row {i + 1}")
            xi.append(x)
            val.append(float(row[1]))
    return tabulated_kernel(np.array(xi), np.array(val))


def classify_symbol(
    spec: KernelSpec,
    xi_max: float = 0.5,
    n_samples: int = 32,
    residual_tol: float = 1e-3,
) -> ClassificationResult:
    """Estimate the dispersion exponent nu from the symbol near xi = 0.

    Fits log(1/symbol(xi) - 1) = 2 nu log(xi) + const by least squares over
    n_samples log-spaced points in (0, xi_max].  Classification succeeds when
    the rms fit residual per sample is below residual_tol and the estimate
    satisfies nu >= 1; otherwise a failed result is returned (never raised).
    """
    if xi_max <= 0:
        raise ValueError(f"xi_max must be positive, got {xi_max}")
    xi = np.geomspace(xi_max / 100.0, xi_max, int(n_samples))
    fit_range = (float(xi[0]), float(xi[-1]))
    values = spec.symbol.evaluate(xi)

    def failed(msg: str) -> ClassificationResult:
        return ClassificationResult(
            nu_estimate=float("nan"),
            fit_residual=float("inf"),
            fit_range=fit_range,
            success=False,
            message=msg,
        )

    if np.any(values <= 0.0) or np.any(~np.isfinite(values)):
        return failed("symbol is not positive on the fit range")
    excess = 1.0 / values - 1.0
    if np.any(excess <= 0.0):
        return failed("1/symbol - 1 is not positive on the fit range")

    x = 2.0 * np.log(xi)
    y = np.log(excess)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    nu_hat = float(coef[0])
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    if rms >= residual_tol:
        return ClassificationResult(nu_hat, rms, fit_range, False, "fit residual too large")
    # nu = 1 is the admissibility boundary; allow fit noise around it
    if nu_hat < 1.0 - 1e-3:
        return ClassificationResult(
            nu_hat, rms, fit_range, False, "estimated exponent below 1"
        )
    return ClassificationResult(nu_hat, rms, fit_range, True)
