import numpy as np
import pytest

from chwaves import Grid, WaveField, make_grid


def band_limited_field(grid: Grid, k_max: int, seed: int, amplitude: float = 1.0) -> WaveField:
    """Random real field with spectral support on 1 <= |k| <= k_max."""
    rng = np.random.default_rng(seed)
    n = grid.n_points
    coeffs = np.zeros(n, dtype=complex)
    for k in range(1, k_max + 1):
        c = rng.normal() + 1j * rng.normal()
        coeffs[k] = c
        coeffs[n - k] = np.conj(c)
    values = np.real(np.fft.ifft(coeffs)) * n / grid.length
    peak = np.max(np.abs(values))
    if peak > 0:
        values = values * (amplitude / peak)
    return WaveField(grid, values)


@pytest.fixture
def grid64():
    return make_grid(64, 2.0 * np.pi)


@pytest.fixture
def grid128():
    return make_grid(128, 40.0)
