"""ULA/UPA steering vectors and their inner products.

The Dirichlet-kernel closed form of the ULA inner product is the workhorse
here: it makes beam orthogonality between well-separated spatial frequencies
a cheap, testable numerical fact instead of an asymptotic hand-wave.
"""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(value: float) -> float:
    """Wrap a finite angle in radians into [-pi, pi]."""
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"angle must be finite, got {value!r}")
    return float((value + np.pi) % TWO_PI - np.pi)


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array: element count and spacing in wavelengths."""

    n_elements: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError(f"n_elements must be >= 1, got {self.n_elements}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError(
                f"spacing_over_wavelength must be > 0, got {self.spacing_over_wavelength}"
            )


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array: n_rows x n_cols elements, spacing in wavelengths."""

    n_rows: int
    n_cols: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(
                f"UPA dimensions must be >= 1, got {self.n_rows}x{self.n_cols}"
            )
        if not self.spacing_over_wavelength > 0:
            raise ValueError(
                f"spacing_over_wavelength must be > 0, got {self.spacing_over_wavelength}"
            )

    @property
    def n_elements(self) -> int:
        return self.n_rows * self.n_cols


def ula_steering(geom: UlaGeometry, theta: float) -> np.ndarray:
    """Unit-norm ULA response toward angle ``theta``.

    Entry k is exp(-j*2*pi*(delta/lambda)*k*sin(theta)) / sqrt(N), so the
    first entry is always 1/sqrt(N).
    """
    k = np.arange(geom.n_elements)
    phase = -TWO_PI * geom.spacing_over_wavelength * np.sin(theta) * k
    return np.exp(1j * phase) / np.sqrt(geom.n_elements)


def upa_steering(geom: UpaGeometry, elevation: float, azimuth: float) -> np.ndarray:
    """Unit-norm UPA response at (elevation, azimuth).

    Element (n_h, n_v) carries phase
    -2*pi*(delta/lambda)*(n_h*sin(elevation)*cos(azimuth) + n_v*cos(elevation)),
    flattened row-major with the column index n_v varying fastest.
    """
    n_h = np.arange(geom.n_rows)[:, None]
    n_v = np.arange(geom.n_cols)[None, :]
    u = np.sin(elevation) * np.cos(azimuth)
    v = np.cos(elevation)
    phase = -TWO_PI * geom.spacing_over_wavelength * (n_h * u + n_v * v)
    return np.exp(1j * phase).ravel() / np.sqrt(geom.n_elements)


def steering_inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Conjugate-transpose dot product a^H b of two equal-length vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def ula_spatial_frequency(geom: UlaGeometry, theta: float) -> float:
    """Spatial frequency (delta/lambda)*sin(theta) of a ULA beam toward theta."""
    return float(geom.spacing_over_wavelength * np.sin(theta))


def ula_inner_closed_form(geom: UlaGeometry, theta1: float, theta2: float) -> complex:
    """Dirichlet-kernel value of a^H(theta1) a(theta2) for a ULA.

    With d = (delta/lambda)*(sin theta2 - sin theta1) the product equals
    sin(pi*d*N) / (N*sin(pi*d)) * exp(-j*pi*d*(N-1)); it is exactly 1 whenever
    d is an integer (identical vectors), which is evaluated as the explicit
    limit rather than through the near-zero sine ratio.
    """
    n = geom.n_elements
    d = ula_spatial_frequency(geom, theta2) - ula_spatial_frequency(geom, theta1)
    if abs(d - round(d)) < 1e-12:
        return 1.0 + 0.0j
    kernel = np.sin(np.pi * d * n) / (n * np.sin(np.pi * d))
    return complex(kernel * np.exp(-1j * np.pi * d * (n - 1)))
