"""Periodic grids and spectral calculus on the torus [-pi, pi]^2.

Fourier convention used throughout the package::

    f_hat(k) = (2 pi)^-2 * integral f(x) exp(-i k.x) dx

so that ||f||_2^2 = (2 pi)^2 * sum_k |f_hat(k)|^2 and the torus convolution
(f * g)(x) = integral f(x - y) g(y) dy has coefficients (2 pi)^2 f_hat g_hat.

Physical samples live at the cell corners x_j = -pi + j*h, h = 2 pi / n,
stored row-major with x2 varying fastest (``values[i, j] = f(x1_i, x2_j)``).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi
AREA = TWO_PI**2


@dataclass(frozen=True)
class GridSpec:
    """Uniform n x n periodic grid on [-pi, pi]^2."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n!r}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def dealias_cutoff(self) -> int:
        return self.n // 3

    @cached_property
    def x(self) -> np.ndarray:
        return -math.pi + self.spacing * np.arange(self.n)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order (Nyquist carried as -n/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        return self.k[:, None], self.k[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return k1**2 + k2**2

    @cached_property
    def kinf(self) -> np.ndarray:
        """l-infinity norm |k|_inf of every mode."""
        k1, k2 = self.wavenumbers
        return np.maximum(np.abs(k1), np.abs(k2))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i k x_0) with x_0 = -pi turns the raw DFT into the torus coefficient
        k1, k2 = self.wavenumbers
        return np.where((k1 + k2).astype(np.int64) % 2 == 0, 1.0, -1.0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return self.kinf <= self.dealias_cutoff

    @cached_property
    def offset_distance(self) -> np.ndarray:
        """Periodic Euclidean distance from the grid point at index (0, 0)."""
        i = np.arange(self.n)
        d = np.minimum(i, self.n - i) * self.spacing
        return np.hypot(d[:, None], d[None, :])

    @cached_property
    def offset_distance_inf(self) -> np.ndarray:
        i = np.arange(self.n)
        d = np.minimum(i, self.n - i) * self.spacing
        return np.maximum(d[:, None], d[None, :])

    def periodic_distance(self, center: tuple[float, float]) -> np.ndarray:
        """Euclidean torus distance from ``center`` to every grid point."""
        x1, x2 = self.mesh
        d1 = _wrap(x1 - center[0])
        d2 = _wrap(x2 - center[1])
        return np.hypot(d1, d2)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fft2(values) * self._phase / self.n**2

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(coeffs * self._phase).real * self.n**2


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field with synchronized physical and Fourier representations."""

    grid: GridSpec
    physical: np.ndarray
    spectral: np.ndarray

    @classmethod
    def from_physical(cls, grid: GridSpec, values) -> SpectralField:
        values = np.array(values, dtype=float)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"expected shape {(grid.n, grid.n)}, got {values.shape}")
        return cls(grid, values, grid.forward(values))

    @classmethod
    def from_spectral(cls, grid: GridSpec, coeffs) -> SpectralField:
        coeffs = np.array(coeffs, dtype=complex)
        values = grid.inverse(coeffs)
        return cls(grid, values, grid.forward(values))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> SpectralField:
        x1, x2 = grid.mesh
        return cls.from_physical(grid, np.broadcast_to(fn(x1, x2), x1.shape))

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls.from_physical(grid, np.zeros((grid.n, grid.n)))

    @property
    def mean(self) -> float:
        return float(self.spectral[0, 0].real)

    @property
    def mean_free(self) -> bool:
        scale = np.abs(self.spectral).max()
        return bool(abs(self.spectral[0, 0]) <= 1e-12 * scale) if scale > 0 else True

    def remove_mean(self) -> SpectralField:
        return SpectralField.from_physical(self.grid, self.physical - self.mean)

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField.from_physical(self.grid, self.physical + other.physical)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return SpectralField.from_physical(self.grid, self.physical - other.physical)

    def __mul__(self, c: float) -> SpectralField:
        return SpectralField(self.grid, self.physical * c, self.spectral * c)

    __rmul__ = __mul__

    def shifted(self, a: tuple[int, int]) -> SpectralField:
        """Translate by whole grid cells."""
        return SpectralField.from_physical(self.grid, np.roll(self.physical, a, axis=(0, 1)))

    def l2_spectral(self) -> float:
        return math.sqrt(AREA * float(np.sum(np.abs(self.spectral) ** 2)))


@dataclass(frozen=True, eq=False)
class VelocityField:
    u1: SpectralField
    u2: SpectralField

    def divergence(self) -> SpectralField:
        k1, k2 = self.u1.grid.wavenumbers
        return SpectralField.from_spectral(
            self.u1.grid, 1j * k1 * self.u1.spectral + 1j * k2 * self.u2.spectral
        )

    def curl(self) -> SpectralField:
        k1, k2 = self.u1.grid.wavenumbers
        return SpectralField.from_spectral(
            self.u1.grid, 1j * k1 * self.u2.spectral - 1j * k2 * self.u1.spectral
        )

    def l2_sq(self) -> float:
        return self.u1.l2_spectral() ** 2 + self.u2.l2_spectral() ** 2


# -- Dirichlet kernels ------------------------------------------------------


def dirichlet_kernel_1d(N: int, z):
    """d_N(z) = sum_{|k|<=N} exp(ikz) = sin((2N+1) z/2) / sin(z/2)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    z = np.asarray(z, dtype=float)
    s = np.sin(z / 2)
    small = np.abs(s) < 1e-12
    out = np.where(small, 2 * N + 1.0, np.sin((2 * N + 1) * z / 2) / np.where(small, 1.0, s))
    return float(out) if out.ndim == 0 else out


def dirichlet_kernel_2d(N: int, z1, z2):
    return dirichlet_kernel_1d(N, z1) * dirichlet_kernel_1d(N, z2)


def dirichlet_l2_mass(N: int, n: int | None = None) -> float:
    """Integral of D_N^2 over the torus, by a Plancherel sum on a grid resolving D_N."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if n is None:
        n = max(8, 1 << math.ceil(math.log2(8 * (N + 1))))
    grid = GridSpec(n)
    if N >= n // 2:
        raise ValueError(f"grid n={n} cannot resolve D_{N}")
    x1, x2 = grid.mesh
    field = SpectralField.from_physical(grid, dirichlet_kernel_2d(N, x1, x2))
    return AREA * float(np.sum(np.abs(field.spectral) ** 2))


def dirichlet_tail_mass(N: int, rho: float) -> float:
    """Integral of d_N(x)^2 over [rho, pi] by adaptive quadrature."""
    if not 0.0 < rho < math.pi:
        raise ValueError("rho must lie in (0, pi)")
    value, _ = integrate.quad(
        lambda x: dirichlet_kernel_1d(N, x) ** 2,
        rho,
        math.pi,
        limit=max(200, 20 * (N + 1)),
        epsabs=1e-12,
        epsrel=1e-11,
    )
    return value


# -- projections and calculus -----------------------------------------------


def project_low_modes(f: SpectralField, N: int) -> SpectralField:
    """Keep the modes with |k|_inf < N (l-infinity ball), zero the rest."""
    if N < 1 or N > f.grid.dealias_cutoff:
        raise ValueError(f"N={N} outside the resolved band [1, {f.grid.dealias_cutoff}]")
    coeffs = np.where(f.grid.kinf < N, f.spectral, 0.0)
    return SpectralField(f.grid, f.grid.inverse(coeffs), coeffs)


def convolve(f: SpectralField, g: SpectralField) -> SpectralField:
    """Torus convolution (f * g)(x) = integral f(x - y) g(y) dy, exact on the grid lattice."""
    return SpectralField.from_spectral(f.grid, AREA * f.spectral * g.spectral)


def biot_savart(omega: SpectralField) -> VelocityField:
    """Divergence-free velocity with curl u = omega: u = grad^perp of inverse-Laplacian omega."""
    if not omega.mean_free:
        raise ValueError("Biot-Savart needs mean-free vorticity")
    grid = omega.grid
    k1, k2 = grid.wavenumbers
    ksq = np.where(grid.ksq == 0, 1.0, grid.ksq)
    w = np.where(grid.ksq == 0, 0.0, omega.spectral) / ksq
    # Nyquist rows/columns carry no odd derivative on a real grid
    nyq = grid.n // 2
    d1 = np.where(np.abs(k1) == nyq, 0.0, k1)
    d2 = np.where(np.abs(k2) == nyq, 0.0, k2)
    u1 = SpectralField.from_spectral(grid, 1j * d2 * w)
    u2 = SpectralField.from_spectral(grid, -1j * d1 * w)
    return VelocityField(u1, u2)


def gradient_l2(f: SpectralField) -> float:
    return math.sqrt(AREA * float(np.sum(f.grid.ksq * np.abs(f.spectral) ** 2)))


# -- snapshot files ---------------------------------------------------------

SNAPSHOT_MAGIC = b"ADLB"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path, field: SpectralField, time: float, nu: float) -> None:
    n = field.grid.n
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, n, n, time, nu))
        fh.write(np.ascontiguousarray(field.physical, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[SpectralField, float, float]:
    """Return (field, time, nu) from an ADLB snapshot."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, version, nx, ny, time, nu = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    if nx != ny:
        raise SnapshotFormatError("only square grids are supported")
    body = data[_HEADER.size :]
    if len(body) != 8 * nx * ny:
        raise SnapshotFormatError("payload size does not match header")
    values = np.frombuffer(body, dtype="<f8").reshape(nx, ny)
    return SpectralField.from_physical(GridSpec(int(nx)), values), time, nu
