"""Real fields on the periodic torus stored as truncated Fourier coefficient arrays.

Coefficients follow the convention f(x) = sum_k c_k exp(i 2pi k.x / L), so the
k=0 coefficient of a real field is its mean value.  Arrays use numpy's fftn
layout along the spatial axes, with a leading component axis (1 for scalars,
dim for vectors).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform collocation grid on [0, L)^dim with N modes per axis."""

    dim: int = 2
    n: int = 32
    length: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0:
            raise ConfigurationError(f"n must be an even integer >= 4, got {self.n}")
        if self.length <= 0:
            raise ConfigurationError(f"length must be positive, got {self.length}")
        if not (0 < self.dealias_fraction <= 1):
            raise ConfigurationError("dealias_fraction must lie in (0, 1]")
        if self.dealias_fraction * self.n / 2 < 1:
            raise ConfigurationError("dealias_fraction * n/2 must be >= 1")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n) ** self.dim

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def num_modes(self) -> int:
        return self.n ** self.dim

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.n,
            "length": self.length,
            "dealias_fraction": self.dealias_fraction,
        }

    @staticmethod
    def from_dict(d: dict) -> "GridSpec":
        return GridSpec(
            dim=int(d["dim"]),
            n=int(d["n"]),
            length=float(d.get("length", 2.0 * np.pi)),
            dealias_fraction=float(d.get("dealias_fraction", 2.0 / 3.0)),
        )


@lru_cache(maxsize=64)
def integer_wavevectors(grid: GridSpec) -> tuple:
    """Integer wavevector component arrays (fftn layout), one per axis."""
    k1d = np.fft.fftfreq(grid.n, d=1.0 / grid.n)  # 0,1,...,N/2-1,-N/2,...,-1
    comps = np.meshgrid(*([k1d] * grid.dim), indexing="ij")
    for c in comps:
        c.setflags(write=False)
    return tuple(comps)


@lru_cache(maxsize=64)
def wavevectors(grid: GridSpec) -> tuple:
    """Physical wavevector components kappa = 2 pi k / L."""
    scale = 2.0 * np.pi / grid.length
    comps = tuple(scale * k for k in integer_wavevectors(grid))
    for c in comps:
        c.setflags(write=False)
    return comps


@lru_cache(maxsize=64)
def deriv_wavevectors(grid: GridSpec) -> tuple:
    """Wavevectors used for odd derivatives; the Nyquist mode is zeroed
    (its derivative sign is ambiguous on an even grid)."""
    comps = []
    for kappa in wavevectors(grid):
        k = kappa.copy()
        k[np.isclose(np.abs(k), np.pi * grid.n / grid.length)] = 0.0
        k.setflags(write=False)
        comps.append(k)
    return tuple(comps)


@lru_cache(maxsize=64)
def laplacian_symbol(grid: GridSpec) -> np.ndarray:
    """|kappa|^2 per mode, the (-Laplacian) eigenvalue array."""
    ksq = sum(k * k for k in wavevectors(grid))
    ksq.setflags(write=False)
    return ksq


@lru_cache(maxsize=64)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Per-axis 2/3-rule mask: keep |k_i| <= dealias_fraction * N/2."""
    cutoff = grid.dealias_fraction * grid.n / 2.0
    mask = np.ones(grid.shape, dtype=bool)
    for k in integer_wavevectors(grid):
        mask &= np.abs(k) <= cutoff + 1e-12
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=64)
def grid_points(grid: GridSpec) -> tuple:
    xs = [np.arange(grid.n) * (grid.length / grid.n) for _ in range(grid.dim)]
    comps = np.meshgrid(*xs, indexing="ij")
    for c in comps:
        c.setflags(write=False)
    return tuple(comps)


def _zero_index(grid: GridSpec) -> tuple:
    return (0,) * grid.dim


@dataclass(frozen=True)
class SpectralField:
    """Immutable truncated Fourier representation of a real field.

    coeffs has shape (components, n, ..., n); mean_zero marks fields whose
    k=0 mode is structurally absent (enforced at construction).
    """

    grid: GridSpec
    coeffs: np.ndarray
    mean_zero: bool = field(default=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == self.grid.dim:
            c = c[np.newaxis, ...]
        if c.shape[1:] != self.grid.shape:
            raise ConfigurationError(
                f"coefficient shape {c.shape} does not match grid {self.grid.shape}"
            )
        if c.shape[0] < 1:
            raise ConfigurationError("field needs at least one component")
        if self.mean_zero:
            c = c.copy()
            c[(slice(None),) + _zero_index(self.grid)] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.components == 1

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(grid: GridSpec, components: int = 1, mean_zero: bool = True) -> "SpectralField":
        return SpectralField(grid, np.zeros((components,) + grid.shape, dtype=np.complex128), mean_zero)

    @staticmethod
    def from_physical(grid: GridSpec, values: np.ndarray) -> "SpectralField":
        return to_spectral(grid, values)

    @staticmethod
    def single_mode(grid: GridSpec, k: tuple, amplitude) -> "SpectralField":
        """Real field amplitude * 2 Re[a exp(i 2pi k.x/L)] built from mode k and -k.

        amplitude is a scalar or a length-`components` sequence of complex
        amplitudes a_c for mode k; the conjugate mode is filled in.
        """
        amp = np.atleast_1d(np.asarray(amplitude, dtype=np.complex128))
        c = np.zeros((amp.size,) + grid.shape, dtype=np.complex128)
        idx = tuple(int(ki) % grid.n for ki in k)
        neg = tuple((-int(ki)) % grid.n for ki in k)
        for j, a in enumerate(amp):
            c[(j,) + idx] = a
            c[(j,) + neg] += np.conj(a)  # self-conjugate modes collapse to 2 Re(a)
        is_dc = all(int(ki) % grid.n == 0 for ki in k)
        return SpectralField(grid, c, mean_zero=not is_dc)

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar, self.mean_zero)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * (-1.0)

    def _check_compatible(self, other: "SpectralField"):
        if self.grid != other.grid or self.components != other.components:
            raise ConfigurationError("incompatible fields")

    # -- structure ---------------------------------------------------------

    def dealias(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * dealias_mask(self.grid), self.mean_zero)

    def drop_mean(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs, mean_zero=True)

    def mean_values(self) -> np.ndarray:
        """Spatial mean of each component (the k=0 coefficients)."""
        return self.coeffs[(slice(None),) + _zero_index(self.grid)].real.copy()

    def max_mean_magnitude(self) -> float:
        return float(np.max(np.abs(self.coeffs[(slice(None),) + _zero_index(self.grid)])))

    def l2(self) -> float:
        """Parseval L2 norm, sqrt(volume) * ||coeffs||_2 (exact for trig polynomials)."""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def hermitian_defect(self) -> float:
        """Max |c(-k) - conj(c(k))|; zero for a real field."""
        c = self.coeffs
        flipped = c.copy()
        for ax in range(1, 1 + self.grid.dim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        return float(np.max(np.abs(flipped - np.conj(c))))


def to_physical(f: SpectralField) -> np.ndarray:
    """Inverse transform to the collocation grid; returns a real array
    of shape (components, n, ..., n)."""
    axes = tuple(range(1, 1 + f.grid.dim))
    out = np.fft.ifftn(f.coeffs * f.grid.num_modes, axes=axes)
    return np.ascontiguousarray(out.real)


def to_spectral(grid: GridSpec, values: np.ndarray) -> SpectralField:
    """Forward transform of real grid data; output satisfies Hermitian symmetry."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == grid.dim:
        v = v[np.newaxis, ...]
    if v.shape[1:] != grid.shape:
        raise ConfigurationError(
            f"physical data shape {v.shape} does not match grid {grid.shape}"
        )
    axes = tuple(range(1, 1 + grid.dim))
    coeffs = np.fft.fftn(v, axes=axes) / grid.num_modes
    return SpectralField(grid, coeffs)


def random_field(grid: GridSpec, components: int, rng: np.random.Generator,
                 sigma: float = 2.0, amplitude: float = 1.0,
                 mean_zero: bool = True, dealias: bool = True,
                 kmax: int | None = None) -> SpectralField:
    """Random real field with spectral envelope |c_k| ~ |k|^(-sigma).

    Gaussian coefficients with random phases; lives inside the dealias ball
    by default so products stay alias-free.  kmax restricts the support to
    |k_i| <= kmax (low-mode probes).
    """
    shape = (components,) + grid.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kmag = np.sqrt(sum(k * k for k in integer_wavevectors(grid)))
    envelope = np.where(kmag > 0, np.maximum(kmag, 1.0) ** (-sigma), 0.0 if mean_zero else 1.0)
    if kmax is not None:
        support = np.ones(grid.shape, dtype=bool)
        for k in integer_wavevectors(grid):
            support &= np.abs(k) <= kmax
        envelope = envelope * support
    f = SpectralField(grid, noise * envelope, mean_zero=mean_zero)
    # hermitianize: keep the real part of the inverse transform
    f = to_spectral(grid, to_physical(f))
    if kmax is not None:
        f = SpectralField(grid, f.coeffs * support, mean_zero=mean_zero)
    if mean_zero:
        f = f.drop_mean()
    if dealias:
        f = f.dealias()
    norm = f.l2()
    if norm > 0:
        f = f * (amplitude / norm)
    return f


def replace_coeffs(f: SpectralField, coeffs: np.ndarray) -> SpectralField:
    return replace(f, coeffs=coeffs)
