"""Generators, fractional powers, semigroups, differential operators and norms.

On the torus every generator is diagonal per Fourier mode (the vector
elliptic generator block-diagonalizes into the subspaces parallel and
transverse to k), so fractional powers and semigroups are exact per-mode
scalar functions of the eigenvalues.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SingularOperatorError
from .fields import (
    GridSpec,
    SpectralField,
    deriv_wavevectors,
    laplacian_symbol,
    to_physical,
    wavevectors,
    _zero_index,
)

MEAN_TOL = 1e-11


class OperatorKind(enum.Enum):
    STOKES = "stokes"          # -P Laplacian on solenoidal vector fields
    GAMMA = "gamma"            # -c_perp Lap - (c_para - c_perp) grad div
    LAPLACE = "laplace"        # -Laplacian, componentwise


@dataclass(frozen=True)
class OperatorSymbol:
    """Per-mode symbol of a generator raised to a real power.

    coeff_perp scales |kappa|^2 (the whole symbol for STOKES/LAPLACE and the
    transverse eigenvalue for GAMMA); coeff_para is GAMMA's eigenvalue factor
    on the span of k (unit-viscosity defaults 1 and 2).
    """

    kind: OperatorKind
    grid: GridSpec
    power: float = 1.0
    coeff_perp: float = 1.0
    coeff_para: float = 2.0

    def __post_init__(self):
        if self.coeff_perp <= 0 or self.coeff_para <= 0:
            raise ConfigurationError("operator coefficients must be positive")

    def with_power(self, power: float) -> "OperatorSymbol":
        return OperatorSymbol(self.kind, self.grid, power, self.coeff_perp, self.coeff_para)

    def eigenvalues(self) -> tuple:
        """Eigenvalue arrays per invariant subspace: one entry for scalar-like
        action, two (perp, para) for GAMMA acting on vectors."""
        ksq = laplacian_symbol(self.grid)
        if self.kind is OperatorKind.GAMMA:
            return (self.coeff_perp * ksq, self.coeff_para * ksq)
        return (self.coeff_perp * ksq,)

    def min_positive_eigenvalue(self) -> float:
        lam1 = lambda1(self.grid)
        if self.kind is OperatorKind.GAMMA:
            return min(self.coeff_perp, self.coeff_para) * lam1
        return self.coeff_perp * lam1


def stokes_operator(grid: GridSpec, power: float = 1.0, coeff: float = 1.0) -> OperatorSymbol:
    return OperatorSymbol(OperatorKind.STOKES, grid, power, coeff_perp=coeff)


def gamma_operator(grid: GridSpec, power: float = 1.0,
                   coeff_perp: float = 1.0, coeff_para: float = 2.0) -> OperatorSymbol:
    return OperatorSymbol(OperatorKind.GAMMA, grid, power, coeff_perp, coeff_para)


def laplace_operator(grid: GridSpec, power: float = 1.0, coeff: float = 1.0) -> OperatorSymbol:
    return OperatorSymbol(OperatorKind.LAPLACE, grid, power, coeff_perp=coeff)


def lambda1(grid: GridSpec) -> float:
    """Smallest positive Laplace eigenvalue on mean-zero torus fields, (2 pi / L)^2."""
    return (2.0 * np.pi / grid.length) ** 2


# ---------------------------------------------------------------------------
# Leray projection and parallel/transverse splitting


def _split_parallel(v_coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Component of v parallel to k per mode: k (k . v) / |k|^2 (zero at k=0)."""
    kap = wavevectors(grid)
    ksq = laplacian_symbol(grid).copy()
    ksq[_zero_index(grid)] = 1.0
    kdotv = sum(kap[i] * v_coeffs[i] for i in range(grid.dim)) / ksq
    out = np.stack([kap[i] * kdotv for i in range(grid.dim)])
    out[(slice(None),) + _zero_index(grid)] = 0.0
    return out


def leray_project(v: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: v - k (k.v)/|k|^2, k=0 mode zeroed."""
    if v.is_scalar:
        raise TypeError("Leray projection expects a vector field")
    para = _split_parallel(v.coeffs, v.grid)
    out = v.coeffs - para
    out[(slice(None),) + _zero_index(v.grid)] = 0.0
    return SpectralField(v.grid, out, mean_zero=True)


# ---------------------------------------------------------------------------
# Spectral functions of the generators


def _check_mean_mode(f: SpectralField, op: OperatorSymbol):
    if f.max_mean_magnitude() > MEAN_TOL * max(1.0, float(np.max(np.abs(f.coeffs)))):
        raise SingularOperatorError(
            f"{op.kind.value} with power {op.power} needs a mean-zero field"
        )


def _component_check(op: OperatorSymbol, f: SpectralField):
    if op.grid != f.grid:
        raise ConfigurationError("operator and field grids differ")
    if op.kind is OperatorKind.STOKES and f.is_scalar:
        raise TypeError("Stokes operator expects a vector field")


def spectral_function(op: OperatorSymbol, fn, f: SpectralField) -> SpectralField:
    """Apply fn(generator) per mode, respecting GAMMA's two invariant subspaces.

    fn maps an eigenvalue array to a weight array; fn(0) is applied at k=0.
    """
    _component_check(op, f)
    grid = op.grid
    if op.kind is OperatorKind.GAMMA and not f.is_scalar:
        eig_perp, eig_para = op.eigenvalues()
        para = _split_parallel(f.coeffs, grid)
        out = fn(eig_perp) * (f.coeffs - para) + fn(eig_para) * para
        # k = 0: both eigenvalues vanish; act as the scalar fn(0)
        zi = (slice(None),) + _zero_index(grid)
        out[zi] = fn(np.zeros(1))[0] * f.coeffs[zi]
        return SpectralField(grid, out, f.mean_zero)
    eig = op.eigenvalues()[0]
    coeffs = f.coeffs
    if op.kind is OperatorKind.STOKES:
        coeffs = leray_project(f).coeffs
    return SpectralField(grid, fn(eig) * coeffs, f.mean_zero)


def apply_operator(op: OperatorSymbol, f: SpectralField) -> SpectralField:
    """Fractional power action: per-mode multiplication by eigenvalue**power.

    Zero eigenvalues map to zero for power > 0 and to identity for power = 0;
    negative powers require a mean-zero field.
    """
    _component_check(op, f)
    power = op.power
    if power < 0:
        _check_mean_mode(f, op)

    def fn(eig):
        if power == 0:
            return np.ones_like(eig)
        with np.errstate(divide="ignore"):
            out = np.where(eig > 0, eig, 1.0) ** power
        return np.where(eig > 0, out, 0.0)

    out = spectral_function(op, fn, f)
    if power < 0:
        out = out.drop_mean()
    return out


def semigroup_apply(op: OperatorSymbol, t: float, f: SpectralField) -> SpectralField:
    """exp(-t * generator) applied per mode; t = 0 is the identity."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    if op.power != 1.0:
        raise ConfigurationError("semigroup_apply expects the generator (power=1)")
    return spectral_function(op, lambda eig: np.exp(-t * eig), f)


# ---------------------------------------------------------------------------
# Differential operators (spectral)


def partial_derivative(f: SpectralField, axis: int) -> SpectralField:
    k = deriv_wavevectors(f.grid)[axis]
    return SpectralField(f.grid, 1j * k * f.coeffs, mean_zero=True)


def gradient(f: SpectralField) -> np.ndarray:
    """d f_c / d x_a as a complex array of shape (components, dim, *grid)."""
    ks = deriv_wavevectors(f.grid)
    return np.stack([1j * ks[a] * f.coeffs for a in range(f.grid.dim)], axis=1)


def divergence(v: SpectralField) -> SpectralField:
    if v.is_scalar:
        raise TypeError("divergence expects a vector field")
    ks = deriv_wavevectors(v.grid)
    out = sum(1j * ks[a] * v.coeffs[a] for a in range(v.grid.dim))
    return SpectralField(v.grid, out[np.newaxis], mean_zero=True)


def rot(f: SpectralField) -> SpectralField:
    """Curl. 3D vector -> vector; 2D vector -> scalar vorticity;
    2D scalar -> vector (d_y f, -d_x f)."""
    ks = deriv_wavevectors(f.grid)
    if f.grid.dim == 3:
        if f.is_scalar:
            raise TypeError("3D rot expects a vector field")
        u = f.coeffs
        out = np.stack([
            1j * (ks[1] * u[2] - ks[2] * u[1]),
            1j * (ks[2] * u[0] - ks[0] * u[2]),
            1j * (ks[0] * u[1] - ks[1] * u[0]),
        ])
        return SpectralField(f.grid, out, mean_zero=True)
    if f.is_scalar:
        w = f.coeffs[0]
        out = np.stack([1j * ks[1] * w, -1j * ks[0] * w])
        return SpectralField(f.grid, out, mean_zero=True)
    u = f.coeffs
    out = 1j * (ks[0] * u[1] - ks[1] * u[0])
    return SpectralField(f.grid, out[np.newaxis], mean_zero=True)


# ---------------------------------------------------------------------------
# Norms


@dataclass(frozen=True)
class NormRequest:
    """A norm specification: Lebesgue L^s, Sobolev W^{k,s}, or a fractional
    power norm ||op^exp . ||_s for one of the three generators."""

    space: str                  # "lp" | "wks" | "xalpha" | "ybeta" | "zgamma"
    s: float
    k: int = 0
    exp: float = 0.0

    def __post_init__(self):
        if self.space not in ("lp", "wks", "xalpha", "ybeta", "zgamma"):
            raise ValueError(f"unknown norm space {self.space!r}")
        if not (1 < self.s < np.inf):
            raise ValueError(f"Lebesgue exponent must satisfy 1 < s < inf, got {self.s}")
        if self.space == "wks" and self.k < 0:
            raise ValueError("derivative order k must be nonnegative")
        if self.space in ("xalpha", "ybeta", "zgamma") and not (0 <= self.exp <= 1):
            raise ValueError(f"fractional exponent must lie in [0, 1], got {self.exp}")

    @staticmethod
    def lp(s: float) -> "NormRequest":
        return NormRequest("lp", s)

    @staticmethod
    def wks(k: int, s: float) -> "NormRequest":
        return NormRequest("wks", s, k=k)

    @staticmethod
    def xalpha(alpha: float, p: float) -> "NormRequest":
        return NormRequest("xalpha", p, exp=alpha)

    @staticmethod
    def ybeta(beta: float, q: float) -> "NormRequest":
        return NormRequest("ybeta", q, exp=beta)

    @staticmethod
    def zgamma(gamma: float, r: float) -> "NormRequest":
        return NormRequest("zgamma", r, exp=gamma)


def lebesgue_norm(f: SpectralField, s: float) -> float:
    """L^s norm by grid quadrature of the pointwise Euclidean magnitude."""
    phys = to_physical(f)
    mag_sq = np.sum(phys * phys, axis=0)
    if s == 2:
        return float(np.sqrt(np.sum(mag_sq) * f.grid.cell_volume))
    return float(np.sum(mag_sq ** (s / 2.0)) * f.grid.cell_volume) ** (1.0 / s)


def sobolev_norm(f: SpectralField, k: int, s: float) -> float:
    """Sum of L^s norms of all spectral derivative tensors up to order k."""
    total = lebesgue_norm(f, s)
    current = f
    for _ in range(k):
        g = gradient(current)  # (comp, dim, *grid)
        stacked = g.reshape((-1,) + f.grid.shape)
        current = SpectralField(f.grid, stacked, mean_zero=True)
        total += lebesgue_norm(current, s)
    return total


def norm(f: SpectralField, req: NormRequest, op: OperatorSymbol | None = None) -> float:
    """Evaluate a NormRequest; fractional norms use unit-coefficient generators
    unless an explicit operator symbol is supplied."""
    if req.space == "lp":
        return lebesgue_norm(f, req.s)
    if req.space == "wks":
        return sobolev_norm(f, req.k, req.s)
    if req.space == "xalpha" and f.is_scalar:
        raise TypeError("X^alpha norms are defined for vector fields")
    if op is None:
        if req.space == "xalpha":
            op = stokes_operator(f.grid)  # projects inside apply_operator
        elif req.space == "ybeta":
            op = gamma_operator(f.grid)
        else:
            op = laplace_operator(f.grid)
    return lebesgue_norm(apply_operator(op.with_power(req.exp), f), req.s)


def fractional_l2(f: SpectralField, op: OperatorSymbol, exp: float) -> float:
    """Fast ||op^exp f||_2 via Parseval (solver hot path; equals the
    quadrature-based norm to machine precision for truncated fields)."""
    g = apply_operator(op.with_power(exp), f)
    return g.l2()


def divergence_defect(v: SpectralField) -> float:
    """||div v||_2 relative to ||v||_2 (0 for solenoidal fields)."""
    denom = v.l2()
    if denom == 0:
        return 0.0
    return divergence(v).l2() / denom
