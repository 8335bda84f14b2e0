"""Pseudospectral evaluation of the coupling terms and the dissipation function.

All quadratic products are formed pointwise on the collocation grid and
truncated by the 2/3 rule afterwards, which is alias-free for fields already
supported inside the dealias ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, PreconditionError
from .fields import GridSpec, SpectralField, to_physical, to_spectral
from .operators import (
    divergence_defect,
    gamma_operator,
    gradient,
    laplace_operator,
    leray_project,
    rot,
    stokes_operator,
)

SOLENOIDAL_TOL = 1e-8


@dataclass(frozen=True)
class CouplingParams:
    """Material constants of the coupled system.

    Defaults follow the normalization rho = 1, mu + mu_r = 1, c0 = 1/2,
    ca = 1/4, cd = 3/4, kappa = 1, cv = 1; the angular viscosities must
    satisfy c0 + cd > ca.
    """

    mu: float = 0.9
    mu_r: float = 0.1
    c0: float = 0.5
    ca: float = 0.25
    cd: float = 0.75
    kappa: float = 1.0
    cv: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        for name in ("mu", "c0", "ca", "cd", "kappa", "cv", "rho"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.mu_r < 0:
            raise ConfigurationError("mu_r must be nonnegative")
        if not self.c0 + self.cd > self.ca:
            raise ConfigurationError("coefficients must satisfy c0 + cd > ca")

    # generator coefficients after dividing the equations by rho (and rho*cv)
    @property
    def stokes_coeff(self) -> float:
        return (self.mu + self.mu_r) / self.rho

    @property
    def gamma_perp_coeff(self) -> float:
        return (self.ca + self.cd) / self.rho

    @property
    def gamma_para_coeff(self) -> float:
        return (self.c0 + 2.0 * self.cd) / self.rho

    @property
    def heat_coeff(self) -> float:
        return self.kappa / (self.rho * self.cv)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("mu", "mu_r", "c0", "ca", "cd", "kappa", "cv", "rho")}

    @staticmethod
    def from_dict(d: dict) -> "CouplingParams":
        return CouplingParams(**{k: float(v) for k, v in d.items()})


def generators(grid: GridSpec, params: CouplingParams) -> tuple:
    """The three generators (velocity, microrotation, temperature) for the
    given material constants."""
    a_op = stokes_operator(grid, coeff=params.stokes_coeff)
    g_op = gamma_operator(grid, coeff_perp=params.gamma_perp_coeff,
                          coeff_para=params.gamma_para_coeff)
    b_op = laplace_operator(grid, coeff=params.heat_coeff)
    return a_op, g_op, b_op


@dataclass(frozen=True)
class ForcingSpec:
    """Temperature-driven body force: zero, linear c*theta, or the bounded
    saturating form c * scale * tanh(theta/scale).  Both satisfy f(0) = 0 and
    are globally Lipschitz with constant |c|."""

    kind: str = "zero"                   # "zero" | "linear" | "tanh"
    c: tuple = field(default_factory=tuple)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "linear", "tanh"):
            raise ConfigurationError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "tanh" and self.scale <= 0:
            raise ConfigurationError("tanh forcing needs a positive scale")
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))

    @property
    def lipschitz(self) -> float:
        if self.kind == "zero":
            return 0.0
        return float(np.linalg.norm(self.c))

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        """Evaluate pointwise on physical temperature values; returns an array
        of shape (len(c),) + theta.shape."""
        c = np.asarray(self.c, dtype=np.float64)
        if self.kind == "zero" or c.size == 0:
            return np.zeros((max(c.size, 1),) + theta.shape)
        if self.kind == "linear":
            return c.reshape((-1,) + (1,) * theta.ndim) * theta
        sat = self.scale * np.tanh(theta / self.scale)
        return c.reshape((-1,) + (1,) * theta.ndim) * sat

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": list(self.c), "scale": self.scale}

    @staticmethod
    def from_dict(d: dict) -> "ForcingSpec":
        return ForcingSpec(kind=d.get("kind", "zero"), c=tuple(d.get("c", ())),
                           scale=float(d.get("scale", 1.0)))

    @staticmethod
    def zero() -> "ForcingSpec":
        return ForcingSpec("zero", ())


def evaluate_forcing(spec: ForcingSpec, theta: SpectralField, components: int) -> SpectralField:
    """Transform f(theta) back to spectral space, dealiased."""
    if spec.kind == "zero":
        return SpectralField.zero(theta.grid, components, mean_zero=False)
    vals = spec(to_physical(theta)[0])
    if vals.shape[0] != components:
        raise ConfigurationError(
            f"forcing has {vals.shape[0]} components, expected {components}")
    return to_spectral(theta.grid, vals).dealias()


def _check_grids(*fs: SpectralField):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise ConfigurationError("fields live on different grids")


def require_solenoidal(u: SpectralField, tol: float = SOLENOIDAL_TOL):
    defect = divergence_defect(u)
    if defect > tol:
        raise PreconditionError(f"velocity is not solenoidal (relative div {defect:.2e})")


def advect(u: SpectralField, w: SpectralField) -> SpectralField:
    """(u . grad) w evaluated pointwise from spectral derivatives, dealiased."""
    _check_grids(u, w)
    if u.is_scalar:
        raise TypeError("advecting velocity must be a vector field")
    u_phys = to_physical(u)
    grid = u.grid
    dw = gradient(w)  # (comp, dim, *grid) spectral
    out = np.zeros((w.components,) + grid.shape)
    for c in range(w.components):
        dwc_phys = to_physical(SpectralField(grid, dw[c], mean_zero=True))
        for a in range(grid.dim):
            out[c] += u_phys[a] * dwc_phys[a]
    return to_spectral(grid, out).dealias()


def _phys_gradients(f: SpectralField) -> np.ndarray:
    """Physical-space gradient array of shape (components, dim, *grid)."""
    grid = f.grid
    g = gradient(f)
    out = np.empty((f.components, grid.dim) + grid.shape)
    for c in range(f.components):
        out[c] = to_physical(SpectralField(grid, g[c], mean_zero=True))
    return out


def dissipation_phi(u: SpectralField, v: SpectralField,
                    om: SpectralField, psi: SpectralField,
                    params: CouplingParams, dealias: bool = True) -> SpectralField:
    """Bilinear dissipation function evaluated pointwise, dealiased.

    The five parts: symmetric strain coupling 2 mu D(u):D(v); relative
    rotation 4 mu_r (rot u / 2 - om).(rot v / 2 - psi); compressive
    c0 div om div psi; gradient (ca+cd) grad om : grad psi; and transposed
    (cd-ca) grad om : (grad psi)^T.  In 2D the microrotation is scalar and
    the last two collapse to (ca+cd) grad om . grad psi.

    dealias=False keeps the aliased spectrum whose grid values are the exact
    pointwise quadratic form (used by the nonnegativity oracle); the k=0 mode
    (the integral of the product) is identical either way.
    """
    _check_grids(u, v, om, psi)
    grid = u.grid
    dim = grid.dim

    du = _phys_gradients(u)   # (dim, dim, *grid)
    dv = _phys_gradients(v)
    d_u = 0.5 * (du + np.swapaxes(du, 0, 1))
    d_v = 0.5 * (dv + np.swapaxes(dv, 0, 1))
    phi = 2.0 * params.mu * np.sum(d_u * d_v, axis=(0, 1))

    rot_u = to_physical(rot(u))
    rot_v = to_physical(rot(v))
    om_phys = to_physical(om)
    psi_phys = to_physical(psi)
    rel_u = 0.5 * rot_u - om_phys
    rel_v = 0.5 * rot_v - psi_phys
    phi = phi + 4.0 * params.mu_r * np.sum(rel_u * rel_v, axis=0)

    dom = _phys_gradients(om)
    dpsi = _phys_gradients(psi)
    if dim == 3 and not om.is_scalar:
        div_om = np.trace(np.swapaxes(dom, 0, 1))  # sum_i d_i om_i
        div_psi = np.trace(np.swapaxes(dpsi, 0, 1))
        phi = phi + params.c0 * div_om * div_psi
        grad_om = np.swapaxes(dom, 0, 1)  # (i, j) = d_i om_j
        grad_psi = np.swapaxes(dpsi, 0, 1)
        phi = phi + (params.ca + params.cd) * np.sum(grad_om * grad_psi, axis=(0, 1))
        phi = phi + (params.cd - params.ca) * np.sum(
            grad_om * np.swapaxes(grad_psi, 0, 1), axis=(0, 1))
    else:
        # planar microrotation: only the transverse gradient part survives
        phi = phi + (params.ca + params.cd) * np.sum(dom[0] * dpsi[0], axis=0)

    out = to_spectral(grid, phi)
    return out.dealias() if dealias else out


def dissipation_phi_diag(u: SpectralField, om: SpectralField,
                         params: CouplingParams) -> SpectralField:
    return dissipation_phi(u, u, om, om, params)


def assemble_rhs(u: SpectralField, om: SpectralField, th: SpectralField,
                 params: CouplingParams, f: ForcingSpec, g: ForcingSpec,
                 *, linear_only: bool = False,
                 check_solenoidal: bool = True) -> tuple:
    """Right-hand sides of the projected system.

    Velocity:       F = -P(u.grad)u + (2 mu_r / rho) P rot om + P f(theta)
    Microrotation:  G = -(u.grad)om - (4 mu_r / rho) om + (2 mu_r / rho) rot u + g(theta)
    Temperature:    H = -(u.grad)th + Phi(u; om) / (rho cv)

    linear_only drops transport and the dissipation function (linear-regime
    diagnostics).  All outputs are dealiased; F is solenoidal.
    """
    _check_grids(u, om, th)
    if check_solenoidal:
        require_solenoidal(u)
    grid = u.grid
    two_mur = 2.0 * params.mu_r / params.rho

    f_rhs = two_mur * leray_project(rot(om)) if params.mu_r > 0 else \
        SpectralField.zero(grid, grid.dim)
    if f.kind != "zero":
        f_rhs = f_rhs + leray_project(evaluate_forcing(f, th, grid.dim))
    if not linear_only:
        f_rhs = f_rhs - leray_project(advect(u, u))

    g_rhs = (-2.0 * two_mur) * om + two_mur * rot(u) if params.mu_r > 0 else \
        SpectralField.zero(grid, om.components, mean_zero=False)
    if g.kind != "zero":
        g_rhs = g_rhs + evaluate_forcing(g, th, om.components)
    if not linear_only:
        g_rhs = g_rhs - advect(u, om)

    h_rhs = SpectralField.zero(grid, 1, mean_zero=False)
    if not linear_only:
        phi = dissipation_phi(u, u, om, om, params)
        h_rhs = (1.0 / (params.rho * params.cv)) * phi - advect(u, th)

    return f_rhs.dealias(), g_rhs.dealias(), h_rhs.dealias()
