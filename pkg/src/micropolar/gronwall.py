"""Generalized Gronwall inequality with weakly singular kernels.

For  y(t) <= sum_i a_i t^(-alpha_i) + sum_j b_j int_0^t (t-s)^(-beta_j) y(s) ds
with exponents in [0, 1), iterating the inequality n+1 times with
n = floor(beta/(1-beta)) + 1 removes the kernel singularity and a classical
Gronwall step controls the remainder.  The bound below carries explicit
constants so it provably dominates the fixed point of the equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import beta_function


def _validate(a, alphas, b, betas):
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    if a.shape != alphas.shape or b.shape != betas.shape:
        raise ValueError("coefficient and exponent lists must match in length")
    if np.any(a <= 0) or np.any(b < 0):
        raise ValueError("coefficients a_i must be positive, b_j nonnegative")
    if np.any(alphas < 0) or np.any(alphas >= 1) or np.any(betas < 0) or np.any(betas >= 1):
        raise ValueError("all exponents must lie in [0, 1)")
    return a, alphas, b, betas


def singular_power_count(beta_max: float) -> int:
    """n = [beta/(1-beta)] + 1; then (n+1)(1-beta) > 1."""
    return int(np.floor(beta_max / (1.0 - beta_max))) + 1


@dataclass
class GronwallBound:
    times: np.ndarray
    values: np.ndarray
    n_singular: int
    beta_collect: float   # the common beta-function factor B(1-beta_max, 1-alpha_max)


def gronwall_bound(a, alphas, b, betas, t_max: float, n_points: int = 400,
                   times: np.ndarray | None = None) -> GronwallBound:
    """Closed-form majorant of the inequality on (0, t_max].

    With B1(t) = sum_j b_j t^(1-beta_j), Bc the collected beta-function factor,
    and n the singularity-removal count:

        y(t) <= a(t) * sum_{k<=n} (Bc B1(t))^k
                     * (1 + Bc^n B1(t)^(n+1) e^{Bc^n B1(t)^(n+1)} / (1-alpha_max))
    """
    a, alphas, b, betas = _validate(a, alphas, b, betas)
    if times is None:
        times = np.linspace(0.0, t_max, n_points + 1)[1:]
    times = np.asarray(times, dtype=np.float64)
    a_curve = sum(ai * times ** (-al) for ai, al in zip(a, alphas))
    if np.all(b == 0):
        return GronwallBound(times, a_curve, 0, 1.0)
    beta_max = float(np.max(betas[b > 0]))
    alpha_max = float(np.max(alphas))
    n = singular_power_count(beta_max)
    # collected factor dominating every beta value met while iterating
    eps = max(alpha_max, beta_max)
    bc = max(1.0, beta_function(1.0 - beta_max, 1.0 - eps))
    b1 = sum(bj * times ** (1.0 - bj_beta) for bj, bj_beta in zip(b, betas))
    series = sum((bc * b1) ** k for k in range(n + 1))
    tail_arg = bc ** n * b1 ** (n + 1)
    with np.errstate(over="ignore"):  # an overflowing majorant is still a majorant
        tail = 1.0 + tail_arg * np.exp(tail_arg) / (1.0 - alpha_max)
        values = a_curve * series * tail
    return GronwallBound(times, values, n, bc)


def gronwall_oracle(a, alphas, b, betas, t_max: float, n_points: int = 1200,
                    times: np.ndarray | None = None) -> GronwallBound:
    """Fixed point of the integral equality on a grid, by forward substitution
    with singularity-exact product-integration weights.

    The data singularity is removed by solving for z(t) = t^alpha* y(t)
    (alpha* the strongest data exponent), which is bounded with the known
    value z(0) = lim t^alpha* a(t).  The transformed kernel moments
    int (t-s)^(-beta) s^(k-alpha*) ds over each cell are exact incomplete
    beta integrals, with z piecewise linear; the system is lower triangular.
    """
    from scipy.special import betainc

    a, alphas, b, betas = _validate(a, alphas, b, betas)
    if times is None:
        times = np.linspace(0.0, t_max, n_points + 1)[1:]
    times = np.asarray(times, dtype=np.float64)
    n = times.size
    a_curve = sum(ai * times ** (-al) for ai, al in zip(a, alphas))
    if np.all(b == 0):
        return GronwallBound(times, a_curve, 0, 1.0)

    astar = float(np.max(alphas))
    a_tilde = sum(ai * times ** (astar - al) for ai, al in zip(a, alphas))
    z0 = float(sum(ai for ai, al in zip(a, alphas) if al == astar))

    # weights[i, j]: coefficient of z(t_j) in the transformed integral at t_i
    # (column 0 belongs to the known z(0)); cells are [t0[l], t0[l+1]].
    t0 = np.concatenate(([0.0], times))
    w = np.zeros((n, n + 1))
    for bj, beta in zip(b, betas):
        if bj == 0:
            continue
        x1, x2 = 1.0 - astar, 2.0 - astar
        y1 = 1.0 - beta
        b1c = beta_function(x1, y1)
        b2c = beta_function(x2, y1)
        for i in range(n):
            tn = times[i]
            xs = t0[: i + 2] / tn
            inc0 = b1c * betainc(x1, y1, xs) * tn ** (x1 + y1 - 1.0)
            inc1 = b2c * betainc(x2, y1, xs) * tn ** (x2 + y1 - 1.0)
            m0 = np.diff(inc0)   # int_cell (tn-s)^(-beta) s^(-astar) ds
            m1 = np.diff(inc1)   # int_cell (tn-s)^(-beta) s^(1-astar) ds
            h = np.diff(t0[: i + 2])
            upper = (m1 - t0[: i + 1] * m0) / h      # weight of the cell's right node
            lower = (t0[1: i + 2] * m0 - m1) / h     # weight of the cell's left node
            scale = bj * tn ** astar
            w[i, 1: i + 2] += scale * upper
            w[i, : i + 1] += scale * lower

    z = np.zeros(n + 1)
    z[0] = z0
    # strong kernels can push the fixed point past float range; inf is the
    # faithful representation (the bound overflows alongside it)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            acc = a_tilde[i] + np.dot(w[i, : i + 1], z[: i + 1])
            z[i + 1] = acc / (1.0 - w[i, i + 1])
        y = z[1:] / times ** astar
    return GronwallBound(times, y, 0, 1.0)
