"""Gaussian-weighted spectral machinery (n = 1).

Weight rho(y) = exp(-y^2/4)/sqrt(4 pi); rescaled Hermite polynomials
h_m(y) = sum_j (-1)^j m! y^(m-2j)/(j! (m-2j)!) with orthogonality
int h_i h_j rho dy = i! 2^i delta_ij; the drift-diffusion operator
L = d^2/dy^2 - (y/2) d/dy + 1 with spectrum {1 - m/2}; and the five-part
decomposition r = r0 + r1 y + (r2/2)(y^2 - 2) + r_minus + r_e with the
cutoff chi(y,s) = chi0(|y|/(K0 sqrt(s))).

Quadrature is composite Gauss-Legendre on the truncated weight support
rather than Gauss-Hermite: integrands include the non-analytic cutoff, so
panel-wise robustness beats spectral exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse

_MAX_DEGREE = 30


def rho(y):
    """Gaussian weight exp(-y^2/4)/sqrt(4 pi)."""
    y = np.asarray(y, dtype=float)
    return np.exp(-(y**2) / 4.0) / math.sqrt(4.0 * math.pi)


def hermite(m: int, y):
    """Rescaled Hermite polynomial h_m (variance-2 convention)."""
    if not 0 <= m <= _MAX_DEGREE:
        raise ValueError(f"hermite degree must be in [0, {_MAX_DEGREE}]")
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    fact_m = math.factorial(m)
    for j in range(m // 2 + 1):
        coeff = (-1) ** j * fact_m / (math.factorial(j) * math.factorial(m - 2 * j))
        out = out + coeff * y ** (m - 2 * j)
    return out if out.ndim else float(out)


def hermite_norm_sq(m: int) -> float:
    """int h_m^2 rho dy = m! 2^m."""
    return math.factorial(m) * 2.0**m


def cutoff_chi0(x):
    """Smooth bump transition: 1 on x <= 1, 0 on x >= 2, C-infinity."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x <= 1.0] = 1.0
    mid = (x > 1.0) & (x < 2.0)
    if np.any(mid):
        t = x[mid] - 1.0
        a = np.exp(-1.0 / t)
        b = np.exp(-1.0 / (1.0 - t))
        out[mid] = b / (a + b)
    return out if out.ndim else float(out)


def cutoff_chi(y, s, K0):
    """chi(y,s) = chi0(|y|/(K0 sqrt(s)))."""
    if s <= 0.0:
        raise ValueError("cutoff_chi requires s > 0")
    return cutoff_chi0(np.abs(np.asarray(y, dtype=float)) / (K0 * math.sqrt(s)))


@dataclass(frozen=True)
class ModeVector:
    """Finite-dimensional projection of one real field component."""

    q0: float
    q1: float
    q2: float
    qminus_norm: float
    qe_norm: float


@dataclass(frozen=True)
class WeightedGrid:
    """Quadrature nodes/weights for int(.) rho dy, plus cutoff parameters."""

    y: np.ndarray
    quad_weights: np.ndarray  # Gauss-Legendre weights times rho(y)
    K0: float
    s: float
    _orth_err: float = field(default=0.0, repr=False)

    def integrate(self, values) -> float:
        """int values(y) rho(y) dy over the truncated support."""
        return float(np.dot(self.quad_weights, values))


def build_grid(K0: float, s: float, y_cut: float = 16.0,
               panels: int = 64, order: int = 12,
               orth_tol: float = 1e-10) -> WeightedGrid:
    """Composite Gauss-Legendre grid on [-y_cut, y_cut].

    rho(y_cut) < 1e-16 for y_cut >= 13, so truncation is far below every
    tolerance used here. Construction runs the orthogonality self-test and
    raises GridTooCoarse on failure.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-y_cut, y_cut, panels + 1)
    ys = []
    ws = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        ys.append(mid + half * nodes)
        ws.append(half * weights)
    y = np.concatenate(ys)
    w = np.concatenate(ws) * rho(y)
    G = WeightedGrid(y=y, quad_weights=w, K0=K0, s=s)

    err = orthogonality_error(G, max_degree=8)
    if err > orth_tol:
        raise GridTooCoarse(
            f"orthogonality self-test failed: {err:.3e} > {orth_tol:.1e}")
    object.__setattr__(G, "_orth_err", err)
    return G


def orthogonality_error(G: WeightedGrid, max_degree: int = 8) -> float:
    """Worst normalized deviation of int h_i h_j rho from i! 2^i delta_ij."""
    H = np.stack([hermite(m, G.y) for m in range(max_degree + 1)])
    gram = (H * G.quad_weights) @ H.T
    norms = np.array([hermite_norm_sq(m) for m in range(max_degree + 1)])
    expected = np.diag(norms)
    scale = np.sqrt(np.outer(norms, norms))
    scale = np.maximum(scale, 1.0)
    return float(np.abs((gram - expected) / scale).max())


def project(r, G: WeightedGrid):
    """Split r into cutoff-localized modes plus remainders.

    r may be an array sampled on G.y or a callable. Returns
    (ModeVector, q_minus array on G.y, r_e array on G.y) where
    r_b = chi r = q0 + q1 y + (q2/2)(y^2 - 2) + q_minus and r = r_b + r_e.

    The q_e sup in the returned ModeVector is taken over G.y only; callers
    holding a wider grid (an evolution frame) should override it with the
    sup over |y| >= K0 sqrt(s) on that grid.
    """
    values = r(G.y) if callable(r) else np.asarray(r, dtype=float)
    chi = cutoff_chi(G.y, G.s, G.K0)
    r_b = chi * values
    r_e = values - r_b

    q0 = G.integrate(r_b)
    q1 = G.integrate(r_b * G.y / 2.0)
    q2 = G.integrate(r_b * (G.y**2 / 4.0 - 0.5))
    q_minus = r_b - (q0 + q1 * G.y + 0.5 * q2 * (G.y**2 - 2.0))

    weight = 1.0 + np.abs(G.y) ** 3
    mv = ModeVector(
        q0=q0, q1=q1, q2=q2,
        qminus_norm=float(np.abs(q_minus / weight).max()),
        qe_norm=float(np.abs(r_e).max()),
    )
    return mv, q_minus, r_e


def apply_L(r, y):
    """L r = r'' - (y/2) r' + r by second-order centered differences.

    y must be uniform; endpoint values use one-sided second-order stencils.
    """
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    h = y[1] - y[0]
    d1 = np.gradient(r, h, edge_order=2)
    d2 = np.empty_like(r)
    d2[1:-1] = (r[2:] - 2.0 * r[1:-1] + r[:-2]) / h**2
    d2[0] = (2 * r[0] - 5 * r[1] + 4 * r[2] - r[3]) / h**2
    d2[-1] = (2 * r[-1] - 5 * r[-2] + 4 * r[-3] - r[-4]) / h**2
    return d2 - 0.5 * y * d1 + r


MODE_CSV_HEADER = ("s,q10,q11,q12,q1minus,q1e,q20,q21,q22,q2minus,q2e")


def mode_csv_row(s: float, m1: ModeVector, m2: ModeVector) -> str:
    """One CSV row per snapshot: real-part modes then imaginary-part modes."""
    vals = [s,
            m1.q0, m1.q1, m1.q2, m1.qminus_norm, m1.qe_norm,
            m2.q0, m2.q1, m2.q2, m2.qminus_norm, m2.qe_norm]
    return ",".join(f"{v:.12e}" for v in vals)
