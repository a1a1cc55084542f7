"""Closed-form profiles and expansion functions.

Everything here is an explicit formula: the selfsimilar profiles f0/g0, the
matched profiles Phi1/Phi2 with their y/s derivatives, the outer-expansion
functions R10, R11, R21, R22, the intermediate-region ODE solutions Uhat and
Vhat2, and the final-profile candidate Ustar.

Derivatives are hand-derived closed forms (no numerics): the rest terms they
feed are O(1/s^3) and would drown in finite-difference error. Tests validate
every derivative against central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import Params


def f0(z, P: Params):
    """Limiting shape of the rescaled real part, z = y/sqrt(s)."""
    p = P.p
    return (p - 1.0 + P.b * np.asarray(z) ** 2) ** (-1.0 / (p - 1.0))


def g0(z, P: Params):
    """Limiting shape of the rescaled imaginary part (up to 1/s factors)."""
    p = P.p
    z = np.asarray(z)
    return z**2 * (p - 1.0 + P.b * z**2) ** (-p / (p - 1.0))


@dataclass(frozen=True)
class ProfileEval:
    """Phi1, Phi2 and their closed-form derivatives at (y, s).

    lap_* is the n-dimensional radial Laplacian; y_dot_grad_* is y.grad.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    dphi1_dy: np.ndarray
    dphi2_dy: np.ndarray
    lap_phi1: np.ndarray
    lap_phi2: np.ndarray
    dphi1_ds: np.ndarray
    dphi2_ds: np.ndarray

    @property
    def y_dot_grad_phi1(self):
        return self._y * self.dphi1_dy

    @property
    def y_dot_grad_phi2(self):
        return self._y * self.dphi2_dy


def Phi(y, s, P: Params) -> ProfileEval:
    """Matched profile pair and derivatives.

    Phi1(y,s) = (p-1 + b y^2/s)^(-1/(p-1)) + n kappa/(2ps)
    Phi2(y,s) = (y^2/s^2)(p-1 + b y^2/s)^(-p/(p-1)) - 2n kappa/((p-1)s^2)
    """
    y = np.asarray(y, dtype=float)
    p, n, b, kappa = P.p, P.n, P.b, P.kappa
    a1 = 1.0 / (p - 1.0)
    a2 = p / (p - 1.0)
    A = p - 1.0 + b * y**2 / s
    Am_a1 = A ** (-a1)
    Am_a2 = A ** (-a2)       # = A^(-a1-1)
    Am_a2p1 = A ** (-a2 - 1.0)
    Am_a2p2 = A ** (-a2 - 2.0)

    phi1 = Am_a1 + n * kappa / (2.0 * p * s)
    c = 2.0 * b / ((p - 1.0) * s)
    dphi1_dy = -c * y * Am_a2
    # radial Laplacian: phi1'' + (n-1) phi1'/y, with phi1'/y analytic
    lap_phi1 = -n * c * Am_a2 + (2.0 * p * b * c / ((p - 1.0) * s)) * y**2 * Am_a2p1
    dphi1_ds = (b * y**2 / ((p - 1.0) * s**2)) * Am_a2 - n * kappa / (2.0 * p * s**2)

    phi2 = (y**2 / s**2) * Am_a2 - 2.0 * n * kappa / ((p - 1.0) * s**2)
    dphi2_dy = (2.0 * y / s**2) * Am_a2 - (2.0 * a2 * b * y**3 / s**3) * Am_a2p1
    lap_phi2 = ((2.0 * n / s**2) * Am_a2
                - (2.0 * (n + 4.0) * a2 * b * y**2 / s**3) * Am_a2p1
                + (4.0 * a2 * (a2 + 1.0) * b**2 * y**4 / s**4) * Am_a2p2)
    dphi2_ds = (-(2.0 * y**2 / s**3) * Am_a2
                + (a2 * b * y**4 / s**4) * Am_a2p1
                + 4.0 * n * kappa / ((p - 1.0) * s**3))

    ev = ProfileEval(phi1, phi2, dphi1_dy, dphi2_dy,
                     lap_phi1, lap_phi2, dphi1_ds, dphi2_ds)
    object.__setattr__(ev, "_y", y)
    return ev


# ---------------------------------------------------------------------------
# Outer expansion
# ---------------------------------------------------------------------------

def H22_constants(P: Params):
    """Coefficients of the correction H22 in the R22 closed form.

    Substituting the three-term ansatz
        c1 z^2 A^(-(2p-1)/(p-1))
      + c2 z^2 ln(A) A^(-p/(p-1))
      + c3 z^2 ln(A) A^(-(2p-1)/(p-1)),   A = p-1 + b z^2,
    into the R22 equation and solving the linear conditions yields the exact
    solution (c1, c2, c3) = (-(p-1)/2, (p-2)/(p-1), p). The two log terms
    cannot share one coefficient; see determine_H22_constants for the
    numerical determination from scratch.
    """
    p = P.p
    return (-(p - 1.0) / 2.0, (p - 2.0) / (p - 1.0), p)


class _Form:
    """Value and first/second z-derivatives of the building-block forms.

    With A = p-1 + b z^2 and L = ln A:
      f_a = A^-a,  g_a = z^2 A^-a,  h_a = z^2 L A^-a.
    """

    def __init__(self, z, P: Params):
        self.z = np.asarray(z, dtype=float)
        self.b = P.b
        self.p = P.p
        self.A = P.p - 1.0 + P.b * self.z**2
        self.L = np.log(self.A)

    def f(self, a):
        z, b, A = self.z, self.b, self.A
        v = A ** (-a)
        d1 = -2.0 * a * b * z * A ** (-a - 1.0)
        d2 = (-2.0 * a * b * A ** (-a - 1.0)
              + 4.0 * a * (a + 1.0) * b**2 * z**2 * A ** (-a - 2.0))
        return v, d1, d2

    def g(self, a):
        z, b, A = self.z, self.b, self.A
        v = z**2 * A ** (-a)
        d1 = 2.0 * z * A ** (-a) - 2.0 * a * b * z**3 * A ** (-a - 1.0)
        d2 = (2.0 * A ** (-a)
              - 10.0 * a * b * z**2 * A ** (-a - 1.0)
              + 4.0 * a * (a + 1.0) * b**2 * z**4 * A ** (-a - 2.0))
        return v, d1, d2

    def h(self, a):
        z, b, A, L = self.z, self.b, self.A, self.L
        v = z**2 * L * A ** (-a)
        d1 = (2.0 * z * L * A ** (-a)
              + 2.0 * b * z**3 * A ** (-a - 1.0)
              - 2.0 * a * b * z**3 * L * A ** (-a - 1.0))
        d2 = (2.0 * L * A ** (-a)
              + 10.0 * b * z**2 * A ** (-a - 1.0)
              - 10.0 * a * b * z**2 * L * A ** (-a - 1.0)
              - 4.0 * (a + 1.0) * b**2 * z**4 * A ** (-a - 2.0)
              - 4.0 * a * b**2 * z**4 * A ** (-a - 2.0)
              + 4.0 * a * (a + 1.0) * b**2 * z**4 * L * A ** (-a - 2.0))
        return v, d1, d2


def outer_R(z, P: Params, derivatives: bool = False):
    """The four outer-expansion closed forms (optionally with z-derivatives).

    Returns {"R10": ..., "R11": ..., "R21": ..., "R22": ...}; with
    derivatives=True each value is the tuple (R, R', R'').
    """
    p = P.p
    a1 = 1.0 / (p - 1.0)
    a2 = p / (p - 1.0)
    a3 = (2.0 * p - 1.0) / (p - 1.0)
    c1, c2, c3 = H22_constants(P)
    forms = _Form(z, P)

    r10 = forms.f(a1)
    f2 = forms.f(a2)
    h2 = forms.h(a2)
    r11 = tuple((p - 1.0) / (2.0 * p) * u - (p - 1.0) / (4.0 * p) * v
                for u, v in zip(f2, h2))
    r21 = forms.g(a2)
    g3 = forms.g(a3)
    h3 = forms.h(a3)
    r22 = tuple(-2.0 * u + c1 * v + c2 * w + c3 * x
                for u, v, w, x in zip(f2, g3, h2, h3))
    out = {"R10": r10, "R11": r11, "R21": r21, "R22": r22}
    if derivatives:
        return out
    return {k: v[0] for k, v in out.items()}


def outer_ode_residuals(z, P: Params):
    """Residuals of the four outer-expansion ODEs at z, closed forms only."""
    p = P.p
    d = outer_R(z, P, derivatives=True)
    z = np.asarray(z, dtype=float)
    R10, dR10, ddR10 = d["R10"]
    R11, dR11, _ = d["R11"]
    R21, dR21, ddR21 = d["R21"]
    R22, dR22, _ = d["R22"]
    res10 = -0.5 * z * dR10 - R10 / (p - 1.0) + R10**p
    res11 = (-0.5 * z * dR11 - R11 / (p - 1.0) + p * R10 ** (p - 1.0) * R11
             + ddR10 + 0.5 * z * dR10)
    res21 = -0.5 * z * dR21 - R21 / (p - 1.0) + p * R10 ** (p - 1.0) * R21
    res22 = (-0.5 * z * dR22 - R22 / (p - 1.0) + p * R10 ** (p - 1.0) * R22
             + ddR21 + R21 + 0.5 * z * dR21
             + p * (p - 1.0) * R10 ** (p - 2.0) * R11 * R21)
    return {"R10": res10, "R11": res11, "R21": res21, "R22": res22}


def determine_H22_constants(P: Params, n_samples: int = 60):
    """Determine the H22 coefficients from scratch by linear least squares.

    The R22 equation is affine in the three ansatz coefficients; sampling the
    residual gives an overdetermined linear system whose solution certifies
    the closed forms in H22_constants.
    """
    p = P.p
    z = np.linspace(0.15, 9.85, n_samples)
    a2 = p / (p - 1.0)
    a3 = (2.0 * p - 1.0) / (p - 1.0)
    forms = _Form(z, P)

    def residual_of(base_and_coeffs):
        # R22 = -2 f_{a2} + c.basis ; residual is affine in c
        c = base_and_coeffs
        f2 = forms.f(a2)
        g3 = forms.g(a3)
        h2 = forms.h(a2)
        h3 = forms.h(a3)
        R22 = tuple(-2.0 * u + c[0] * v + c[1] * w + c[2] * x
                    for u, v, w, x in zip(f2, g3, h2, h3))
        d = outer_R(z, P, derivatives=True)
        R10, dR10, _ = d["R10"]
        R11 = d["R11"][0]
        R21, dR21, ddR21 = d["R21"]
        return (-0.5 * z * R22[1] - R22[0] / (p - 1.0)
                + p * R10 ** (p - 1.0) * R22[0]
                + ddR21 + R21 + 0.5 * z * dR21
                + p * (p - 1.0) * R10 ** (p - 2.0) * R11 * R21)

    base = residual_of((0.0, 0.0, 0.0))
    cols = []
    for k in range(3):
        c = [0.0, 0.0, 0.0]
        c[k] = 1.0
        cols.append(residual_of(c) - base)
    M = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(M, -base, rcond=None)
    max_residual = float(np.abs(M @ sol + base).max())
    return tuple(sol), max_residual


# ---------------------------------------------------------------------------
# Intermediate-region ODE solutions and the final-profile candidate
# ---------------------------------------------------------------------------

def Uhat(tau, P: Params, radius_sq_divisor: float = 64.0):
    """Closed-form solution of dU/dtau = U^p in the intermediate region.

    Uhat(tau) = ((p-1)(1-tau) + (p-1)^2 K0^2/(divisor*p))^(-1/(p-1)).
    The shrinking-set monitor uses divisor 64; final-profile extraction
    uses divisor 4 (both variants appear in the source formulas).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau >= 1.0):
        raise DomainError("Uhat requires tau < 1")
    p = P.p
    shift = (p - 1.0) ** 2 * P.K0**2 / (radius_sq_divisor * p)
    return ((p - 1.0) * (1.0 - tau) + shift) ** (-1.0 / (p - 1.0))


def Vhat2(tau, P: Params):
    """Companion solution for the imaginary part (divisor-4 scale)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau >= 1.0):
        raise DomainError("Vhat2 requires tau < 1")
    p = P.p
    shift = (p - 1.0) ** 2 * P.K0**2 / (4.0 * p)
    return P.K0**2 * ((p - 1.0) * (1.0 - tau) + shift) ** (-p / (p - 1.0))


def _ustar_inner(x_abs, p):
    return ((p - 1.0) ** 2 * x_abs**2 /
            (8.0 * p * np.abs(np.log(x_abs)))) ** (-1.0 / (p - 1.0))


def Ustar(x, P: Params, Cstar: float = 0.05):
    """Final-profile candidate: singular branch, far branch, and a bridge.

    [ (p-1)^2 x^2 / (8p|ln|x||) ]^(-1/(p-1)) for |x| <= Cstar,
    1/(1+x^2) for |x| >= 1, and a positive monotone C^1 cubic-in-log
    interpolation in between.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError("Ustar is undefined at x = 0")
    p = P.p
    r = np.abs(x)
    out = np.empty_like(r)

    inner = r <= Cstar
    outer = r >= 1.0
    mid = ~(inner | outer)
    out[inner] = _ustar_inner(r[inner], p)
    out[outer] = 1.0 / (1.0 + r[outer] ** 2)

    if np.any(mid):
        # cubic Hermite in t = ln r for ln Ustar, matching value and slope
        # at both ends; slopes are mild vs the secant so this is monotone
        t0 = math.log(Cstar)
        v0 = math.log(_ustar_inner(np.array(Cstar), p))
        m0 = -(2.0 - 1.0 / t0) / (p - 1.0)
        v1 = math.log(0.5)
        m1 = -1.0
        t = np.log(r[mid])
        u = (t - t0) / (0.0 - t0)
        h = 0.0 - t0
        val = ((2 * u**3 - 3 * u**2 + 1) * v0 + (u**3 - 2 * u**2 + u) * h * m0
               + (-2 * u**3 + 3 * u**2) * v1 + (u**3 - u**2) * h * m1)
        out[mid] = np.exp(val)
    return out if out.ndim else float(out)
