"""Machine checks of the trapping region and the mode dynamics.

Three layers of control are monitored along a trajectory: the mode-box
membership of the spectral projections (check_VA), the intermediate-region
lock onto the rescaled ODE solution (check_P2), and quasi-static behavior
far from the origin (check_P3). mode_ode_residuals verifies the reduced
mode ODE laws from recorded series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SeriesTooShort
from .hermite import ModeVector
from .initial_data import theta_of_x
from .params import Params
from .profiles import Uhat

_RATIO_FAMILIES = ("q10", "q11", "q12", "q1minus", "q1e",
                   "q20", "q21", "q22", "q2minus", "q2e")


@dataclass(frozen=True)
class VAReport:
    """All ten mode ratios at one instant; membership iff all <= 1."""

    s: float
    ratios: dict
    member: bool
    worst_face: str
    worst_ratio: float


def check_VA(m1: ModeVector, m2: ModeVector, s: float, P: Params) -> VAReport:
    """Normalize each mode magnitude by its shrinking-box radius."""
    if s < 1.0:
        raise ValueError("check_VA requires s >= 1")
    A, p1 = P.A, P.p1
    ln_s = math.log(s)
    ratios = {
        "q10": abs(m1.q0) * s**2 / A,
        "q11": abs(m1.q1) * s**2 / A,
        "q12": abs(m1.q2) * s**2 / (A**2 * ln_s),
        "q1minus": m1.qminus_norm * s**2 / A,
        "q1e": m1.qe_norm * math.sqrt(s) / A**2,
        "q20": abs(m2.q0) * s ** (p1 + 2.0) / A**2,
        "q21": abs(m2.q1) * s ** (p1 + 2.0) / A**2,
        "q22": abs(m2.q2) * s ** (p1 + 2.0) / (A**5 * ln_s),
        "q2minus": m2.qminus_norm * s ** ((p1 + 5.0) / 2.0) / A**2,
        "q2e": m2.qe_norm * s ** ((p1 + 2.0) / 2.0) / A**3,
    }
    worst_face = max(ratios, key=ratios.get)
    worst = ratios[worst_face]
    return VAReport(s=s, ratios=ratios, member=worst <= 1.0,
                    worst_face=worst_face, worst_ratio=worst)


def check_P2(history, t: float, P: Params, T: float | None = None,
             n_radii: int = 64, n_xi: int = 33):
    """Sampled sup of |U(x, xi, tau(x,t)) - Uhat(tau)| over the middle region.

    The lattice is geometric in radius between (K0/4) sqrt(theta |ln theta|)
    and eps0, with n_xi offsets |xi| <= alpha0 sqrt(|ln theta(x)|). Returns
    (max deviation, (x, xi) at the argmax).
    """
    T = P.T if T is None else T
    theta_t = T - t
    if theta_t <= 0.0:
        raise ValueError("check_P2 requires t < T")
    r_in = (P.K0 / 4.0) * math.sqrt(theta_t * abs(math.log(theta_t)))
    if r_in >= P.eps0:
        raise ValueError(
            f"middle region empty: inner radius {r_in:g} >= eps0 {P.eps0:g}")
    radii = np.geomspace(r_in, P.eps0, n_radii)
    worst = 0.0
    arg = (radii[0], 0.0)
    inv = 1.0 / (P.p - 1.0)
    for x0 in radii:
        th = theta_of_x(x0, P)
        tau = (t - (T - th)) / th
        xi = np.linspace(-1.0, 1.0, n_xi) * P.alpha0 * math.sqrt(abs(math.log(th)))
        pts = x0 + xi * math.sqrt(th)
        u1, u2 = history.interp(pts, t)
        U_mod = th**inv * np.hypot(u1, u2)
        dev = np.abs(U_mod - float(Uhat(tau, P)))
        k = int(np.argmax(dev))
        if dev[k] > worst:
            worst = float(dev[k])
            arg = (float(x0), float(xi[k]))
    return worst, arg


def check_P3(history, t: float, P: Params) -> float:
    """max |u(x,t) - u(x,0)| over the outer grid points |x| >= eps0/4."""
    x = history.x
    mask = np.abs(x) >= P.eps0 / 4.0
    u1_t, u2_t = history.interp(x[mask], t)
    u1_0, u2_0 = history.interp(x[mask], history.times[0])
    return float(np.hypot(u1_t - u1_0, u2_t - u2_0).max())


# reduced ODE law per mode family: (linear rate term, residual weight power)
def _family_laws(P: Params):
    A, p1 = P.A, P.p1
    return {
        "q10": (lambda s, q: q, lambda s: s**2),
        "q11": (lambda s, q: 0.5 * q, lambda s: s**2),
        "q12": (lambda s, q: -(2.0 / s) * q, lambda s: s**3 / A),
        "q20": (lambda s, q: q, lambda s: s ** (p1 + 3.0) / A),
        "q21": (lambda s, q: 0.5 * q, lambda s: s ** (p1 + 3.0) / A),
        "q22": (lambda s, q: -(2.0 / s) * q,
                lambda s: s ** (p1 + 3.0) / (A**2 * np.log(s))),
    }


def _five_point_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Interior 5-point first derivative; returns values at indices 2..n-3."""
    return (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)


def mode_ode_residuals(s_series, modes1, modes2, P: Params,
                       n_uniform: int | None = None) -> dict:
    """Residuals of the reduced mode ODEs from a recorded series.

    Needs at least 5 samples. Series are resampled onto a uniform s-grid by
    cubic splines before differencing (recording times are only nearly
    uniform). Returns per family a dict with s, residual, and fitted_C (the
    max of |residual| times the family's decay weight).
    """
    s = np.asarray(s_series, dtype=float)
    if s.size < 5:
        raise SeriesTooShort(f"need >= 5 samples, got {s.size}")
    series = {
        "q10": np.array([m.q0 for m in modes1]),
        "q11": np.array([m.q1 for m in modes1]),
        "q12": np.array([m.q2 for m in modes1]),
        "q20": np.array([m.q0 for m in modes2]),
        "q21": np.array([m.q1 for m in modes2]),
        "q22": np.array([m.q2 for m in modes2]),
    }
    m = s.size if n_uniform is None else n_uniform
    su = np.linspace(s[0], s[-1], m)
    h = su[1] - su[0]
    laws = _family_laws(P)
    out = {}
    for name, q in series.items():
        qu = CubicSpline(s, q)(su)
        dq = _five_point_derivative(qu, h)
        s_mid = su[2:-2]
        rate, weight = laws[name]
        res = dq - rate(s_mid, qu[2:-2])
        out[name] = {
            "s": s_mid,
            "residual": res,
            "fitted_C": float(np.abs(res * weight(s_mid)).max()),
        }
    return out


def snapshot_report(s: float, va: VAReport, P2_dev=None, P3_dev=None,
                    P: Params | None = None) -> str:
    """One JSON line per snapshot for monitor.jsonl."""
    in_S = va.member
    if P is not None:
        if P2_dev is not None:
            in_S = in_S and P2_dev <= P.delta0
        if P3_dev is not None:
            in_S = in_S and P3_dev <= P.eta0
    rec = {
        "s": s,
        "in_S": bool(in_S),
        "worst_face": va.worst_face,
        "worst_ratio": va.worst_ratio,
        "P2_dev": P2_dev,
        "P3_dev": P3_dev,
    }
    return json.dumps(rec)
