"""The complex power u^p on the right half-plane and everything built on it.

F1/F2 are the real/imaginary parts of u^p defined through the modulus and
the half-plane argument Arg(u1,u2) = arcsin(u2/|u|), valid for u1 > 0 (with
F(0,0) = (0,0) by convention). The partial derivatives dF_i/du_j are derived
by hand from the modulus-argument form: with r = |u| and theta = Arg,

    dF1/du1 =  p r^(p-1) cos((p-1) theta)    dF1/du2 = -p r^(p-1) sin((p-1) theta)
    dF2/du1 =  p r^(p-1) sin((p-1) theta)    dF2/du2 =  p r^(p-1) cos((p-1) theta)

(the Cauchy-Riemann structure of the holomorphic branch). Everything here is
a pure function; tests cross-check against the integer-p binomial oracle and
central finite differences.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .params import Params
from .profiles import Phi

# below this modulus u is treated as exactly 0 (avoids underflow in |u|^p)
_TINY = 1e-300


def _split(u1, u2):
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    return u1, u2


def arg_halfplane(u1, u2):
    """Half-plane argument arcsin(u2/|u|); requires u1 > 0."""
    u1, u2 = _split(u1, u2)
    r = np.hypot(u1, u2)
    if np.any(r == 0.0):
        raise DomainError("Arg is undefined at the origin")
    if np.any(u1 <= 0.0):
        raise DomainError("Arg requires Re(u) > 0")
    out = np.arcsin(u2 / r)
    return out if out.ndim else float(out)


def F(u1, u2, p):
    """(F1, F2) = (Re, Im) of u^p on the half-plane; F(0,0) = (0,0)."""
    u1, u2 = _split(u1, u2)
    r = np.hypot(u1, u2)
    zero = r < _TINY
    if np.any(~zero & (u1 <= 0.0)):
        raise DomainError("F requires Re(u) > 0 (or u = 0)")
    theta = np.where(zero, 0.0, np.arcsin(np.where(zero, 0.0, u2) /
                                          np.where(zero, 1.0, r)))
    rp = np.where(zero, 0.0, r) ** p
    f1 = rp * np.cos(p * theta)
    f2 = rp * np.sin(p * theta)
    if f1.ndim:
        return f1, f2
    return float(f1), float(f2)


def F_integer_oracle(u1, u2, p: int):
    """Binomial-sum (u1 + i u2)^p for integer p >= 2; cross-check only."""
    if int(p) != p or p < 2:
        raise ValueError("integer oracle needs integer p >= 2")
    p = int(p)
    u1, u2 = _split(u1, u2)
    re = np.zeros(np.broadcast(u1, u2).shape)
    im = np.zeros_like(re)
    for k in range(p + 1):
        term = math.comb(p, k) * u1 ** (p - k) * u2**k
        # i^k cycles 1, i, -1, -i
        if k % 4 == 0:
            re += term
        elif k % 4 == 1:
            im += term
        elif k % 4 == 2:
            re -= term
        else:
            im -= term
    if re.ndim:
        return re, im
    return float(re), float(im)


def dF(u1, u2, p):
    """Closed-form Jacobian of (F1,F2): returns (dF1_du1, dF1_du2, dF2_du1, dF2_du2)."""
    u1, u2 = _split(u1, u2)
    r = np.hypot(u1, u2)
    if np.any(u1 <= 0.0):
        raise DomainError("dF requires Re(u) > 0")
    theta = np.arcsin(u2 / r)
    w = p * r ** (p - 1.0)
    c = np.cos((p - 1.0) * theta)
    s = np.sin((p - 1.0) * theta)
    return w * c, -w * s, w * s, w * c


def Bbar(wbar1, w2, P: Params):
    """Quadratic remainders around the constant solution kappa.

    Bbar1 = F1(kappa + wbar1, w2) - kappa^p - (p/(p-1)) wbar1
    Bbar2 = F2(kappa + wbar1, w2) - (p/(p-1)) w2
    """
    p, kappa = P.p, P.kappa
    wbar1 = np.asarray(wbar1, dtype=float)
    if np.any(kappa + wbar1 <= 0.0):
        raise DomainError("Bbar requires kappa + wbar1 > 0")
    f1, f2 = F(kappa + wbar1, w2, p)
    b1 = f1 - kappa**p - p / (p - 1.0) * wbar1
    b2 = f2 - p / (p - 1.0) * np.asarray(w2, dtype=float)
    return b1, b2


def potentials(y, s, P: Params):
    """The five potentials evaluated on the profile pair at (y, s).

    V    = p (Phi1^(p-1) - 1/(p-1))
    V11  = dF1/du1|_Phi - p Phi1^(p-1)      V12 = dF1/du2|_Phi
    V21  = dF2/du1|_Phi                     V22 = dF2/du2|_Phi - p Phi1^(p-1)
    """
    p = P.p
    ev = Phi(y, s, P)
    d11, d12, d21, d22 = dF(ev.phi1, ev.phi2, p)
    base = p * ev.phi1 ** (p - 1.0)
    return {
        "V": base - p / (p - 1.0),
        "V11": d11 - base,
        "V12": d12,
        "V21": d21,
        "V22": d22 - base,
    }


def B_quadratic(q1, q2, y, s, P: Params):
    """Exact linearization remainder of F around (Phi1, Phi2).

    B_i = F_i(Phi1+q1, Phi2+q2) - F_i(Phi1,Phi2) - dF_i/du1 q1 - dF_i/du2 q2,
    evaluated by direct formula (no series).
    """
    p = P.p
    ev = Phi(y, s, P)
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if np.any(ev.phi1 + q1 <= 0.0):
        raise DomainError("B_quadratic requires Phi1 + q1 > 0")
    f1p, f2p = F(ev.phi1 + q1, ev.phi2 + q2, p)
    f1, f2 = F(ev.phi1, ev.phi2, p)
    d11, d12, d21, d22 = dF(ev.phi1, ev.phi2, p)
    b1 = f1p - f1 - d11 * q1 - d12 * q2
    b2 = f2p - f2 - d21 * q1 - d22 * q2
    return b1, b2


def rest_terms(y, s, P: Params):
    """(R1, R2): the profile-equation residuals, all derivatives closed form.

    R_i = lap Phi_i - (1/2) y.grad Phi_i - Phi_i/(p-1) + F_i(Phi1,Phi2) - ds Phi_i
    """
    p = P.p
    ev = Phi(y, s, P)
    f1, f2 = F(ev.phi1, ev.phi2, p)
    r1 = (ev.lap_phi1 - 0.5 * ev.y_dot_grad_phi1 - ev.phi1 / (p - 1.0)
          + f1 - ev.dphi1_ds)
    r2 = (ev.lap_phi2 - 0.5 * ev.y_dot_grad_phi2 - ev.phi2 / (p - 1.0)
          + f2 - ev.dphi2_ds)
    return r1, r2
