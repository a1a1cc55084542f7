"""Construction of the tunable initial data and the region geometry.

The data family is a superposition of the matched profile (carried by the
inner cutoff chi1), the final-profile candidate Ustar away from the origin,
and a constant +1 that keeps the real part >= 1 everywhere. Five scalars
d10, d11, d20, d21, d22 (each in [-2,2]) tune the unstable/neutral modes;
the map from them to the projected modes at s0 = -ln T is exactly linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NoRoot, OutOfDomain
from .hermite import cutoff_chi0
from .params import Params
from .profiles import Phi, Ustar

_THETA_MAX = math.exp(-2.0)


@dataclass(frozen=True)
class ShootParams:
    """Initial-data tuning point; box membership [-2,2] is an invariant."""

    d10: float = 0.0
    d11: float = 0.0
    d20: float = 0.0
    d21: float = 0.0
    d22: float = 0.0

    def __post_init__(self):
        for name in ("d10", "d11", "d20", "d21", "d22"):
            v = getattr(self, name)
            if not -2.0 <= v <= 2.0:
                raise ConfigError(f"{name} = {v} outside [-2, 2]")

    def as_array(self):
        return np.array([self.d10, self.d11, self.d20, self.d21, self.d22])


def chi1(x, P: Params):
    """Inner/outer splitting cutoff chi0(|x|/(sqrt(T)|ln T|))."""
    return cutoff_chi0(np.abs(np.asarray(x, dtype=float)) /
                       (math.sqrt(P.T) * abs(math.log(P.T))))


def phi_perturbations(y, P: Params, D: ShootParams):
    """(phi1, phi2) at s0: the d-linear seed functions with the inner cutoff."""
    y = np.asarray(y, dtype=float)
    s0 = P.s0
    cut = cutoff_chi0(16.0 * np.abs(y) / (P.K0 * math.sqrt(s0)))
    phi1 = (P.A / s0**2) * (D.d10 + D.d11 * y) * cut
    phi2 = ((P.A**2 / s0 ** (P.p1 + 2.0)) * (D.d20 + D.d21 * y)
            + (P.A**5 * math.log(s0) / s0 ** (P.p1 + 2.0))
            * D.d22 * (y**2 - 1.0)) * cut
    return phi1, phi2


def build_initial(x_grid, P: Params, D: ShootParams, Cstar: float = 0.05):
    """Sample the initial data (u1, u2) at t = 0 on x_grid.

    u1 = T^(-1/(p-1)) {phi1 + Phi1}(x/sqrt(T), s0) chi1 + Ustar (1 - chi1) + 1
    u2 = T^(-1/(p-1)) {phi2 + Phi2}(x/sqrt(T), s0) chi1
    """
    x = np.asarray(x_grid, dtype=float)
    T = P.T
    if 2.0 * math.sqrt(T) * abs(math.log(T)) > P.eps0 / 2.0:
        raise ConfigError(
            "support condition failed: need 2 sqrt(T)|ln T| <= eps0/2 "
            "(decrease T or increase eps0)")

    s0 = P.s0
    y = x / math.sqrt(T)
    amp = T ** (-1.0 / (P.p - 1.0))
    p1v, p2v = phi_perturbations(y, P, D)
    ev = Phi(y, s0, P)
    c1 = chi1(x, P)

    u1 = amp * (p1v + ev.phi1) * c1 + 1.0
    outer = c1 < 1.0
    if np.any(outer):
        safe_x = np.where(x == 0.0, 1.0, x)  # x=0 always has c1 == 1
        ustar = np.where(outer, Ustar(np.abs(safe_x), P, Cstar=Cstar), 0.0)
        u1 = u1 + ustar * (1.0 - c1)
    u2 = amp * (p2v + ev.phi2) * c1
    return u1, u2


# ---------------------------------------------------------------------------
# Geometry: t(x), theta(x), tau(x,t), regions
# ---------------------------------------------------------------------------

def theta_of_x(x: float, P: Params, radius_factor: float | None = None) -> float:
    """Solve |x| = factor * sqrt(theta |ln theta|) for theta on (0, e^-2].

    factor defaults to K0/4 (the intermediate-region inner radius). Bracketed
    Newton with bisection fallback; 1e-12 relative tolerance. theta|ln theta|
    is increasing on the bracket, so the root is unique.
    """
    factor = P.K0 / 4.0 if radius_factor is None else radius_factor
    target = (abs(x) / factor) ** 2
    if target <= 0.0:
        raise NoRoot("theta_of_x requires x != 0")

    def g(th):
        return th * abs(math.log(th))

    lo, hi = 1e-300, _THETA_MAX
    if target > g(hi):
        raise NoRoot(f"|x| = {abs(x):g} beyond the monotone branch")

    th = min(max(target / max(1.0, -math.log(target)), lo), hi)
    for _ in range(200):
        gv = g(th) - target
        if gv > 0.0:
            hi = th
        else:
            lo = th
        dg = -math.log(th) - 1.0  # d/dth [th(-ln th)] for th < 1/e
        step = gv / dg
        nxt = th - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - th) <= 1e-14 * th:
            th = nxt
            break
        th = nxt
    return th


def t_of_x(x: float, P: Params, radius_factor: float | None = None) -> float:
    """Time t(x) at which |x| sits on the shrinking radius; may be negative."""
    return P.T - theta_of_x(x, P, radius_factor)


def tau_of(x: float, t: float, P: Params) -> float:
    """Rescaled time tau(x,t) = (t - t(x)) / theta(x)."""
    th = theta_of_x(x, P)
    return (t - (P.T - th)) / th


def rescaled_U(history, x: float, xi: float, tau: float, P: Params):
    """theta(x)^(1/(p-1)) u(x + xi sqrt(theta), t(x) + tau theta).

    The prefactor undoes the blowup growth so that U is order one and
    comparable with the rescaled-ODE solution Uhat. history is any object
    with interp(points, t) -> (u1, u2) (linear in t, cubic in x). Raises
    OutOfDomain when the point is not covered.
    """
    th = theta_of_x(x, P)
    t_query = (P.T - th) + tau * th
    x_query = x + xi * math.sqrt(th)
    u1, u2 = history.interp(np.array([x_query]), t_query)
    amp = th ** (1.0 / (P.p - 1.0))
    return amp * u1[0], amp * u2[0]


def region_of(x: float, t: float, P: Params):
    """Overlapping region membership tags at (x, t)."""
    if t >= P.T:
        raise OutOfDomain("region_of requires t < T")
    theta = P.T - t
    r_blow = math.sqrt(theta * abs(math.log(theta)))
    tags = set()
    if abs(x) <= P.K0 * r_blow:
        tags.add("P1")
    if (P.K0 / 4.0) * r_blow <= abs(x) <= P.eps0:
        tags.add("P2")
    if abs(x) >= P.eps0 / 4.0:
        tags.add("P3")
    if not tags:
        raise DomainError(f"point x={x} uncovered; regions overlap by design")
    return tags
