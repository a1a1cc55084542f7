"""Validated model constants shared by every other module.

All physical parameters are explicit: there are no defaults. A config file
is flat ``key = value`` text; every run writes its resolved parameters back
to the output directory so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import ConstraintViolation, MissingKey

_REQUIRED = ("p", "n", "p1", "K0", "A", "T", "eps0", "alpha0", "delta0", "eta0")


@dataclass(frozen=True)
class Params:
    """Model and control constants.

    p: nonlinearity exponent (> 1)
    n: spatial dimension (evolution requires n = 1)
    p1: decay-rate tuning exponent in (0, min((p-1)/4, 1/2))
    K0: blowup-region width factor (>= 1)
    A: mode-box amplitude (>= 1)
    T: blowup-time target (> 0, small)
    eps0: intermediate-region outer radius
    alpha0: xi-window factor for the intermediate region
    delta0: intermediate-region tolerance
    eta0: outer-region tolerance

    kappa and b are derived from p and recomputed, never stored.
    """

    p: float
    n: int
    p1: float
    K0: float
    A: float
    T: float
    eps0: float
    alpha0: float
    delta0: float
    eta0: float

    @property
    def kappa(self) -> float:
        return (self.p - 1.0) ** (-1.0 / (self.p - 1.0))

    @property
    def b(self) -> float:
        return (self.p - 1.0) ** 2 / (4.0 * self.p)

    @property
    def s0(self) -> float:
        """Initial log-time -ln(T)."""
        return -math.log(self.T)

    def uhat0(self, radius_sq_divisor: float = 64.0) -> float:
        """Value at tau=0 of the intermediate-region ODE solution."""
        p = self.p
        return (p - 1.0 + (p - 1.0) ** 2 * self.K0**2 /
                (radius_sq_divisor * p)) ** (-1.0 / (p - 1.0))


def validate(raw: dict) -> Params:
    """Build a Params from a raw key-value map, enforcing every constraint.

    Raises MissingKey or ConstraintViolation (naming the inequality).
    """
    for key in _REQUIRED:
        if key not in raw:
            raise MissingKey(f"missing required parameter '{key}'")

    p = float(raw["p"])
    n = int(raw["n"])
    p1 = float(raw["p1"])
    K0 = float(raw["K0"])
    A = float(raw["A"])
    T = float(raw["T"])
    eps0 = float(raw["eps0"])
    alpha0 = float(raw["alpha0"])
    delta0 = float(raw["delta0"])
    eta0 = float(raw["eta0"])

    if not p > 1.0:
        raise ConstraintViolation("p > 1")
    if n < 1:
        raise ConstraintViolation("n >= 1")
    p1_cap = min((p - 1.0) / 4.0, 0.5)
    if not (0.0 < p1 < p1_cap):
        raise ConstraintViolation("p1 < min((p-1)/4, 1/2)")
    if K0 < 1.0:
        raise ConstraintViolation("K0 >= 1")
    if A < 1.0:
        raise ConstraintViolation("A >= 1")
    if not T > 0.0:
        raise ConstraintViolation("T > 0")
    if T >= 1.0:
        # s0 = -ln T must be positive for every 1/s bound to make sense.
        raise ConstraintViolation("T < 1")
    if eps0 <= 0.0:
        raise ConstraintViolation("eps0 > 0")
    if alpha0 <= 0.0:
        raise ConstraintViolation("alpha0 > 0")
    P = Params(p=p, n=n, p1=p1, K0=K0, A=A, T=T, eps0=eps0,
               alpha0=alpha0, delta0=delta0, eta0=eta0)
    if not 0.0 < delta0 < P.uhat0() / 2.0:
        raise ConstraintViolation("delta0 < Uhat_K0(0)/2")
    if not 0.0 < eta0 < 0.5:
        raise ConstraintViolation("eta0 < 1/2")
    return P


def serialize(P: Params) -> dict:
    """Flat key-value map; validate(serialize(P)) == P."""
    return {f.name: getattr(P, f.name) for f in fields(P)}


def dumps(P: Params) -> str:
    lines = [f"{k} = {v!r}" for k, v in serialize(P).items()]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConstraintViolation(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
