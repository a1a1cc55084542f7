"""Bisection search over the initial-data parameters.

The unstable and neutral spectral modes are finitely many, so steering them
to zero is a root-finding problem in the tuning scalars. Even symmetry pins
the odd modes at zero, leaving three active parameters handled in order of
instability: d10 (rate-1 real mode), then d20 (rate-1 imaginary mode), then
d22 (neutral drift). Each stage bisects on the sign of its target mode at
the first box exit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import BudgetExhausted
from .evolution import RunControls, Trajectory, run_to_blowup
from .initial_data import ShootParams
from .params import Params

_STAGE_ORDER = ("d10", "d20", "d22")
_STAGE_FACE = {"d10": "q10", "d20": "q20", "d22": "q22"}
# faces watched while a given stage is active: later-stage faces are not yet
# tuned, so their crossings must not terminate the run early
_STAGE_FACES = {
    "d10": ("q10",),
    "d20": ("q10", "q20"),
    "d22": ("q10", "q20", "q22"),
}


@dataclass(frozen=True)
class ShootSample:
    """Outcome of one trajectory at a tuning point."""

    D: ShootParams
    outcome: str                 # "survived" | "exited" | "error"
    s_end: float
    exit_face: str | None
    exit_sign: int | None
    exit_s: float | None
    trajectory: Trajectory | None = field(compare=False, repr=False)

    @property
    def survived(self) -> bool:
        return self.outcome == "survived"


def classify(D: ShootParams, P: Params,
             controls: RunControls | None = None) -> ShootSample:
    """Run one trajectory and report its first mode-box crossing."""
    traj = run_to_blowup(D, P, controls)
    if traj.exit is not None:
        return ShootSample(D=D, outcome="exited",
                           s_end=float(traj.s_series[-1]),
                           exit_face=traj.exit.face, exit_sign=traj.exit.sign,
                           exit_s=float(traj.exit.s), trajectory=traj)
    if traj.status in ("positivity_loss", "dt_underflow", "crossed_T"):
        return ShootSample(D=D, outcome="error",
                           s_end=float(traj.s_series[-1]),
                           exit_face=None, exit_sign=None, exit_s=None,
                           trajectory=traj)
    return ShootSample(D=D, outcome="survived",
                       s_end=float(traj.s_series[-1]),
                       exit_face=None, exit_sign=None, exit_s=None,
                       trajectory=traj)


@dataclass
class SearchResult:
    best: ShootSample
    survivors: list
    samples: list
    brackets: dict
    evaluations: int


def _mode_value(sample: ShootSample, face: str) -> float:
    """Signed value of the named face mode at the sample's final snapshot."""
    traj = sample.trajectory
    m1 = traj.modes1[-1]
    m2 = traj.modes2[-1]
    return {"q10": m1.q0, "q11": m1.q1,
            "q20": m2.q0, "q21": m2.q1, "q22": m2.q2}[face]


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self, best):
        if self.used >= self.limit:
            raise BudgetExhausted(
                f"evaluation budget {self.limit} exhausted", best=best)
        self.used += 1


def search(P: Params, budget: int = 150,
           controls: RunControls | None = None,
           depths: dict | None = None, sweeps: int = 3) -> SearchResult:
    """Staged bisection for a trajectory that stays in the mode box.

    One sweep bisects d10, then d20, then d22, each on the sign of its
    target mode at the first crossing; a full-face classification closes
    the sweep. Stage runs watch only the faces tuned so far, so their
    "survival" is not meaningful and only full-face runs enter the survivor
    list. Sweeps repeat because the tuning scalars couple weakly (the
    quadratic seed has nonzero mean, shifting q20); the coupling is small,
    so a few sweeps converge. Stops early when a sweep produces a survivor.

    budget bounds the number of classify calls (pre: budget >= 32). depths
    maps stage name to per-sweep bisection depth, default {"d10": 20,
    "d20": 12, "d22": 8}. Returns the deepest survivor when one exists,
    otherwise the sample with the latest exit.
    """
    if budget < 32:
        raise ValueError("search requires budget >= 32")
    depth_of = {"d10": 20, "d20": 12, "d22": 8}
    if depths:
        depth_of.update(depths)
    base = controls if controls is not None else RunControls()
    tuning = {"d10": 0.0, "d20": 0.0, "d22": 0.0}
    samples: list[ShootSample] = []
    survivors: list[ShootSample] = []
    brackets: dict = {}
    bud = _Budget(budget)

    def evaluate(faces) -> ShootSample:
        bud.charge(_best_of(samples, survivors))
        D = ShootParams(d10=tuning["d10"], d20=tuning["d20"],
                        d22=tuning["d22"])
        C = dataclasses.replace(base, exit_faces=faces)
        sample = classify(D, P, C)
        samples.append(sample)
        if sample.survived:
            if set(faces) >= set(base.exit_faces):
                survivors.append(sample)
            else:
                # a restricted-face run that never crossed its watched faces
                # may be a genuine survivor: verify with everything armed
                bud.charge(_best_of(samples, survivors))
                confirm = classify(sample.D, P, base)
                samples.append(confirm)
                if confirm.survived:
                    survivors.append(confirm)
        return sample

    for sweep in range(sweeps):
        if survivors:
            break
        for stage in _STAGE_ORDER:
            if survivors:
                break
            face = _STAGE_FACE[stage]
            faces = _STAGE_FACES[stage]
            lo, hi = -2.0, 2.0
            tuning[stage] = lo
            v_lo = _mode_value(evaluate(faces), face)
            tuning[stage] = hi
            v_hi = _mode_value(evaluate(faces), face)
            if v_lo * v_hi > 0.0:
                # no sign change: the mode is controlled at both ends
                tuning[stage] = 0.0
                brackets[stage] = (lo, hi, "no-sign-change")
                continue
            if v_lo > 0.0:
                lo, hi = hi, lo  # orient so lo scores negative
            for _ in range(depth_of[stage]):
                mid = 0.5 * (lo + hi)
                tuning[stage] = mid
                if _mode_value(evaluate(faces), face) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if survivors:
                    break
            tuning[stage] = 0.5 * (lo + hi)
            brackets[stage] = (min(lo, hi), max(lo, hi), "bracketed")

        if not survivors:
            final = evaluate(base.exit_faces)
            if final.survived:
                break

    return SearchResult(best=_best_of(samples, survivors),
                        survivors=survivors, samples=samples,
                        brackets=brackets, evaluations=bud.used)


def _best_of(samples, survivors):
    if survivors:
        return max(survivors, key=lambda s: s.s_end)
    if samples:
        return max((s for s in samples if s.outcome != "error"),
                   key=lambda s: (s.exit_s if s.exit_s is not None
                                  else s.s_end),
                   default=samples[-1])
    return None


def transversality_probe(sample: ShootSample, steps: int = 5) -> bool:
    """True iff the exited face's ratio strictly increases past the exit.

    Requires an exited sample whose trajectory kept recording after the
    crossing (post_exit_snapshots in RunControls).
    """
    if sample.outcome != "exited":
        raise ValueError("transversality_probe requires an exited sample")
    traj = sample.trajectory
    face = sample.exit_face
    from .evolution import mode_box_radius

    ratios = []
    for s, m1, m2 in zip(traj.s_series, traj.modes1, traj.modes2):
        if s < sample.exit_s:
            continue
        val = {"q10": m1.q0, "q11": m1.q1,
               "q20": m2.q0, "q21": m2.q1, "q22": m2.q2}[face]
        ratios.append(abs(val) / mode_box_radius(face, s, traj.P))
    if len(ratios) < steps + 1:
        return False
    window = ratios[:steps + 1]
    return all(b > a for a, b in zip(window[:-1], window[1:]))
