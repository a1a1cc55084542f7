import json
import math

import numpy as np
import pytest

from blowuplab.errors import SeriesTooShort
from blowuplab.evolution import ComplexField, History
from blowuplab.hermite import ModeVector
from blowuplab.initial_data import theta_of_x
from blowuplab.monitor import (
    VAReport,
    check_P2,
    check_P3,
    check_VA,
    mode_ode_residuals,
    snapshot_report,
)
from blowuplab.profiles import Uhat

from conftest import make_params


def zero_modes():
    return ModeVector(q0=0.0, q1=0.0, q2=0.0, qminus_norm=0.0, qe_norm=0.0)


def modes_with(**overrides):
    base = dict(q0=0.0, q1=0.0, q2=0.0, qminus_norm=0.0, qe_norm=0.0)
    base.update(overrides)
    return ModeVector(**base)


class TestCheckVA:
    def test_zero_modes_member(self, P2):
        rep = check_VA(zero_modes(), zero_modes(), 30.0, P2)
        assert rep.member
        assert all(r == 0.0 for r in rep.ratios.values())

    def test_boundary_mode_ratio_one(self, P2):
        s = 30.0
        m1 = modes_with(q0=P2.A / s**2)
        rep = check_VA(m1, zero_modes(), s, P2)
        assert rep.ratios["q10"] == pytest.approx(1.0, rel=1e-12)
        assert rep.member

    def test_crossing_reported(self, P2):
        s = 30.0
        m1 = modes_with(q0=2.0 * P2.A / s**2)
        rep = check_VA(m1, zero_modes(), s, P2)
        assert not rep.member
        assert rep.worst_face == "q10"
        assert rep.worst_ratio == pytest.approx(2.0, rel=1e-12)

    def test_all_family_normalizations(self, P2):
        # one unit of each face's box radius must normalize to ratio 1
        s = 25.0
        A, p1 = P2.A, P2.p1
        radii1 = {
            "q10": ("q0", A / s**2),
            "q11": ("q1", A / s**2),
            "q12": ("q2", A**2 * math.log(s) / s**2),
            "q1minus": ("qminus_norm", A / s**2),
            "q1e": ("qe_norm", A**2 / math.sqrt(s)),
        }
        radii2 = {
            "q20": ("q0", A**2 / s ** (p1 + 2.0)),
            "q21": ("q1", A**2 / s ** (p1 + 2.0)),
            "q22": ("q2", A**5 * math.log(s) / s ** (p1 + 2.0)),
            "q2minus": ("qminus_norm", A**2 / s ** ((p1 + 5.0) / 2.0)),
            "q2e": ("qe_norm", A**3 / s ** ((p1 + 2.0) / 2.0)),
        }
        for face, (attr, radius) in radii1.items():
            rep = check_VA(modes_with(**{attr: radius}), zero_modes(), s, P2)
            assert rep.ratios[face] == pytest.approx(1.0, rel=1e-12), face
        for face, (attr, radius) in radii2.items():
            rep = check_VA(zero_modes(), modes_with(**{attr: radius}), s, P2)
            assert rep.ratios[face] == pytest.approx(1.0, rel=1e-12), face

    def test_small_s_rejected(self, P2):
        with pytest.raises(ValueError):
            check_VA(zero_modes(), zero_modes(), 0.5, P2)


class TestCheckP2:
    def test_exact_pullback_near_zero(self):
        # data built to invert the rescaling exactly at xi = 0; a tiny
        # alpha0 makes the xi sweep negligible, so the deviation vanishes
        P = make_params(T=1e-8, alpha0=1e-6)
        X = 1.35 * P.eps0
        x = np.linspace(-X, X, 8193)
        u1 = np.zeros_like(x)
        inv = 1.0 / (P.p - 1.0)
        for i, xv in enumerate(x):
            if xv == 0.0:
                u1[i] = (P.p - 1.0) ** (-inv) * P.T**-inv
                continue
            th = theta_of_x(xv, P)
            tau = (th - P.T) / th
            u1[i] = th**-inv * float(Uhat(tau, P))
        h = History(x)
        h.append(ComplexField(x=x, u1=u1, u2=np.zeros_like(x), t=0.0))
        dev, _ = check_P2(h, 0.0, P)
        assert dev < 1e-3

    def test_flat_data_misses(self):
        P = make_params(T=1e-8)
        x = np.linspace(-0.02, 0.02, 1025)
        h = History(x)
        h.append(ComplexField(x=x, u1=np.ones_like(x),
                              u2=np.zeros_like(x), t=0.0))
        dev, (x_arg, _) = check_P2(h, 0.0, P)
        assert dev > 0.1
        r_in = (P.K0 / 4.0) * math.sqrt(P.T * abs(math.log(P.T)))
        assert r_in <= x_arg <= P.eps0

    def test_empty_region_rejected(self, P2):
        # at T = 1e-3 the inner radius already exceeds eps0
        x = np.linspace(-0.25, 0.25, 65)
        h = History(x)
        h.append(ComplexField(x=x, u1=np.ones_like(x),
                              u2=np.zeros_like(x), t=0.0))
        with pytest.raises(ValueError):
            check_P2(h, 0.0, P2)

    def test_time_past_T_rejected(self, P2):
        x = np.linspace(-0.02, 0.02, 65)
        h = History(x)
        h.append(ComplexField(x=x, u1=np.ones_like(x),
                              u2=np.zeros_like(x), t=0.0))
        with pytest.raises(ValueError):
            check_P2(h, P2.T, P2)


class TestCheckP3:
    def test_static_history_zero(self, P2):
        x = np.linspace(-0.02, 0.02, 257)
        u1 = 1.0 + x**2
        h = History(x)
        h.append(ComplexField(x=x, u1=u1, u2=np.zeros_like(x), t=0.0))
        h.append(ComplexField(x=x, u1=u1.copy(), u2=np.zeros_like(x),
                              t=1e-4))
        assert check_P3(h, 1e-4, P2) == 0.0

    def test_inner_change_invisible(self, P2):
        x = np.linspace(-0.02, 0.02, 257)
        u1 = np.ones_like(x)
        h = History(x)
        h.append(ComplexField(x=x, u1=u1, u2=np.zeros_like(x), t=0.0))
        bump = 5.0 * np.exp(-((x / (P2.eps0 / 16.0)) ** 2))
        h.append(ComplexField(x=x, u1=u1 + bump, u2=np.zeros_like(x),
                              t=1e-4))
        # the bump is concentrated well inside |x| < eps0/4
        assert check_P3(h, 1e-4, P2) < 1e-6

    def test_outer_change_measured(self, P2):
        x = np.linspace(-0.02, 0.02, 257)
        u1 = np.ones_like(x)
        h = History(x)
        h.append(ComplexField(x=x, u1=u1, u2=np.zeros_like(x), t=0.0))
        u1b = u1.copy()
        u1b[np.abs(x) >= P2.eps0] += 0.25
        h.append(ComplexField(x=x, u1=u1b, u2=np.zeros_like(x), t=1e-4))
        assert check_P3(h, 1e-4, P2) == pytest.approx(0.25, rel=1e-12)


def _series(P, fn, s_lo=20.0, s_hi=24.0, n=41):
    s = np.linspace(s_lo, s_hi, n)
    zeros = np.zeros(n)
    q = fn(s)
    modes = [ModeVector(q0=q[i], q1=q[i], q2=q[i],
                        qminus_norm=0.0, qe_norm=0.0) for i in range(n)]
    return s, modes, zeros


class TestModeOdeResiduals:
    def test_growing_mode_null_residual(self, P2):
        # q' = q is solved exactly by e^(s - s0); only spline and finite
        # difference error remains
        s = np.linspace(20.0, 24.0, 41)
        q = np.exp(s - 20.0)
        modes = [ModeVector(q0=q[i], q1=0.0, q2=0.0,
                            qminus_norm=0.0, qe_norm=0.0)
                 for i in range(s.size)]
        res = mode_ode_residuals(s, modes, modes, P2)
        r = res["q10"]["residual"]
        assert np.abs(r).max() / q.max() < 1e-4

    def test_half_rate_mode(self, P2):
        s = np.linspace(20.0, 24.0, 41)
        q = np.exp(0.5 * (s - 20.0))
        modes = [ModeVector(q0=0.0, q1=q[i], q2=0.0,
                            qminus_norm=0.0, qe_norm=0.0)
                 for i in range(s.size)]
        res = mode_ode_residuals(s, modes, modes, P2)
        assert np.abs(res["q11"]["residual"]).max() / q.max() < 1e-4

    def test_neutral_decay_law(self, P2):
        # q' = -(2/s) q is solved exactly by c / s^2
        s = np.linspace(20.0, 24.0, 41)
        q = 3.0 / s**2
        modes = [ModeVector(q0=0.0, q1=0.0, q2=q[i],
                            qminus_norm=0.0, qe_norm=0.0)
                 for i in range(s.size)]
        res = mode_ode_residuals(s, modes, modes, P2)
        assert np.abs(res["q12"]["residual"]).max() < 1e-10

    def test_fitted_constant_recovers_forcing(self, P2):
        # q = a / s^2 under the rate-1 law leaves residual ~ -a/s^2, so
        # fitted_C (residual times s^2) recovers a up to the 2/s correction
        a = 0.7
        s = np.linspace(20.0, 24.0, 41)
        q = a / s**2
        modes = [ModeVector(q0=q[i], q1=0.0, q2=0.0,
                            qminus_norm=0.0, qe_norm=0.0)
                 for i in range(s.size)]
        res = mode_ode_residuals(s, modes, modes, P2)
        assert res["q10"]["fitted_C"] == pytest.approx(a, rel=0.2)

    def test_short_series_rejected(self, P2):
        s = np.linspace(20.0, 21.0, 4)
        modes = [ModeVector(q0=0.0, q1=0.0, q2=0.0,
                            qminus_norm=0.0, qe_norm=0.0)] * 4
        with pytest.raises(SeriesTooShort):
            mode_ode_residuals(s, modes, modes, P2)


class TestSnapshotReport:
    def test_json_round_trip(self, P2):
        va = VAReport(s=20.0, ratios={"q10": 0.5}, member=True,
                      worst_face="q10", worst_ratio=0.5)
        rec = json.loads(snapshot_report(20.0, va, P2_dev=0.1,
                                         P3_dev=0.05, P=P2))
        assert rec["s"] == 20.0
        assert rec["in_S"] is True
        assert rec["worst_face"] == "q10"
        assert rec["P2_dev"] == 0.1

    def test_membership_needs_all_layers(self, P2):
        va = VAReport(s=20.0, ratios={"q10": 0.5}, member=True,
                      worst_face="q10", worst_ratio=0.5)
        rec = json.loads(snapshot_report(20.0, va,
                                         P2_dev=P2.delta0 * 2.0, P=P2))
        assert rec["in_S"] is False
        rec = json.loads(snapshot_report(20.0, va, P3_dev=P2.eta0 * 2.0,
                                         P=P2))
        assert rec["in_S"] is False

    def test_box_exit_alone_breaks_membership(self, P2):
        va = VAReport(s=20.0, ratios={"q10": 1.5}, member=False,
                      worst_face="q10", worst_ratio=1.5)
        rec = json.loads(snapshot_report(20.0, va))
        assert rec["in_S"] is False
