import numpy as np
import pytest

from blowuplab.errors import DomainError
from blowuplab.profiles import (
    H22_constants,
    Phi,
    Uhat,
    Ustar,
    Vhat2,
    determine_H22_constants,
    f0,
    g0,
    outer_R,
    outer_ode_residuals,
)

from conftest import make_params


class TestBasicProfiles:
    def test_f0_at_zero_is_kappa(self, P2, P3):
        for P in (P2, P3):
            assert f0(0.0, P) == pytest.approx(P.kappa)

    def test_g0_at_zero(self, P2):
        assert g0(0.0, P2) == 0.0

    def test_f0_closed_form_p2(self, P2):
        z = np.linspace(-5, 5, 41)
        assert np.allclose(f0(z, P2), 1.0 / (1.0 + z**2 / 8.0), rtol=1e-14)

    def test_g0_matches_R21(self, P2):
        z = np.linspace(-5, 5, 17)
        assert np.allclose(g0(z, P2), outer_R(z, P2)["R21"], rtol=1e-14)


class TestPhi:
    def test_phi_at_origin(self, P2, P3):
        for P in (P2, P3):
            s = 30.0
            ev = Phi(0.0, s, P)
            n, p, kappa = P.n, P.p, P.kappa
            assert ev.phi1 == pytest.approx(kappa + n * kappa / (2 * p * s))
            assert ev.phi2 == pytest.approx(-2 * n * kappa / ((p - 1) * s**2))

    def test_phi1_positive(self, P2):
        y = np.linspace(-50, 50, 301)
        for s in (1.0, 10.0, 200.0):
            assert np.all(Phi(y, s, P2).phi1 > 0)

    def test_phi2_changes_sign(self, P2):
        y = np.linspace(0, 20, 400)
        vals = Phi(y, 100.0, P2).phi2
        assert vals.min() < 0 < vals.max()

    @pytest.mark.parametrize("pval", [2.0, 3.0, 2.5])
    def test_y_derivatives_vs_central_differences(self, pval):
        P = make_params(p=pval, p1=0.2, delta0=0.05)
        s = 25.0
        y = np.array([0.0, 0.7, 2.3, 5.0, 11.0])
        h = 1e-5
        ev = Phi(y, s, P)
        fd1 = (Phi(y + h, s, P).phi1 - Phi(y - h, s, P).phi1) / (2 * h)
        assert np.allclose(ev.dphi1_dy, fd1, rtol=1e-7, atol=1e-10)
        fd1b = (Phi(y + h, s, P).phi2 - Phi(y - h, s, P).phi2) / (2 * h)
        assert np.allclose(ev.dphi2_dy, fd1b, rtol=1e-7, atol=1e-10)

    def test_s_derivatives_vs_central_differences(self, P2):
        s = 25.0
        y = np.array([0.0, 1.3, 4.0, 9.0])
        h = 1e-4
        ev = Phi(y, s, P2)
        fd = (Phi(y, s + h, P2).phi1 - Phi(y, s - h, P2).phi1) / (2 * h)
        assert np.allclose(ev.dphi1_ds, fd, rtol=1e-6, atol=1e-12)
        fd2 = (Phi(y, s + h, P2).phi2 - Phi(y, s - h, P2).phi2) / (2 * h)
        assert np.allclose(ev.dphi2_ds, fd2, rtol=1e-6, atol=1e-12)

    def test_laplacian_vs_central_differences_n1(self, P2):
        # n = 1: Laplacian is the plain second derivative
        s = 25.0
        y = np.array([0.0, 0.9, 3.1, 7.7])
        h = 2e-3
        for attr in ("phi1", "phi2"):
            fd2 = (getattr(Phi(y + h, s, P2), attr)
                   - 2 * getattr(Phi(y, s, P2), attr)
                   + getattr(Phi(y - h, s, P2), attr)) / h**2
            lap = getattr(Phi(y, s, P2), "lap_" + attr)
            assert np.allclose(lap, fd2, rtol=1e-4, atol=1e-9)

    def test_laplacian_radial_n3(self):
        # for n = 3 the radial Laplacian is phi'' + 2 phi'/y
        P = make_params(n=3)
        s, h = 30.0, 1e-4
        y = np.array([0.5, 2.0, 6.0])
        ev = Phi(y, s, P)
        d2 = (Phi(y + h, s, P).phi1 - 2 * ev.phi1 + Phi(y - h, s, P).phi1) / h**2
        d1 = (Phi(y + h, s, P).phi1 - Phi(y - h, s, P).phi1) / (2 * h)
        assert np.allclose(ev.lap_phi1, d2 + 2 * d1 / y, rtol=1e-5)


class TestOuterExpansion:
    def test_R10_at_zero(self, P2, P3):
        for P in (P2, P3):
            assert outer_R(0.0, P)["R10"] == pytest.approx(P.kappa)

    @pytest.mark.parametrize("pval", [2.0, 2.5, 3.0, 4.0, 5.0])
    def test_ode_residuals_below_1e8(self, pval):
        P = make_params(p=pval, p1=0.2, delta0=0.05)
        z = np.linspace(-10, 10, 401)
        res = outer_ode_residuals(z, P)
        for name, r in res.items():
            assert np.abs(r).max() < 1e-8, (name, np.abs(r).max())

    def test_determined_constants_match_closed_forms(self, P2, P3):
        for P in (P2, P3):
            (c1, c2, c3), max_res = determine_H22_constants(P)
            e1, e2, e3 = H22_constants(P)
            assert c1 == pytest.approx(e1, abs=1e-9)
            assert c2 == pytest.approx(e2, abs=1e-9)
            assert c3 == pytest.approx(e3, abs=1e-9)
            assert max_res < 1e-12

    def test_outer_derivatives_vs_central_differences(self, P3):
        z = np.array([0.4, 1.1, 3.3, 8.2])
        h = 1e-5
        d = outer_R(z, P3, derivatives=True)
        lo = outer_R(z - h, P3)
        hi = outer_R(z + h, P3)
        for name in ("R10", "R11", "R21", "R22"):
            fd = (hi[name] - lo[name]) / (2 * h)
            assert np.allclose(d[name][1], fd, rtol=1e-7, atol=1e-10), name


class TestUhatVhat:
    def test_uhat_initial_value(self, P2):
        p, K0 = P2.p, P2.K0
        expected = (p - 1 + (p - 1) ** 2 * K0**2 / (64 * p)) ** (-1 / (p - 1))
        assert Uhat(0.0, P2) == pytest.approx(expected, rel=1e-14)

    def test_uhat_vs_rk4(self, P2, P3):
        # independent oracle: RK4 on dU/dtau = U^p from the closed-form start
        for P in (P2, P3):
            taus = np.linspace(0.0, 0.95, 96)
            u = float(Uhat(0.0, P))
            h = taus[1] - taus[0]
            worst = 0.0
            for k in range(len(taus) - 1):
                f = lambda v: v**P.p
                k1 = f(u)
                k2 = f(u + 0.5 * h * k1)
                k3 = f(u + 0.5 * h * k2)
                k4 = f(u + h * k3)
                u = u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                worst = max(worst, abs(u - float(Uhat(taus[k + 1], P))))
            assert worst < 1e-8

    def test_uhat_monotone_and_domain(self, P2):
        taus = np.linspace(0.0, 0.999, 500)
        vals = Uhat(taus, P2)
        assert np.all(np.diff(vals) > 0)
        with pytest.raises(DomainError):
            Uhat(1.0, P2)

    def test_vhat2_initial_value_is_g0_at_K0(self, P2):
        assert Vhat2(0.0, P2) == pytest.approx(float(g0(P2.K0, P2)), rel=1e-13)

    def test_uhat_final_scale_matches_f0_at_K0(self, P2):
        assert (Uhat(0.0, P2, radius_sq_divisor=4.0)
                == pytest.approx(float(f0(P2.K0, P2)), rel=1e-13))


class TestUstar:
    def test_outer_branch(self, P2):
        assert Ustar(1.0, P2) == pytest.approx(0.5)
        assert Ustar(2.0, P2) == pytest.approx(0.2)

    def test_inner_branch_identity(self, P2):
        p = P2.p
        for x in (0.001, 0.01, 0.05):
            val = Ustar(x, P2)
            inner = ((p - 1) ** 2 * x**2 / (8 * p * abs(np.log(x)))) ** (-1 / (p - 1))
            assert val == pytest.approx(inner, rel=1e-13)

    def test_monotone_decreasing(self, P2):
        x = np.geomspace(1e-4, 50.0, 4000)
        vals = Ustar(x, P2)
        assert np.all(np.diff(vals) < 0)

    def test_ordering_property(self, P2):
        x = np.geomspace(P2.eps0, 100.0, 500)
        assert np.all(Ustar(x, P2) <= Ustar(P2.eps0, P2) + 1e-15)

    def test_domain_error_at_zero(self, P2):
        with pytest.raises(DomainError):
            Ustar(0.0, P2)

    def test_positive_everywhere(self, P2):
        x = np.geomspace(1e-6, 100.0, 1000)
        assert np.all(Ustar(x, P2) > 0)
