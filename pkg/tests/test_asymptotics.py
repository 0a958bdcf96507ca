"""Case classification, expansion constants and the Psi_1 machinery."""

import logging

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import beta as Beta, gamma

from fhtoeplitz import asymptotics as asy
from fhtoeplitz.asymptotics import Case
from fhtoeplitz.spectral import log_mgf
from fhtoeplitz.symbols import FHSymbol, power_product_series
from fhtoeplitz.toeplitz import gen_eigs, trace_ratio_power

# exact Taylor data of Psi_1 (diagonal constant) for (0.25, -0.25), c = 1
PSI_FROZEN = [-0.318310015, 0.905284735, -4.24413182, 27.9691115]


class TestClassify:
    @pytest.mark.parametrize("a1,a2,case", [
        (0.25, -0.25, Case.C1ii), (-0.3, -0.1, Case.C1i), (0.1, 0.4, Case.C2iib),
        (-0.3, 0.3, Case.C2i), (-0.1, 0.2, Case.C2iia), (0.4, -0.45, Case.C1ii),
    ])
    def test_examples(self, a1, a2, case):
        assert asy.classify_case(a1, a2).case is case

    @pytest.mark.parametrize("a1,a2", [(0.2, 0.2), (-0.3, 0.2), (-0.4, 0.1), (0.2, 0.0),
                                       (-0.25, 0.25)])
    def test_boundaries(self, a1, a2):
        # differences 0, 1/2, 1/2 and alpha2 = 0, 1/2 sit on the partition lines
        assert asy.classify_case(a1, a2).case is Case.OUT_OF_RANGE

    def test_outside_square(self):
        with pytest.raises(ValueError):
            asy.classify_case(0.6, 0.1)

    @given(st.floats(-0.49, 0.49), st.floats(-0.49, 0.49))
    def test_partition(self, a1, a2):
        tag = asy.classify_case(a1, a2)
        d = a2 - a1
        conds = {
            Case.C1i: a2 < 0 and 0 < d < 0.5,
            Case.C1ii: a2 < 0 and -1 < d < 0,
            Case.C2i: a2 > 0 and 0.5 < d < 1,
            Case.C2iia: a2 > 0 and a1 < 0 and 0 < abs(d) < 0.5,
            Case.C2iib: a2 > 0 and a1 > 0 and 0 < abs(d) < 0.5,
        }
        hits = [c for c, ok in conds.items() if ok]
        assert len(hits) <= 1
        assert tag.case is (hits[0] if hits else Case.OUT_OF_RANGE)
        assert tag.beta == pytest.approx(d)


class TestIntegrals:
    def test_gtilde_mpmath(self):
        mpmath.mp.dps = 15
        e = 0.6

        def G(x):
            inner = mpmath.quad(lambda t: t**(e - 2) * ((1 - t)**e - 1)
                                - t**e * (1 - t)**(e - 2), [0, x / 2, x])
            return inner + x**(e - 1) / (e - 1)
        ref = mpmath.quad(G, [0.5, 0.9, 0.99, 1])
        assert asy.gtilde_integral(0.3) == pytest.approx(float(ref), abs=1e-8)

    def test_gtilde_quarter(self):
        # frozen: the a2 = 1/4 value is -pi to quadrature accuracy
        assert asy.gtilde_integral(0.25) == pytest.approx(-np.pi, abs=1e-8)

    def test_gtilde_tolerance_stable(self):
        assert asy.gtilde_integral(0.25, tol=1e-10) == pytest.approx(
            asy.gtilde_integral(0.25, tol=1e-9), abs=1e-8)

    def test_gtilde_domain(self):
        with pytest.raises(ValueError):
            asy.gtilde_integral(-0.1)

    def test_k_alpha_companion(self):
        # double integral alone = gtilde minus the integrated x^{2a-1}/(2a-1) term
        a = 0.3
        e = 2 * a
        D = asy.gtilde_integral(a) - (1 - 2**-e) / (e * (e - 1))
        assert asy.k_alpha(a) == pytest.approx(D + 1 / (e * (e - 1)), rel=1e-12)

    def test_case1i_closed_form(self):
        f1, f2 = FHSymbol(-0.3, (1.0, 0.4)), FHSymbol(-0.1)
        c = asy.case1i_constant(f1, f2)
        assert c["first"] == pytest.approx(c["first_closed_form"], rel=1e-8)
        g = 0.4
        C = f1.c_at_zero / (gamma(0.6) * gamma(-0.2))
        assert c["first_closed_form"] == pytest.approx(2 * C * Beta(g - 1, 1.9))


class TestC1:
    def test_variants_equal_for_pure_equal_exponent_shape(self):
        # record both variants; they differ in the third slot only
        f1, f2 = FHSymbol(0.25), FHSymbol(-0.25)
        c = asy.c1_constant(f1, f2, K=2**14)
        lnf1 = c.pairings["lnf1_g"]["value"]
        f1g = c.pairings["f1_g"]["value"]
        assert c.statement - c.proof == pytest.approx(-2 * 0.75 * (f1g - lnf1), rel=1e-10)

    def test_vanishing_log(self):
        # as a2 -> 0- the log pairings vanish; <ln f1, 1/f2> does not, because
        # 1/f2 is 0 at theta = 0 for every a2 < 0 and its coefficients sum to -1/2
        c = asy.c1_constant(FHSymbol(0.25), FHSymbol(-1e-6), K=2**14)
        assert abs(c.proof) < 1e-5
        assert c.statement == pytest.approx(2 * 0.25, abs=1e-5)

    def test_frozen_values(self, c1ii_pair):
        c = asy.c1_constant(*c1ii_pair)
        assert c.total("statement") == pytest.approx(0.65430, abs=1e-4)
        assert c.total("proof") == pytest.approx(0.46796, abs=1e-4)
        assert c.base == pytest.approx(0.29090, abs=1e-4)

    def test_diagonal_is_inverse_pi(self, c1ii_pair):
        assert asy.diagonal_constant(*c1ii_pair) == pytest.approx(-1 / np.pi, abs=1e-6)

    def test_diagonal_smooth_factor(self):
        # against extrapolated exact traces
        f1, f2 = FHSymbol(0.2, (1.0, -0.3)), FHSymbol(-0.15, (1.0, 0.4))
        arb = asy.arbitrate_c1(f1, f2, variants=asy.VARIANTS)
        assert arb.selected == "diagonal" and arb.matched

    def test_arbitration_logs(self, c1ii_pair, caplog):
        with caplog.at_level(logging.INFO, logger="fhtoeplitz"):
            arb = asy.arbitrate_c1(*c1ii_pair)
        assert "NO variant matches" in caplog.text
        assert not arb.matched
        assert arb.limit == pytest.approx(-1 / np.pi, abs=1e-4)

    def test_richardson(self):
        Ns = [64, 128, 256, 512]
        L, p, unc = asy.richardson_limit(Ns, [2.0 + 3.0 * N**-0.7 for N in Ns])
        assert L == pytest.approx(2.0, abs=1e-12) and p == pytest.approx(0.7)


class TestPredictTrace:
    @pytest.mark.parametrize("a1,a2,poly1", [(-0.3, -0.1, (1.0, 0.4)), (0.25, -0.25, (1.0,)),
                                             (-0.3, 0.3, (1.0,)), (-0.1, 0.2, (1.0,)),
                                             (0.1, 0.3, (1.0,))])
    def test_error_exponent_negative(self, a1, a2, poly1):
        p = asy.predict_trace(FHSymbol(a1, poly1), FHSymbol(a2), c1_variant="diagonal",
                              K=2**14)
        assert p.error_exponent < 0
        rec = p.to_record()
        assert rec["case"] == p.case.case.value and rec["terms"]

    def test_out_of_range(self):
        with pytest.raises(asy.OutOfRangeError):
            asy.predict_trace(FHSymbol(0.2), FHSymbol(0.2))

    def test_c1ii_value(self, c1ii_pair):
        p = asy.predict_trace(*c1ii_pair, c1_variant="diagonal")
        assert p.value(1024) == pytest.approx(1025 * 4 / np.pi - 1 / np.pi, abs=1e-6)
        exact = trace_ratio_power(*c1ii_pair, 2048, 1, "structured")
        assert abs(exact - p.value(2048)) < 2e-4

    def test_c1i_bounded(self):
        # residual / N^{2a2-2a1} stays bounded
        f1, f2 = FHSymbol(-0.3, (1.0, 0.4)), FHSymbol(-0.1)
        p = asy.predict_trace(f1, f2, K=2**14)
        r = [(trace_ratio_power(f1, f2, N, 1, "structured") - p.main_term(N)) / N**0.4
             for N in (256, 1024, 4096)]
        assert np.ptp(r) < 0.05 * abs(r[-1])


class TestPsi:
    def test_psi1_zero_matches_c1_path(self, c1ii_pair):
        c = asy.c1_constant(*c1ii_pair)
        assert asy.psi1(*c1ii_pair, 0.0, "statement") == pytest.approx(
            c.base - c.statement, abs=1e-6)

    def test_psi1_diagonal_zero(self, c1ii_pair):
        assert asy.psi1(*c1ii_pair, 0.0) == pytest.approx(-1 / np.pi, abs=1e-6)

    def test_taylor_frozen(self, c1ii_pair):
        a = asy.psi_taylor(*c1ii_pair, 3)
        l = np.arange(4)
        assert np.allclose(a * gamma(l + 1), PSI_FROZEN, rtol=1e-6)

    def test_fit_against_taylor(self, c1ii_pair):
        d = asy.psi_derivatives(*c1ii_pair, 6)
        exact = asy.psi_taylor(*c1ii_pair, 3) * gamma(np.arange(4) + 1)
        for l in range(3):
            err = abs(d.values[l] - exact[l])
            assert err < 1e-6 * max(1, abs(exact[l]))
            # the reported uncertainty tracks the actual error
            assert err <= 10 * d.uncertainty[l] + 1e-8
        assert "regular-part-rough" in d.flags

    def test_scaling(self):
        # Psi_1^{(l)}(0) scales as lam^{l+1} when f1 -> lam f1
        f1, f2 = FHSymbol(0.25), FHSymbol(-0.25, (1.0, 0.3))
        lam = 1.7
        a = asy.psi_taylor(f1, f2, 3, K=2**16)
        b = asy.psi_taylor(FHSymbol(0.25, (np.sqrt(lam),)), f2, 3, K=2**16)
        assert np.allclose(b, a * lam ** (np.arange(4) + 1), rtol=1e-8)

    def test_power_traces_second_pair(self):
        # d_s(N) -> (-1)^{s-1} Psi_1^{(s-1)}(0)/(s-1)! away from the quarter pair
        f1, f2 = FHSymbol(0.4), FHSymbol(-0.1)
        d = asy.psi_derivatives(f1, f2, 6)
        exact = asy.psi_taylor(f1, f2, 2) * gamma(np.arange(3) + 1)
        assert np.allclose(d.values[:3], exact, rtol=1e-6)
        for s in (1, 2, 3):
            m = power_product_series([(f1, s), (f2, -s)], 2)[0]
            pred = (-1) ** (s - 1) * d.values[s - 1] / gamma(s)
            g = [abs(trace_ratio_power(f1, f2, N, s) - (N + 1) * m - pred)
                 for N in (512, 1024, 2048)]
            assert g[0] > g[1] > g[2] and g[2] < 2e-5

    def test_series_band(self):
        v, band = asy.psi_series([1.0, 0.0, 0.0], 0.1, [0.1, 0, 0])
        assert v == pytest.approx(0.1) and band >= 0.01


class TestCorollaryAndRate:
    def test_product_limit_gamma(self):
        h1, h2 = FHSymbol(0.1), FHSymbol(0.15)
        g = 0.25
        assert asy.product_trace_limit(h1, h2, 1) == pytest.approx(
            gamma(1 + 2 * g) / gamma(1 + g) ** 2, rel=1e-9)

    def test_product_requires_positive(self):
        with pytest.raises(ValueError):
            asy.product_trace_limit(FHSymbol(-0.1), FHSymbol(0.1), 1)

    def test_rate_constant_ratio(self):
        f1, f2 = FHSymbol(0.0, (2.0,)), FHSymbol(0.0)
        t = 0.05
        assert asy.rate_function(f1, f2, t) == pytest.approx(-0.5 * np.log(1 - 8 * t), rel=1e-10)

    def test_rate_zero_and_domain(self, c1ii_pair):
        assert asy.rate_function(*c1ii_pair, 0.0) == 0.0
        with pytest.raises(asy.DomainError):
            asy.rate_function(*c1ii_pair, 0.25)

    def test_rate_convex(self, c1ii_pair):
        ts = np.linspace(-0.2, 0.2, 9)
        L = np.array([asy.rate_function(*c1ii_pair, t) for t in ts])
        assert np.all(np.diff(L, 2) > 0)

    def test_rate_eigen_oracle(self, c1ii_pair):
        t = 0.0625
        L = asy.rate_function(*c1ii_pair, t)
        gaps = [abs(log_mgf(gen_eigs(*c1ii_pair, N), t) - L) for N in (512, 1024, 2048)]
        assert gaps[0] > gaps[1] > gaps[2]
