"""Symbol construction, closed-form Fourier coefficients and half-weighted pairings."""

import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from fhtoeplitz._tails import DivergentPairingError
from fhtoeplitz.symbols import (
    FHSymbol, FourierSeries, GridSymbol, beta_series, binomial_coeffs, eval_symbol,
    fourier_coeffs, grid_fourier_coeffs, inner_half, log_inverse_series, mix_symbol,
    power_product_series, singular_coeffs,
)

alphas = st.floats(-0.45, 0.45).filter(lambda a: abs(a) > 1e-3)


def quad_coeff(fn, k):
    # (1/pi) int_0^pi f cos(k theta); the algebraic weight absorbs theta = 0
    val, _ = quad(lambda t: fn(t) * np.cos(k * t), 0, np.pi, limit=400, epsabs=1e-12)
    return val / np.pi


# -- FHSymbol ----------------------------------------------------------------

class TestFHSymbol:
    def test_rejects_alpha_out_of_range(self):
        for a in (0.5, -0.5, 0.7):
            with pytest.raises(ValueError):
                FHSymbol(a)

    def test_rejects_root_in_disk(self):
        with pytest.raises(ValueError):
            FHSymbol(0.1, (1.0, -2.0))  # root at 1/2
        with pytest.raises(ValueError):
            FHSymbol(0.1, (1.0, -1.0))  # root on the circle

    def test_rejects_nonpositive_leading(self):
        with pytest.raises(ValueError):
            FHSymbol(0.1, (-1.0, 0.2))

    def test_regular_part(self):
        f = FHSymbol(0.2, (1.0, 0.4))
        th = np.linspace(0, np.pi, 7)
        assert np.allclose(f.c(th), np.abs(1 + 0.4 * np.exp(1j * th)) ** 2)
        assert f.c_at_zero == pytest.approx(1.96)

    def test_record_round_trip(self):
        f = FHSymbol(-0.3, (1.0, 0.4, 0.1), "x")
        assert FHSymbol.loads(f.dumps()) == f
        assert json.loads(f.dumps())["alpha"] == -0.3

    def test_even(self):
        f = FHSymbol(0.3, (1.0, -0.3))
        th = np.linspace(0.1, 3, 9)
        assert np.allclose(eval_symbol(f, th), eval_symbol(f, -th))

    def test_value_at_zero(self):
        assert eval_symbol(FHSymbol(0.2), 0.0) == 0.0
        assert eval_symbol(FHSymbol(-0.2), 0.0) == np.inf


# -- closed forms ------------------------------------------------------------

class TestSingularCoeffs:
    @pytest.mark.parametrize("a", [-0.4, -0.25, -0.1, 0.1, 0.25, 0.4])
    def test_gamma_form(self, a):
        k = np.arange(8)
        exact = [(-1) ** n * gamma(1 + 2 * a) / (gamma(1 + a + n) * gamma(1 + a - n)) for n in k]
        assert np.allclose(singular_coeffs(a, 7), exact, rtol=1e-13, atol=0)

    @pytest.mark.parametrize("a", [-0.3, 0.2])
    def test_mpmath_far_index(self, a):
        c = singular_coeffs(a, 5000)
        for n in (10, 999, 5000):
            ref = (-1) ** n * mpmath.gamma(1 + 2 * a) / (
                mpmath.gamma(1 + a + n) * mpmath.gamma(1 + a - n))
            assert c[n] == pytest.approx(float(ref), rel=1e-11)

    @pytest.mark.parametrize("a", [0.1, 0.35])
    def test_quadrature(self, a):
        f = FHSymbol(a)
        c = singular_coeffs(a, 5)
        for k in range(6):
            assert c[k] == pytest.approx(quad_coeff(lambda t: eval_symbol(f, t), k), abs=1e-9)

    def test_zero_exponent(self):
        c = singular_coeffs(0.0, 4)
        assert c[0] == 1.0 and np.all(c[1:] == 0)

    @given(alphas)
    def test_even_sum_is_value_at_pi(self, a):
        # f(pi) = 4^a = c0 + 2 sum (-1)^k c_k; averaging two partial sums of
        # the alternating series leaves an error of order |c_K| / K
        K = 2**14
        c = singular_coeffs(a, K)
        k = np.arange(1, c.size)
        part = c[0] + np.cumsum(2 * (-1.0) ** k * c[1:])
        assert 0.5 * (part[-1] + part[-2]) == pytest.approx(4.0**a, abs=10 * abs(c[-1]) / K)


class TestFourierCoeffs:
    def test_pure_matches_singular(self):
        f = FHSymbol(0.25)
        assert np.allclose(fourier_coeffs(f, 50).coeffs, singular_coeffs(0.25, 50))

    @pytest.mark.parametrize("a,poly", [(0.2, (1.0, -0.3)), (-0.3, (1.0, 0.4)),
                                        (0.1, (2.0, 0.5, 0.1))])
    def test_quadrature(self, a, poly):
        f = FHSymbol(a, poly)
        h = fourier_coeffs(f, 6)
        for k in range(7):
            assert h[k] == pytest.approx(quad_coeff(lambda t: eval_symbol(f, t), k), abs=1e-8)

    def test_conjugate_symmetry(self):
        h = fourier_coeffs(FHSymbol(0.3, (1.0, -0.3)), 20)
        k = np.arange(-20, 21)
        assert np.array_equal(h[k], h[-k])
        assert np.isrealobj(h.coeffs)

    def test_tail_bound_monotone(self):
        f = FHSymbol(-0.2, (1.0, 0.5))
        b = [fourier_coeffs(f, K).tail_bound for K in (8, 16, 32, 64)]
        assert all(x >= y for x, y in zip(b, b[1:]))

    def test_decay_rate(self):
        # |h(k)| ~ k^{-1-2a}
        a = 0.25
        h = fourier_coeffs(FHSymbol(a), 4096).coeffs
        p = np.log(abs(h[4096] / h[2048])) / np.log(2)
        assert p == pytest.approx(-1 - 2 * a, abs=1e-3)

    def test_evaluate_reconstructs(self):
        f = FHSymbol(0.3, (1.0, -0.3))
        h = fourier_coeffs(f, 4000)
        th = np.array([0.5, 1.5, 2.5])
        err = np.abs(h.evaluate(th) - eval_symbol(f, th))
        assert np.all(err <= h.truncation_bound(th))

    def test_csv(self, tmp_path):
        p = tmp_path / "h.csv"
        fourier_coeffs(FHSymbol(0.1), 3).to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0] == "k,value" and len(lines) == 8


class TestLogAndBeta:
    def test_log_series_quadrature(self):
        f = FHSymbol(-0.2, (1.0, 0.4))
        h = log_inverse_series(f, 5)
        for k in range(1, 6):
            ref = quad_coeff(lambda t: -np.log(eval_symbol(f, t)), k)
            assert h[k] == pytest.approx(ref, abs=1e-8)
        assert h[0] == pytest.approx(-2 * np.log(1.0))

    def test_log_constant_term(self):
        assert log_inverse_series(FHSymbol(0.1, (2.0,)), 2)[0] == pytest.approx(-2 * np.log(2))

    def test_binomial(self):
        a = 0.3
        c = binomial_coeffs(a, 5)
        ref = [gamma(k + a) / (gamma(a) * gamma(k + 1)) for k in range(6)]
        assert np.allclose(c, ref)

    @pytest.mark.parametrize("a,poly", [(0.25, (1.0,)), (-0.3, (1.0, 0.4))])
    def test_beta_identity(self, a, poly):
        # |sum beta_k z^k|^{-2} = f on the circle
        f = FHSymbol(a, poly)
        b = beta_series(f, 2**15)
        th = np.array([0.7, 1.9, 3.0])
        v = np.polyval(np.asarray(b.coeffs)[::-1], np.exp(1j * th))
        assert np.allclose(1 / np.abs(v) ** 2, eval_symbol(f, th), rtol=2e-3)
        assert not b.real_even

    def test_convolution_inverse(self):
        # coefficients of f^{-1} convolved with those of f give the identity
        f = FHSymbol(0.2, (1.0, -0.3))
        K = 2**14
        h = fourier_coeffs(f, K).two_sided()
        g = power_product_series([(f, -1)], K).two_sided()
        full = np.convolve(h, g)
        mid = full.size // 2
        assert full[mid] == pytest.approx(1.0, abs=2e-3)
        assert np.max(np.abs(full[mid - 5: mid + 6] - np.eye(1, 11, 5)[0])) < 2e-3


class TestPowerProduct:
    def test_pure_closed_form(self):
        # (1/2 pi) int |1-e^{it}|^{2g} = Gamma(1+2g) / Gamma(1+g)^2
        f1, f2 = FHSymbol(0.25), FHSymbol(-0.25)
        for s in (1, 2):
            g = 0.5 * s
            h = power_product_series([(f1, s), (f2, -s)], 2)
            assert h[0] == pytest.approx(gamma(1 + 2 * g) / gamma(1 + g) ** 2, rel=1e-13)

    def test_pushforward_values(self):
        f1, f2 = FHSymbol(0.25), FHSymbol(-0.25)
        assert power_product_series([(f1, 1), (f2, -1)], 2)[0] == pytest.approx(4 / np.pi)
        assert power_product_series([(f1, 2), (f2, -2)], 2)[0] == pytest.approx(2.0)

    def test_against_quadrature(self):
        f1, f2 = FHSymbol(0.2, (1.0, -0.3)), FHSymbol(-0.1, (1.0, 0.4))
        h = power_product_series([(f1, 1), (f2, -1)], 4)
        r = lambda t: eval_symbol(f1, t) / eval_symbol(f2, t)
        for k in range(5):
            assert h[k] == pytest.approx(quad_coeff(r, k), abs=1e-9)


class TestGrid:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSymbol(np.ones(100))
        with pytest.raises(ValueError):
            GridSymbol(-np.ones(256))

    def test_mix_rejects(self):
        with pytest.raises(ValueError):
            mix_symbol(FHSymbol(0.25), FHSymbol(-0.25), -0.1)
        with pytest.raises(ValueError):
            mix_symbol(FHSymbol(-0.1), FHSymbol(0.25), 0.1)

    @pytest.mark.parametrize("transform", ["direct", "reciprocal", "log"])
    def test_grid_matches_closed_form(self, transform):
        f = FHSymbol(-0.25, (1.0, 0.4))
        gs = GridSymbol.from_fh(f, 2**14)
        got = grid_fourier_coeffs(gs, 64, transform)
        ref = {"direct": fourier_coeffs(f, 64),
               "reciprocal": power_product_series([(f, -1)], 64),
               "log": log_inverse_series(f, 64)}[transform]
        sign = -1 if transform == "log" else 1
        assert np.allclose(got.coeffs, sign * np.asarray(ref.coeffs), atol=1e-12)
        assert got.flag == "ok"

    def test_mix_at_zero_is_f2(self):
        f1, f2 = FHSymbol(0.25), FHSymbol(-0.25, (1.0, 0.3))
        m = mix_symbol(f1, f2, 0.0, 2**12)
        assert np.allclose(m.values[1:], eval_symbol(f2, m.theta[1:]))

    def test_k_limit(self):
        with pytest.raises(ValueError):
            grid_fourier_coeffs(GridSymbol(np.ones(256)), 65)


class TestInnerHalf:
    def test_closed_form_pairing(self):
        # sum_m |m| (1/m)(1/m^2) over m != 0 = 2 zeta(2)
        K = 4096
        m = np.arange(K + 1, dtype=float)
        h = FourierSeries(np.concatenate([[0], 1 / m[1:]]))
        g = FourierSeries(np.concatenate([[0], 1 / m[1:] ** 2]))
        r = inner_half(h, g)
        assert r.value == pytest.approx(2 * np.pi**2 / 6, rel=1e-8)
        assert r.tail_estimate >= 0
        assert r.exponent == pytest.approx(-2.0, abs=1e-6)

    def test_divergent(self):
        m = np.arange(1025, dtype=float)
        h = FourierSeries(np.concatenate([[0], m[1:] ** -0.6]))
        with pytest.raises(DivergentPairingError):
            inner_half(h, h)

    def test_normalization_mismatch(self):
        with pytest.raises(ValueError):
            inner_half(FourierSeries(np.ones(4)), FourierSeries(np.ones(4), False))

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.05, 0.45), st.floats(-0.45, -0.05))
    def test_symmetric(self, a, b):
        h = log_inverse_series(FHSymbol(b), 2048)
        g = power_product_series([(FHSymbol(a), 1)], 2048)
        assert inner_half(h, g).value == pytest.approx(inner_half(g, h).value, rel=1e-12)
