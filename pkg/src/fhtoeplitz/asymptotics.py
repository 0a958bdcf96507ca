"""Asymptotic predictions for traces, power traces and the LDP rate.

Three candidate second-order constants are carried side by side for the
case alpha2 < 0 < alpha1:

``statement``
    base + C1 where C1 pairs ln f1 with 1/f2 in its third slot.
``proof``
    base + C1 with f1 in that slot.
``diagonal``
    the limit obtained directly from the Hankel corners of the
    Gohberg-Semencul diagonal sums,
    K = -<f1, 1/f2> - 2 sum_m m l(m) sum_{s>=0} w_s f1^(s) g^(m+s),
    with l = ln f2^{-1}, g = 1/f2, w_0 = 1, w_s = 2.

The finite-N data decide between them (see ``arbitrate_c1``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.signal import fftconvolve
from scipy.special import gamma as Gamma, beta as Beta

from ._tails import sum_with_tail
from .symbols import (
    FHSymbol, FourierSeries, GridSymbol, eval_symbol, fourier_coeffs,
    grid_fourier_coeffs, inner_half, log_inverse_series, mix_symbol,
    power_product_series,
)
from .toeplitz import trace_ratio_power

log = logging.getLogger(__name__)

__all__ = [
    "Case", "CaseTag", "OutOfRangeError", "DomainError", "Term",
    "ExpansionPrediction", "C1Result", "Arbitration", "PsiDerivatives",
    "classify_case", "c1_constant", "diagonal_constant", "second_order_constant",
    "arbitrate_c1", "richardson_limit", "gtilde_integral", "k_alpha",
    "case1i_constant", "predict_trace", "predict_trace_power", "psi1",
    "psi_derivatives", "psi_taylor", "psi_series", "product_trace_limit",
    "rate_function", "ratio_sup",
]

CLOSED_FORM_VARIANTS = ("statement", "proof")
VARIANTS = CLOSED_FORM_VARIANTS + ("diagonal",)
PAIRING_K = 2**17
PSI_GRID = 2**18
QUAD_TOL = 1e-9


class Case(str, Enum):
    C1i = "C1i"
    C1ii = "C1ii"
    C2i = "C2i"
    C2iia = "C2iia"
    C2iib = "C2iib"
    OUT_OF_RANGE = "OUT_OF_RANGE"


@dataclass(frozen=True)
class CaseTag:
    case: Case
    alpha1: float
    alpha2: float

    @property
    def beta(self):
        return self.alpha2 - self.alpha1

    @property
    def in_range(self):
        return self.case is not Case.OUT_OF_RANGE


class OutOfRangeError(ValueError):
    pass


class DomainError(ValueError):
    pass


def classify_case(a1: float, a2: float) -> CaseTag:
    if not (abs(a1) < 0.5 and abs(a2) < 0.5):
        raise ValueError("exponents must lie in (-1/2, 1/2)")
    d = a2 - a1
    c = Case.OUT_OF_RANGE
    if a2 < 0:
        if 0 < d < 0.5:
            c = Case.C1i
        elif -1 < d < 0:
            c = Case.C1ii
    elif a2 > 0:
        if 0.5 < d < 1:
            c = Case.C2i
        elif abs(d) < 0.5 and d != 0:
            if a1 < 0:
                c = Case.C2iia
            elif a1 > 0:
                c = Case.C2iib
    return CaseTag(c, float(a1), float(a2))


# -- pairings ---------------------------------------------------------------

def _neg(series: FourierSeries) -> FourierSeries:
    return FourierSeries(-series.coeffs, series.real_even, series.tail_bound,
                         series.flag, dict(series.meta))


def _pairing_series(f1: FHSymbol, f2, K, M):
    """f1, ln f1, l = ln f2^{-1}, g = 1/f2, q = f1/f2 up to order K."""
    out = {"f1": fourier_coeffs(f1, K), "ln_f1": _neg(log_inverse_series(f1, K))}
    if isinstance(f2, FHSymbol):
        out["ell"] = log_inverse_series(f2, K)
        out["g"] = power_product_series([(f2, -1)], K)
        out["q"] = power_product_series([(f1, 1), (f2, -1)], K)
        out["alpha2"] = f2.alpha
    elif isinstance(f2, GridSymbol):
        K = min(K, f2.M // 4)
        out["ell"] = _neg(grid_fourier_coeffs(f2, K, "log"))
        out["g"] = grid_fourier_coeffs(f2, K, "reciprocal")
        q = GridSymbol.from_fh(f1, f2.M) * f2.power(-1)
        out["q"] = grid_fourier_coeffs(q, K, "direct")
        out["alpha2"] = f2.exponent
    else:
        raise TypeError("f2 must be an FHSymbol or a GridSymbol")
    return out


@dataclass(frozen=True)
class C1Result:
    statement: float
    proof: float
    base: float  # f1^(0) <ln f2^{-1}, 1/f2>
    pairings: dict
    K: int
    flags: tuple = ()

    def total(self, variant):
        return self.base + getattr(self, variant)


def c1_constant(f1: FHSymbol, f2sym, K=PAIRING_K, M=PSI_GRID) -> C1Result:
    """Both readings of C1, assembled from half-weighted pairings."""
    S = _pairing_series(f1, f2sym, K, M)
    a2 = S["alpha2"]
    p = {
        "ell_q": inner_half(S["ell"], S["q"]),
        "ell_g": inner_half(S["ell"], S["g"]),
        "lnf1_g": inner_half(S["ln_f1"], S["g"]),
        "f1_g": inner_half(S["f1"], S["g"]),
    }
    f0 = float(S["f1"].coeffs[0])
    core = p["ell_q"].value - p["ell_g"].value * f0
    stmt = -2 * (a2 + 1) * (core - p["lnf1_g"].value)
    prf = -2 * (a2 + 1) * (core - p["f1_g"].value)
    flags = tuple(f"{k}:{v.flag}" for k, v in p.items() if v.flag != "ok")
    return C1Result(float(stmt), float(prf), f0 * p["ell_g"].value,
                    {k: asdict(v) for k, v in p.items()}, S["g"].K, flags)


def _corner_sum(ell: FourierSeries, g: FourierSeries, f1c: np.ndarray):
    """sum_{m>=1} m l(m) c(m), c(m) = sum_{s>=0} w_s f1^(s) g^(m+s)."""
    K = min(g.K, len(f1c) - 1)
    a = f1c[:K + 1].copy()
    a[1:] *= 2.0
    gc = np.asarray(g.coeffs[:K + 1], dtype=float)
    c = fftconvolve(a[::-1], gc)[K:]  # c[m] = sum_s a_s g_{m+s}
    Km = min(K // 2, ell.K)
    m = np.arange(1, Km + 1)
    return sum_with_tail(m * ell.coeffs[1:Km + 1] * c[1:Km + 1])


def diagonal_constant(f1: FHSymbol, f2sym, K=PAIRING_K, M=PSI_GRID, series=None):
    """Limit of Tr - Tr T_N(f1/f2) from the corner expansion (alpha2 < 0)."""
    S = series or _pairing_series(f1, f2sym, K, M)
    f1_g = inner_half(S["f1"], S["g"])
    corner = _corner_sum(S["ell"], S["g"], np.asarray(S["f1"].coeffs))
    return float(-f1_g.value - 2.0 * corner.value)


def second_order_constant(f1, f2sym, variant="diagonal", K=PAIRING_K, M=PSI_GRID):
    if variant == "diagonal":
        return diagonal_constant(f1, f2sym, K, M)
    if variant not in CLOSED_FORM_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    return c1_constant(f1, f2sym, K, M).total(variant)


def richardson_limit(Ns, values):
    """Limit of v(N) = L + A N^{-p} from the last three points of a doubling grid.

    Returns (limit, rate p, uncertainty) where the uncertainty compares with
    the estimate from the previous triple when available.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise ValueError("need at least three grid points")

    def est(v1, v2, v3, r):
        d1, d2 = v1 - v2, v2 - v3
        if d1 == 0 or d2 == 0 or d1 / d2 <= 1:
            return v3, np.nan
        p = np.log(d1 / d2) / np.log(r)
        return v3 - d2 / (r**p - 1), p

    r = Ns[-1] / Ns[-2]
    L, p = est(*v[-3:], r)
    unc = abs(v[-1] - v[-2])
    if len(v) >= 4:
        L0, _ = est(*v[-4:-1], r)
        unc = abs(L - L0)
    return float(L), float(p), float(unc)


@dataclass(frozen=True)
class Arbitration:
    selected: str
    candidates: dict
    limit: float
    limit_uncertainty: float
    distances: dict
    matched: bool
    residuals: dict = field(default_factory=dict)


def arbitrate_c1(f1, f2, Ns=(512, 1024, 2048, 4096), variants=CLOSED_FORM_VARIANTS,
                 match_tol=1e-3, K=PAIRING_K):
    """Pick the constant variant closest to the extrapolated residual limit."""
    q0 = power_product_series([(f1, 1), (f2, -1)], 2).coeffs[0]
    res = {N: trace_ratio_power(f1, f2, N, 1, "structured") - (N + 1) * q0 for N in Ns}
    L, _, unc = richardson_limit(list(Ns), [res[N] for N in Ns])
    cands = {}
    need_c1 = [v for v in variants if v in CLOSED_FORM_VARIANTS]
    if need_c1:
        c1 = c1_constant(f1, f2, K)
        cands.update({v: c1.total(v) for v in need_c1})
    if "diagonal" in variants:
        cands["diagonal"] = diagonal_constant(f1, f2, K)
    dist = {v: abs(c - L) for v, c in cands.items()}
    sel = min(dist, key=dist.get)
    matched = dist[sel] <= match_tol + unc
    log.info("C1 arbitration for (%s, %s): limit %.8g; %s; selected %s (%s)",
             f1.alpha, f2.alpha, L,
             ", ".join(f"{v}={c:.8g}" for v, c in cands.items()),
             sel, "match" if matched else "NO variant matches")
    return Arbitration(sel, cands, L, unc, dist, bool(matched), res)


# -- case 2 integrals -------------------------------------------------------

def _quad(fn, a, b, **kw):
    val, err = quad(fn, a, b, epsabs=QUAD_TOL, epsrel=1e-12, limit=400, **kw)
    return val, err


def gtilde_integral(a2: float, tol=QUAD_TOL) -> float:
    """Integral over x in [1/2, 1] of G~(x).

    Swapping the order of integration turns the double integral into
    single integrals against the weight w(t) = 1 - max(t, 1/2); the
    (1-t)^{2a2-2} endpoint singularity is folded into an algebraic weight.
    """
    if not 0 < a2 < 0.5:
        raise ValueError("a2 must lie in (0, 1/2)")
    e = 2 * a2

    def h1(t):
        if t >= 1:
            return -1.0
        return t ** (e - 2) * np.expm1(e * np.log1p(-t)) if t > 0 else 0.0

    i1a, r1 = quad(lambda t: h1(t) * 0.5, 0, 0.5, epsabs=tol, limit=400)
    i1b, r2 = quad(lambda t: h1(t), 0.5, 1, epsabs=tol, limit=400, weight="alg", wvar=(0, 1))
    i2a, r3 = quad(lambda t: t**e * (1 - t) ** (e - 2) * 0.5, 0, 0.5, epsabs=tol, limit=400)
    i2b, r4 = quad(lambda t: t**e, 0.5, 1, epsabs=tol, limit=400, weight="alg", wvar=(0, e - 1))
    err = r1 + r2 + r3 + r4
    if err > 10 * tol:
        raise ArithmeticError(f"quadrature error estimate {err:.2e} too large")
    return float(i1a + i1b - i2a - i2b + (1 - 2.0**-e) / (e * (e - 1)))


def k_alpha(a2: float) -> float:
    """Companion double integral; equals gtilde + 2^{-2a2} / (2a2 (2a2-1))."""
    e = 2 * a2
    return gtilde_integral(a2) + 2.0**-e / (e * (e - 1))


def case1i_constant(f1: FHSymbol, f2: FHSymbol) -> dict:
    """Explicit N^{2a2-2a1} pieces for 0 < a2 - a1 < 1/2 (by quadrature)."""
    a1, a2 = f1.alpha, f2.alpha
    g = 2 * (a2 - a1)
    C = f1.c_at_zero / (f2.c_at_zero * Gamma(-2 * a1) * Gamma(2 * a2))
    ia, _ = _quad(lambda u: u ** (g - 2) * np.expm1((a2 + 1) * np.log1p(-u)), 0, 1)
    first = 2 * C * (ia - 1 / (1 - g))
    ib, _ = _quad(lambda u: -(a2 + (1 - u) * (a2 + 2)), 0, 1,
                  weight="alg", wvar=(g - 1, a2))
    second = 2 * ib
    return {"first": float(first), "second": float(second),
            "total": float(first + second),
            "first_closed_form": float(2 * C * Beta(g - 1, a2 + 2))}


# -- predictions ------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    exponent: float
    constant: float
    provenance: str  # "explicit" or "fitted"
    note: str = ""


@dataclass(frozen=True)
class ExpansionPrediction:
    case: CaseTag
    main_coeff: float | None  # main term is (N+1) * main_coeff
    terms: tuple
    error_exponent: float  # remainder / leading term = O(N^error_exponent)
    meta: dict = field(default_factory=dict)

    def main_term(self, N):
        return 0.0 if self.main_coeff is None else (N + 1) * self.main_coeff

    def value(self, N):
        return self.main_term(N) + sum(t.constant * N**t.exponent for t in self.terms)

    def to_record(self):
        return {
            "case": self.case.case.value,
            "alpha1": self.case.alpha1,
            "alpha2": self.case.alpha2,
            "main": None if self.main_coeff is None else
            {"form": "(N+1)*coeff", "coeff": self.main_coeff},
            "terms": [asdict(t) for t in self.terms],
            "error_exponent": self.error_exponent,
            "meta": self.meta,
        }


def _fit_fixed_exponent(Ns, residuals, exponent):
    """Constant C in r(N) ~ C N^e from log|r| - e log N, with spread."""
    r = np.asarray(residuals, dtype=float)
    c = r / np.asarray(Ns, dtype=float) ** exponent
    return float(c[-1]), float(np.max(c) - np.min(c))


def predict_trace(f1: FHSymbol, f2: FHSymbol, c1_variant="arbitrate",
                  fit_grid=(256, 512, 1024, 2048), K=PAIRING_K,
                  c1i_mode="explicit") -> ExpansionPrediction:
    """Expansion of Tr(T_N(f1) T_N(f2)^{-1}) for the case of (alpha1, alpha2).

    ``c1_variant`` picks the constant for C1ii ("arbitrate" compares the
    candidates with exact traces). ``c1i_mode`` = "fitted" replaces the
    explicit N^{2a2-2a1} constant of C1i by a fit on ``fit_grid``.
    """
    tag = classify_case(f1.alpha, f2.alpha)
    if not tag.in_range:
        raise OutOfRangeError(f"(alpha1, alpha2) = ({f1.alpha}, {f2.alpha}) is out of range")
    a1, a2 = f1.alpha, f2.alpha
    g = 2 * (a2 - a1)
    meta = {"K": K}
    main = None
    if tag.case is not Case.C2i:
        main = float(power_product_series([(f1, 1), (f2, -1)], 2).coeffs[0])

    def residuals():
        return [trace_ratio_power(f1, f2, N, 1, "structured") - (0 if main is None else (N + 1) * main)
                for N in fit_grid]

    if tag.case is Case.C1i:
        cst = case1i_constant(f1, f2)
        meta["case1i_pieces"] = cst
        if c1i_mode == "fitted":
            C, spread = _fit_fixed_exponent(fit_grid, residuals(), g)
            meta["fit"] = {"grid": list(fit_grid), "spread": spread}
            terms = (Term(g, C, "fitted", "C1i"),)
        else:
            terms = (Term(g, cst["total"], "explicit", "N^{2a2-2a1} pieces"),)
        err = g - 1.0
    elif tag.case is Case.C1ii:
        if c1_variant == "arbitrate":
            arb = arbitrate_c1(f1, f2, K=K)
            meta["arbitration"] = asdict(arb)
            const, note = arb.candidates[arb.selected], f"arbitrated:{arb.selected}"
        else:
            const, note = second_order_constant(f1, f2, c1_variant, K), c1_variant
        terms = (Term(0.0, const, "explicit", note),)
        err = max(g, -1.0) - 1.0
    elif tag.case is Case.C2i:
        C, spread = _fit_fixed_exponent(fit_grid, residuals(), g)
        meta["fit"] = {"grid": list(fit_grid), "spread": spread}
        terms = (Term(g, C, "fitted", "C2"),)
        err = 1.0 - g
    elif tag.case is Case.C2iia:
        C, spread = _fit_fixed_exponent(fit_grid, residuals(), g)
        meta["fit"] = {"grid": list(fit_grid), "spread": spread}
        terms = (Term(g, C, "fitted", "C3"),)
        err = g - 1.0
    else:  # C2iib
        G = gtilde_integral(a2)
        f0 = float(fourier_coeffs(f1, 1).coeffs[0])
        const = G * 2 * f0 / (f2.c_at_zero * Gamma(a2) ** 2)
        meta["gtilde"] = G
        terms = (Term(2 * a2, const, "explicit", "gtilde"),)
        err = g - 1.0
    return ExpansionPrediction(tag, main, terms, float(err), meta)


# -- power traces -----------------------------------------------------------

def ratio_sup(f1: FHSymbol, f2: FHSymbol) -> float:
    """sup over theta of f1/f2 (theta = 0 excluded when alpha1 > alpha2)."""
    th = np.linspace(1e-6, np.pi, 4097)
    r = eval_symbol(f1, th) / eval_symbol(f2, th)
    i = int(np.argmax(r))
    lo, hi = th[max(i - 1, 0)], th[min(i + 1, th.size - 1)]
    res = minimize_scalar(lambda x: -eval_symbol(f1, x) / eval_symbol(f2, x),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(max(r[i], -res.fun))


def psi1(f1: FHSymbol, f2: FHSymbol, t: float, variant="diagonal",
         K=None, M=PSI_GRID) -> float:
    """Psi_1(t) for the mixed symbol t f1 + f2, grid path."""
    f2t = mix_symbol(f1, f2, t, M)
    K = K or M // 4
    if variant == "diagonal":
        return diagonal_constant(f1, f2t, K, M)
    if variant not in CLOSED_FORM_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    c1 = c1_constant(f1, f2t, K, M)
    return c1.base - getattr(c1, variant)


@dataclass(frozen=True)
class PsiDerivatives:
    values: np.ndarray  # Psi_1^{(l)}(0), l = 0..p
    uncertainty: np.ndarray
    t_fit: float
    degree: int
    residual: float
    variant: str
    flags: tuple = ()

    @property
    def taylor(self):
        l = np.arange(self.values.size)
        return self.values / Gamma(l + 1)


def psi_derivatives(f1, f2, p: int, variant="diagonal", t_fit=None, M=PSI_GRID,
                    n_nodes=None) -> PsiDerivatives:
    """Derivatives of Psi_1 at 0+ from a Chebyshev least-squares fit on [0, t_fit]."""
    if p > 6 or p < 0:
        raise ValueError("p must lie in 0..6")
    t_max = 1.0 / (2.0 * ratio_sup(f1, f2))
    t_fit = t_fit or 0.5 * t_max
    deg = p + 4
    n = n_nodes or 2 * deg + 6
    flags = []
    # the mixed regular part carries |1 - e^{i theta}|^{2(a1 - a2)}, which
    # has 3/2 weighted-summable coefficients only when a1 - a2 > 3/4
    if f1.alpha - f2.alpha <= 0.75:
        flags.append("regular-part-rough")
    cache = {}

    def ev(t):
        if t not in cache:
            cache[t] = psi1(f1, f2, t, variant, M=M)
        return cache[t]

    for _ in range(4):
        x = 0.5 * t_fit * (1 - np.cos(np.pi * (np.arange(n) + 0.5) / n))
        x = np.concatenate([[0.0], x])
        y = np.array([ev(t) for t in x])
        fits = [Chebyshev.fit(x, y, d, domain=[0, t_fit]) for d in (deg, deg + 1)]
        resid = float(np.max(np.abs(fits[0](x) - y)))
        if resid < 1e-7:
            break
        t_fit *= 0.5
    else:
        flags.append("fit-residual")
    ders = np.array([[f.deriv(l)(0.0) if l else f(0.0) for l in range(p + 1)] for f in fits])
    vals = ders[0]
    # degree sensitivity, plus the grid/tail error of psi1 itself (coarser grid)
    unc = np.abs(ders[0] - ders[1])
    unc[0] += abs(ev(0.0) - psi1(f1, f2, 0.0, variant, M=M // 2))
    if np.any(unc > 1e-3 * np.abs(vals)):
        flags.append("ill-conditioned")
    return PsiDerivatives(vals, unc, float(t_fit), deg, resid, variant, tuple(flags))


def psi_taylor(f1: FHSymbol, f2: FHSymbol, p: int, K=2**18) -> np.ndarray:
    """Exact Taylor coefficients a_j (Psi_1 = sum a_j t^j) of the diagonal variant.

    Expands 1/(f2 + t f1) and ln(f2 + t f1) in powers of t; every term is a
    pure power product of f1 and f2 with a closed-form series, and the
    constant is bilinear in the two expansions.
    """
    Gs = [power_product_series([(f1, j), (f2, -j - 1)], K) for j in range(p + 1)]
    Gs = [FourierSeries((-1) ** j * G.coeffs, True) for j, G in enumerate(Gs)]
    Ls = [log_inverse_series(f2, K)]
    for j in range(1, p + 1):
        Q = power_product_series([(f1, j), (f2, -j)], K)
        Ls.append(FourierSeries((-1) ** j * Q.coeffs / j, True))
    f1s = fourier_coeffs(f1, K)
    f1c = np.asarray(f1s.coeffs)
    out = np.zeros(p + 1)
    for j in range(p + 1):
        acc = -inner_half(f1s, Gs[j], check_doubling=False).value
        for i in range(j + 1):
            acc -= 2.0 * _corner_sum(Ls[i], Gs[j - i], f1c).value
        out[j] = acc
    return out


def psi_series(derivs, u, uncertainty=None):
    """Psi(u) = sum_{p>=1} (-1)^{p-1} (u^p / p) Psi_1^{(p-1)}(0) / (p-1)!.

    Returns (value, band); the band adds the propagated derivative
    uncertainty and the size of the first omitted term, estimated from the
    ratio of the last two terms.
    """
    d = np.asarray(derivs, dtype=float)
    p = np.arange(1, d.size + 1)
    a = d / Gamma(p)
    terms = (-1.0) ** (p - 1) * u**p / p * a
    band = 0.0
    if uncertainty is not None:
        band += float(np.sum(np.abs(u) ** p / p * np.asarray(uncertainty) / Gamma(p)))
    if d.size >= 2 and terms[-2] != 0:
        ratio = abs(terms[-1] / terms[-2])
        band += abs(terms[-1]) * ratio / max(1 - ratio, 1e-3) if ratio < 1 else abs(terms[-1])
    return float(np.sum(terms)), float(band)


def predict_trace_power(f1, f2, s: int, derivs: PsiDerivatives | None = None,
                        variant="diagonal") -> ExpansionPrediction:
    """(N+1) ((f1/f2)^s)^(0) + (-1)^{s-1} Psi_1^{(s-1)}(0) / (s-1)!."""
    tag = classify_case(f1.alpha, f2.alpha)
    if not f1.alpha > 0 > f2.alpha:
        raise OutOfRangeError("power-trace expansion needs alpha1 > 0 > alpha2")
    derivs = derivs or psi_derivatives(f1, f2, s - 1, variant)
    main = float(power_product_series([(f1, s), (f2, -s)], 2).coeffs[0])
    c = (-1) ** (s - 1) * derivs.values[s - 1] / Gamma(s)
    unc = derivs.uncertainty[s - 1] / Gamma(s)
    return ExpansionPrediction(
        tag, main, (Term(0.0, float(c), "fitted", f"psi-fit:{derivs.variant}"),),
        -1.0, {"uncertainty": float(unc), "t_fit": derivs.t_fit, "s": s})


def product_trace_limit(h1: FHSymbol, h2: FHSymbol, s: int) -> float:
    """(1/2 pi) int (h1 h2)^s, both exponents positive."""
    if not (h1.alpha > 0 and h2.alpha > 0):
        raise ValueError("both exponents must be positive")
    val, _ = _quad(lambda t: (eval_symbol(h1, t) * eval_symbol(h2, t)) ** s, 0, np.pi)
    return float(val / np.pi)


def rate_function(f1: FHSymbol, f2: FHSymbol, t: float, margin=0.01, delta=None) -> float:
    """L(t) = -(1/4 pi) int ln(1 - 2t f1/f2)."""
    if t == 0:
        return 0.0
    delta = delta or ratio_sup(f1, f2)
    if abs(2 * t) > (1 - margin) / delta:
        raise DomainError(f"2t = {2 * t} outside the domain (|2t| < {(1 - margin) / delta:.6g})")

    def integrand(th):
        if th == 0:
            return 0.0
        return np.log1p(-2 * t * eval_symbol(f1, th) / eval_symbol(f2, th))

    val, _ = _quad(integrand, 0, np.pi)
    return float(-val / (2 * np.pi))
