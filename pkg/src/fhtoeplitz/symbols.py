"""Fisher-Hartwig symbols, their Fourier series and the half-weighted pairing.

A symbol here is f(theta) = |1 - e^{i theta}|^{2 alpha} |P(e^{i theta})|^2 with
P a real polynomial free of roots in the closed unit disk. Every series is
built from the closed form of the singular factor and an exactly known (or
FFT-resolved analytic) regular factor, so no quadrature is involved.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve, lfilter
from scipy.special import gammaln

from ._tails import DivergentPairingError, sum_with_tail

__all__ = [
    "FHSymbol", "GridSymbol", "FourierSeries", "InnerProductResult",
    "DivergentPairingError", "eval_symbol", "fourier_coeffs",
    "log_inverse_series", "beta_series", "inner_half", "mix_symbol",
    "grid_fourier_coeffs", "power_product_series", "singular_coeffs",
    "binomial_coeffs",
]

DEFAULT_GRID = 2**16
_ROOT_TOL = 1e-10


def _frozen(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


def _four_sin2(theta):
    # 2 - 2cos(theta) without cancellation near 0
    return 4.0 * np.sin(0.5 * np.asarray(theta, dtype=float)) ** 2


@dataclass(frozen=True)
class FHSymbol:
    """|1-e^{i theta}|^{2 alpha} |P(e^{i theta})|^2 with P = sum p_k z^k."""

    alpha: float
    poly: tuple = (1.0,)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        poly = tuple(float(p) for p in np.atleast_1d(self.poly))
        while len(poly) > 1 and poly[-1] == 0.0:
            poly = poly[:-1]
        object.__setattr__(self, "poly", poly)
        if not -0.5 < self.alpha < 0.5:
            raise ValueError(f"alpha={self.alpha} outside (-1/2, 1/2)")
        if poly[0] <= 0:
            raise ValueError("p0 must be positive")
        r = self.roots()
        if r.size and np.min(np.abs(r)) <= 1.0 + _ROOT_TOL:
            raise ValueError("P has a root in the closed unit disk")

    def roots(self):
        if len(self.poly) == 1:
            return np.empty(0, dtype=complex)
        return np.roots(self.poly[::-1])

    @property
    def is_pure(self):
        return len(self.poly) == 1

    def c(self, theta):
        """Regular factor |P(e^{i theta})|^2."""
        z = np.exp(1j * np.asarray(theta, dtype=float))
        return np.abs(np.polyval(self.poly[::-1], z)) ** 2

    @property
    def c_at_zero(self):
        return float(sum(self.poly)) ** 2

    def poly_autocorr(self):
        """Coefficients of |P|^2 at lags 0..d."""
        p = np.asarray(self.poly)
        return np.correlate(p, p, mode="full")[len(p) - 1:]

    def to_record(self):
        return {"label": self.label, "alpha": self.alpha, "poly": list(self.poly)}

    @classmethod
    def from_record(cls, rec):
        return cls(alpha=rec["alpha"], poly=tuple(rec.get("poly", (1.0,))),
                   label=rec.get("label", ""))

    def dumps(self):
        return json.dumps(self.to_record())

    @classmethod
    def loads(cls, text):
        return cls.from_record(json.loads(text))


@dataclass(frozen=True)
class FourierSeries:
    """Coefficients h(0..K).

    For ``real_even`` series h(-k) = h(k). Otherwise the series is one-sided
    (power series in z) and negative indices are zero. ``tail_bound`` is
    sup_{k>K} |h(k)|, which bounds the truncation error pointwise through
    Abel summation: |f - S_K|(theta) <= 2 tail_bound / |sin(theta/2)|.
    """

    coeffs: np.ndarray
    real_even: bool = True
    tail_bound: float = 0.0
    flag: str = "ok"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @property
    def K(self):
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        k = np.asarray(k)
        idx = np.abs(k) if self.real_even else k
        out = np.where((idx >= 0) & (idx <= self.K),
                       self.coeffs[np.clip(idx, 0, self.K)], 0.0)
        return out if out.ndim else out.item()

    def two_sided(self):
        c = self.coeffs
        if self.real_even:
            return np.concatenate([c[:0:-1], c])
        return np.concatenate([np.zeros(self.K, dtype=c.dtype), c])

    def evaluate(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        k = np.arange(1, self.K + 1)
        ph = np.outer(theta, k)
        if self.real_even:
            return self.coeffs[0] + 2.0 * (np.cos(ph) @ self.coeffs[1:])
        return self.coeffs[0] + np.exp(1j * ph) @ self.coeffs[1:]

    def truncation_bound(self, theta):
        return 2.0 * self.tail_bound / np.abs(np.sin(0.5 * np.asarray(theta)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value"])
            lo = -self.K if self.real_even else 0
            for k in range(lo, self.K + 1):
                w.writerow([k, repr(float(np.real(self[k])))])


@dataclass(frozen=True)
class InnerProductResult:
    value: float
    K: int
    tail_estimate: float
    flag: str = "ok"
    exponent: float | None = None


@dataclass(frozen=True)
class GridSymbol:
    """Symbol sampled on theta_j = 2 pi j / M, stored in factored form.

    values = (2 - 2cos theta)^exponent * cofactor, where the cofactor is
    positive and (at least) continuous at theta = 0.
    """

    cofactor: np.ndarray
    exponent: float = 0.0
    label: str = ""

    def __post_init__(self):
        cof = np.asarray(self.cofactor, dtype=float)
        M = cof.size
        if M < 256 or M & (M - 1):
            raise ValueError("grid size must be a power of two >= 256")
        if not np.all(cof > 0):
            raise ValueError("grid symbol must be positive")
        object.__setattr__(self, "cofactor", _frozen(cof))
        object.__setattr__(self, "exponent", float(self.exponent))

    @property
    def M(self):
        return self.cofactor.size

    @property
    def theta(self):
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def values(self):
        with np.errstate(divide="ignore"):
            return _four_sin2(self.theta) ** self.exponent * self.cofactor

    @classmethod
    def from_fh(cls, sym: FHSymbol, M=DEFAULT_GRID):
        g = cls(np.ones(M), 0.0)
        return cls(sym.c(g.theta), sym.alpha, sym.label)

    def __mul__(self, other):
        if self.M != other.M:
            raise ValueError("grid sizes differ")
        return GridSymbol(self.cofactor * other.cofactor,
                          self.exponent + other.exponent)

    def power(self, p):
        return GridSymbol(self.cofactor**p, self.exponent * p, self.label)


def eval_symbol(sym: FHSymbol, theta):
    """(2 - 2cos theta)^alpha |P(e^{i theta})|^2, inf at theta = 0 if alpha < 0."""
    theta = np.asarray(theta, dtype=float)
    s = _four_sin2(theta)
    with np.errstate(divide="ignore"):
        out = np.where(s > 0, s ** sym.alpha, 0.0 if sym.alpha > 0 else
                       (1.0 if sym.alpha == 0 else np.inf)) * sym.c(theta)
    return out if out.ndim else float(out)


def singular_coeffs(alpha, K):
    """Fourier coefficients of |1 - e^{i theta}|^{2 alpha}, k = 0..K.

    (-1)^k Gamma(1+2a) / (Gamma(1+a+k) Gamma(1+a-k)), generated by the
    ratio recursion which stays accurate for large k.
    """
    c = np.empty(K + 1)
    c[0] = np.exp(gammaln(1 + 2 * alpha) - 2 * gammaln(1 + alpha))
    if K:
        n = np.arange(K, dtype=float)
        c[1:] = c[0] * np.cumprod((n - alpha) / (n + 1 + alpha))
    return c


def binomial_coeffs(alpha, K):
    """Power-series coefficients of (1 - z)^{-alpha}, k = 0..K."""
    c = np.empty(K + 1)
    c[0] = 1.0
    if K:
        n = np.arange(K, dtype=float)
        c[1:] = np.cumprod((n + alpha) / (n + 1))
    return c


def _sup_tail(c, K):
    return float(np.max(np.abs(c[K + 1:]))) if c.size > K + 1 else 0.0


def _even_convolve(s, r, K):
    """h(k) = sum_j s(|k-j|) r(|j|) for k = 0..K, s and r one-sided halves."""
    L = len(r) - 1
    if len(s) < K + L + 1:
        raise ValueError("singular sequence too short for convolution")
    if L <= 64:
        h = r[0] * s[:K + 1].copy()
        k = np.arange(K + 1)
        for j in range(1, L + 1):
            h += r[j] * (s[np.abs(k - j)] + s[k + j])
        return h
    S = s[:K + L + 1]
    s2 = np.concatenate([S[:0:-1], S])
    r2 = np.concatenate([r[:0:-1], r])
    full = fftconvolve(s2, r2)
    off = (len(s2) - 1) // 2 + L
    return full[off:off + K + 1]


def fourier_coeffs(sym: FHSymbol, K: int) -> FourierSeries:
    """Exact coefficients of the symbol for |k| <= K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    a = sym.poly_autocorr()
    d = len(a) - 1
    Kx = 2 * K + 2
    s = singular_coeffs(sym.alpha, Kx + d)
    h = _even_convolve(s, a, Kx)
    return FourierSeries(h[:K + 1], True, _sup_tail(h, K),
                         meta={"alpha": sym.alpha, "source": "closed-form"})


def _log_poly_coeffs(sym: FHSymbol, K):
    # ln P(z) = ln p0 + sum_k lam_k z^k, lam_k = -sum_r r^{-k} / k
    lam = np.zeros(K + 1)
    lam[0] = np.log(sym.poly[0])
    k = np.arange(1, K + 1)
    for r in sym.roots():
        lam[1:] -= np.real(r ** (-k.astype(float))) / k
    return lam


def log_inverse_series(sym: FHSymbol, K: int) -> FourierSeries:
    """Coefficients of ln(1/f): alpha/|m| - lam_|m| for m != 0, -2 ln p0 at 0."""
    if K < 1:
        raise ValueError("K must be >= 1")
    Kx = 2 * K + 2
    lam = _log_poly_coeffs(sym, Kx)
    h = -lam.copy()
    h[0] = -2.0 * lam[0]
    h[1:] += sym.alpha / np.arange(1, Kx + 1)
    return FourierSeries(h[:K + 1], True, _sup_tail(h, K),
                         meta={"alpha": sym.alpha, "source": "log-series"})


def beta_series(sym: FHSymbol, K: int) -> FourierSeries:
    """Power-series coefficients of (1 - z)^{-alpha} / P(z)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    Kx = 2 * K + 2
    b = lfilter([1.0], list(sym.poly), binomial_coeffs(sym.alpha, Kx))
    return FourierSeries(b[:K + 1], False, _sup_tail(b, K),
                         meta={"alpha": sym.alpha, "source": "beta"})


def _smooth_coeffs(values):
    """Cosine coefficients r(0..M/2) of an even grid function."""
    return np.fft.rfft(values).real / values.size


def _trim(r, rel=1e-17):
    big = np.abs(r) > rel * np.abs(r[0])
    last = np.nonzero(big)[0]
    return r[: last[-1] + 1] if last.size else r[:1]


def power_product_series(factors: Sequence, K: int, M=None) -> FourierSeries:
    """Series of prod_i f_i^{e_i} for (FHSymbol, exponent) pairs.

    The singular exponents add up and are handled in closed form; the
    product of regular factors is analytic near the circle and its
    coefficients are resolved by FFT on a grid refined until they reach
    the rounding floor.
    """
    gamma = sum(e * f.alpha for f, e in factors)
    if all(f.is_pure for f, _ in factors):
        const = float(np.prod([f.poly[0] ** (2 * e) for f, e in factors]))
        s = singular_coeffs(gamma, 2 * K + 2) * const
        return FourierSeries(s[:K + 1], True, _sup_tail(s, K),
                             meta={"exponent": gamma, "grid": 0})
    grids = [M] if M else [2**k for k in range(10, 21)]
    for m in grids:
        th = 2 * np.pi * np.arange(m) / m
        cof = np.ones(m)
        for f, e in factors:
            cof *= f.c(th) ** e
        r = _smooth_coeffs(cof)
        if M or np.max(np.abs(r[m // 4:])) < 1e-17 * abs(r[0]):
            break
    r = _trim(r[: m // 2])
    s = singular_coeffs(gamma, 2 * K + 2 + len(r))
    h = _even_convolve(s, r, 2 * K + 2)
    return FourierSeries(h[:K + 1], True, _sup_tail(h, K),
                         meta={"exponent": gamma, "grid": m})


def mix_symbol(f1: FHSymbol, f2: FHSymbol, t: float, M: int = DEFAULT_GRID) -> GridSymbol:
    """Grid form of t f1 + f2, factored around the pole of f2."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if not f1.alpha > 0 > f2.alpha:
        raise ValueError("mixing requires alpha1 > 0 > alpha2")
    th = 2 * np.pi * np.arange(M) / M
    cof = f2.c(th) + t * _four_sin2(th) ** (f1.alpha - f2.alpha) * f1.c(th)
    return GridSymbol(cof, f2.alpha, f"{t}*{f1.label}+{f2.label}")


def grid_fourier_coeffs(gs: GridSymbol, K: int, transform="direct") -> FourierSeries:
    """Coefficients of gs, 1/gs or ln(gs) with the singular factor in closed form."""
    M = gs.M
    if K > M // 4:
        raise ValueError(f"K={K} exceeds M/4={M // 4}")
    if transform == "log":
        r = _smooth_coeffs(np.log(gs.cofactor))[: M // 2]
        h = r[: 2 * K + 3].copy()
        h[1:] -= gs.exponent / np.arange(1, len(h))
    elif transform in ("direct", "reciprocal"):
        e = 1.0 if transform == "direct" else -1.0
        r = _smooth_coeffs(gs.cofactor**e)[: M // 2]
        rr = r if gs.exponent != 0 else r[: 2 * K + 3]
        if gs.exponent == 0:
            h = rr
        else:
            s = singular_coeffs(e * gs.exponent, 2 * K + 2 + len(rr))
            h = _even_convolve(s, rr, 2 * K + 2)
    else:
        raise ValueError(f"unknown transform {transform!r}")
    trailing = np.max(np.abs(r[3 * M // 8:]))
    flag = "ok" if trailing <= 1e-8 * np.max(np.abs(r)) else "coarse-grid"
    return FourierSeries(h[:K + 1], True, _sup_tail(h, K), flag,
                         meta={"grid": M, "transform": transform,
                               "exponent": gs.exponent, "trailing": float(trailing)})


def inner_half(h: FourierSeries, g: FourierSeries, check_doubling=True) -> InnerProductResult:
    """sum_m |m| h(m) conj(g(m)) with a fitted power-law tail."""
    if h.real_even != g.real_even:
        raise ValueError("series must share the real_even normalization")
    K = min(h.K, g.K)
    m = np.arange(1, K + 1)
    w = 2.0 if h.real_even else 1.0
    terms = w * m * h.coeffs[1:K + 1] * np.conj(g.coeffs[1:K + 1])
    if not np.iscomplexobj(terms) or not np.any(np.imag(terms)):
        terms = np.real(terms)
    fit = sum_with_tail(terms)
    flag = fit.flag
    if check_doubling and K >= 64:
        half = sum_with_tail(terms[: K // 2])
        if abs(half.value - fit.value) > 1e-6 * max(abs(fit.value), 1e-12):
            flag = "unstable"
    return InnerProductResult(fit.value, K, fit.tail_estimate, flag, fit.exponent)
