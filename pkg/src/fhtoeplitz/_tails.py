"""Partial sums with power-law tail extrapolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta


class DivergentPairingError(ArithmeticError):
    """Summand decays no faster than |m|^-1, so the series diverges."""


@dataclass(frozen=True)
class TailFit:
    partial: float
    tail: float
    tail_estimate: float
    exponent: float | None
    flag: str  # "ok", "raw" (fit rejected) or "zero"

    @property
    def value(self):
        return self.partial + self.tail


def _fit_real(m, a, K, min_r2):
    # a: real terms at indices m (last decade), K: last index summed
    if not np.any(a):
        return 0.0, None, "zero"
    if not (np.all(a > 0) or np.all(a < 0)):
        return float(abs(np.sum(a))), None, "raw"
    x = np.log(m)
    y = np.log(np.abs(a))
    p, c = np.polyfit(x, y, 1)
    resid = y - (p * x + c)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    if r2 < min_r2:
        return float(abs(np.sum(a))), float(p), "raw"
    if p >= -1.0:
        raise DivergentPairingError(f"summand exponent {p:.3f} >= -1")
    tail = np.sign(a[-1]) * np.exp(c) * zeta(-p, K + 1)
    return float(tail), float(p), "ok"


def sum_with_tail(terms, first=1, min_r2=0.99):
    """Sum ``terms`` (indexed from ``first``) plus a power-law tail.

    The tail is fitted on the last decade of indices. If the fit is poor
    the raw partial sum is kept, and ``tail_estimate`` holds the magnitude
    of the last-decade sum instead.
    """
    terms = np.asarray(terms)
    cplx = np.iscomplexobj(terms)
    K = first + len(terms) - 1
    partial = complex(np.sum(terms)) if cplx else float(np.sum(terms))
    lo = max(first, K // 10)
    if K - lo < 8:
        return TailFit(partial, 0.0, 0.0, None, "raw")
    m = np.arange(lo, K + 1, dtype=float)
    win = terms[lo - first:]
    if cplx:
        tr, pr, fr = _fit_real(m, win.real, K, min_r2)
        ti, _, fi = _fit_real(m, win.imag, K, min_r2)
        if "raw" in (fr, fi):
            return TailFit(partial, 0.0, float(np.hypot(tr, ti)), pr, "raw")
        tail = complex(tr, ti)
        flag = "ok" if "ok" in (fr, fi) else "zero"
        return TailFit(partial, tail, abs(tail), pr, flag)
    tail, p, flag = _fit_real(m, win, K, min_r2)
    if flag == "raw":
        return TailFit(partial, 0.0, tail, p, "raw")
    return TailFit(partial, tail, abs(tail), p, flag)
