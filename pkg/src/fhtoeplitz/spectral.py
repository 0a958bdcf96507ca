"""Empirical spectral law of T_N(f1) T_N(f2)^{-1} against its pushforward limit."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .asymptotics import DomainError, ratio_sup
from .symbols import FHSymbol, eval_symbol, power_product_series
from .toeplitz import SpectralSample, gen_eigs

__all__ = [
    "PushforwardMoments", "pushforward_moments", "empirical_moments",
    "extreme_eigen_scan", "log_mgf", "pushforward_cdf", "ks_distance",
    "write_table",
]


@dataclass(frozen=True)
class PushforwardMoments:
    moments: np.ndarray  # m_1 .. m_S
    sup: float
    inf: float


def pushforward_moments(f1: FHSymbol, f2: FHSymbol, S: int) -> PushforwardMoments:
    """m_s = (1/2 pi) int (f1/f2)^s, read off as the zeroth Fourier coefficient."""
    d = f1.alpha - f2.alpha
    ms = []
    for s in range(1, S + 1):
        if s * d <= -0.5:
            raise ValueError(f"(f1/f2)^{s} is not integrable")
        ms.append(power_product_series([(f1, s), (f2, -s)], 2).coeffs[0])
    th = np.linspace(1e-9, np.pi, 20001)
    r = eval_symbol(f1, th) / eval_symbol(f2, th)
    inf = 0.0 if d > 0 else float(np.min(r))
    sup = ratio_sup(f1, f2) if d >= 0 else np.inf
    return PushforwardMoments(np.array(ms), sup, inf)


def empirical_moments(sample: SpectralSample, S: int) -> np.ndarray:
    mu = sample.eigenvalues
    return np.array([np.mean(mu**s) for s in range(1, S + 1)])


def extreme_eigen_scan(f1: FHSymbol, f2: FHSymbol, N_grid) -> list:
    """Rows (N, mu_min, mu_max) with the limits 0 and sup f1/f2 attached."""
    if not f1.alpha > 0 > f2.alpha:
        raise ValueError("extreme-eigenvalue limits need alpha1 > 0 > alpha2")
    sup = ratio_sup(f1, f2)
    rows = []
    for N in N_grid:
        mu = gen_eigs(f1, f2, N).eigenvalues
        rows.append({"N": N, "mu_min": float(mu[0]), "mu_max": float(mu[-1]),
                     "target_min": 0.0, "target_max": sup,
                     "gap_min": float(mu[0]), "gap_max": float(sup - mu[-1])})
    return rows


def log_mgf(sample: SpectralSample, t: float) -> float:
    """L_N(t) = -(1 / (2(N+1))) sum ln(1 - 2t mu_i)."""
    mu = sample.eigenvalues
    top = mu[-1] if t > 0 else mu[0]
    if not 2 * t * top < 1:
        raise DomainError(f"2t mu = {2 * t * top} >= 1 (mu_max = {mu[-1]})")
    return float(-np.sum(np.log1p(-2 * t * mu)) / (2 * mu.size))


def pushforward_cdf(f1: FHSymbol, f2: FHSymbol, x, M=2**16):
    """Lebesgue measure of {f1/f2 <= x} on the circle, normalized, by a midpoint grid."""
    th = (np.arange(M) + 0.5) * np.pi / M
    r = np.sort(eval_symbol(f1, th) / eval_symbol(f2, th))
    return np.searchsorted(r, np.asarray(x), side="right") / M


def ks_distance(sample: SpectralSample, f1: FHSymbol, f2: FHSymbol, M=2**16) -> float:
    """sup |F_N - F| between the eigenvalue CDF and the pushforward CDF."""
    mu = np.sort(sample.eigenvalues)
    n = mu.size
    F = pushforward_cdf(f1, f2, mu, M)
    hi = np.arange(1, n + 1) / n - F
    lo = F - np.arange(n) / n
    return float(max(hi.max(), lo.max()))


def write_table(rows, path, value="value", target="target"):
    """CSV with columns N, value, target, gap."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "value", "target", "gap"])
        for r in rows:
            w.writerow([r["N"], repr(r[value]), repr(r[target]), repr(r[value] - r[target])])
