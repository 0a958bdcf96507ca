"""Monte Carlo checks for quadratic forms of long-memory Gaussian vectors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .asymptotics import DomainError, psi_derivatives, psi_series, rate_function, ratio_sup
from .spectral import log_mgf, pushforward_moments
from .symbols import FHSymbol, fourier_coeffs
from .toeplitz import (
    NotPositiveDefiniteError, build_toeplitz, gen_eigs, gs_inverse_apply,
    predictor, trace_ratio_power,
)

__all__ = [
    "MCEnsemble", "CLTReport", "LDPRow", "sample_process", "quadratic_form",
    "mc_ensemble", "clt_experiment", "ldp_experiment",
]

CHUNK = 512


def _normals(seed, r, n):
    # one Philox stream per replicate; coordinates are consecutive draws
    return np.random.Generator(np.random.Philox(key=[seed, r])).standard_normal(n)


def sample_process(f1: FHSymbol, N: int, R: int, seed: int, workers: int = 1) -> np.ndarray:
    """R draws of X ~ N(0, T_N(f1)), returned as an (N+1, R) array.

    Replicate r depends only on (seed, r), so the result does not depend on
    ``workers``.
    """
    T = build_toeplitz(fourier_coeffs(f1, N), N).dense()
    try:
        L = sla.cholesky(T, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(N) from exc
    Z = np.empty((N + 1, R))

    def fill(block):
        for r in block:
            Z[:, r] = _normals(seed, r, N + 1)

    blocks = [range(j, min(j + CHUNK, R)) for j in range(0, R, CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(fill, blocks))
    else:
        for b in blocks:
            fill(b)
    return L @ Z


def quadratic_form(X, f2: FHSymbol, pred=None):
    """X^T T_N(f2)^{-1} X per column, through the structured inverse.

    Returns (Q, W) with W = Q / (2(N+1)).
    """
    X = np.asarray(X, dtype=float)
    N = X.shape[0] - 1
    pred = pred or predictor(fourier_coeffs(f2, N), N)
    if X.ndim == 1:
        q = float(X @ gs_inverse_apply(pred, X))
        return q, q / (2 * (N + 1))
    q = np.empty(X.shape[1])
    for j in range(0, X.shape[1], CHUNK):
        blk = X[:, j:j + CHUNK]
        q[j:j + CHUNK] = np.einsum("ij,ij->j", blk, gs_inverse_apply(pred, blk))
    return q, q / (2 * (N + 1))


@dataclass(frozen=True)
class MCEnsemble:
    N: int
    R: int
    seed: int
    values: np.ndarray
    m_N: float

    @property
    def mean_se(self):
        return float(np.std(self.values, ddof=1) / np.sqrt(self.R))


def mc_ensemble(f1, f2, N, R, seed, workers=1) -> MCEnsemble:
    X = sample_process(f1, N, R, seed, workers)
    q, _ = quadratic_form(X, f2)
    m = trace_ratio_power(f1, f2, N, 1, "structured")
    return MCEnsemble(N, R, seed, q, m)


@dataclass(frozen=True)
class CLTReport:
    N: int
    R: int
    seed: int
    sample_mean: float
    m_N: float
    sample_variance: float  # of (Q - m_N) / sqrt(N)
    exact_variance: float  # 2 Tr(B^2) / N
    target_variance: float  # (1/pi) int (f1/f2)^2
    ks: float
    ks_pvalue: float
    skewness: float
    variance_se: float = field(default=0.0)


def clt_experiment(f1, f2, N, R, seed, workers=1) -> CLTReport:
    # f1 == f2 is admitted as a calibration run (all eigenvalues equal 1)
    if not (f1.alpha > 0 > f2.alpha or (f1.alpha, f1.poly) == (f2.alpha, f2.poly)):
        raise ValueError("the CLT setting needs alpha1 > 0 > alpha2")
    ens = mc_ensemble(f1, f2, N, R, seed, workers)
    z = (ens.values - ens.m_N) / np.sqrt(N)
    exact = 2.0 * trace_ratio_power(f1, f2, N, 2) / N
    target = 2.0 * pushforward_moments(f1, f2, 2).moments[1]
    ks = stats.kstest(z / np.sqrt(exact), "norm")
    var = float(np.var(z, ddof=1))
    # se of a sample variance: sqrt((mu4 - s^4) / R)
    mu4 = float(np.mean((z - z.mean()) ** 4))
    return CLTReport(N, R, seed, float(np.mean(ens.values)), ens.m_N, var, exact, float(target),
                     float(ks.statistic), float(ks.pvalue), float(stats.skew(z)),
                     float(np.sqrt(max(mu4 - var**2, 0.0) / R)))


@dataclass(frozen=True)
class LDPRow:
    N: int
    t: float
    L_N: float
    L: float
    gap: float  # L_N - L
    second: float  # (N+1)(L_N - L)
    predicted: float  # Psi(2t)/2
    band: float


def ldp_experiment(f1, f2, N_grid, t_grid, derivs=None, variant="diagonal", p=6):
    """Exact L_N(t) against the rate L(t) and the Psi(2t)/2 correction."""
    delta = ratio_sup(f1, f2)
    for t in t_grid:
        if abs(2 * t) > 0.99 / delta:
            raise DomainError(f"2t = {2 * t} outside the domain")
    derivs = derivs or psi_derivatives(f1, f2, p, variant)
    rows = []
    for t in t_grid:
        L = rate_function(f1, f2, t, delta=delta)
        pred, band = psi_series(derivs.values, 2 * t, derivs.uncertainty)
        for N in N_grid:
            LN = log_mgf(gen_eigs(f1, f2, N), t) if t else 0.0
            rows.append(LDPRow(N, t, LN, L, LN - L, (N + 1) * (LN - L), pred / 2, band / 2))
    return rows
