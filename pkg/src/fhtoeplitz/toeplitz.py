"""Finite-N Toeplitz machinery: predictors, structured inverse, traces, spectra.

Matrices have order N, meaning N+1 rows indexed 0..N.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.signal import fftconvolve

from .symbols import FHSymbol, FourierSeries, fourier_coeffs

__all__ = [
    "ToeplitzOperator", "PredictorCoefficients", "SpectralSample",
    "NotPositiveDefiniteError", "build_toeplitz", "predictor",
    "gs_inverse_apply", "trace_ratio_power", "trace_of_symbol", "gen_eigs",
    "log_det",
]

LOW_TRUST_COND = 1e12
DENSE_MAX_N = 8192


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, order, msg=""):
        self.order = order
        super().__init__(f"Toeplitz matrix not positive definite at order {order}{msg}")


@dataclass(frozen=True)
class ToeplitzOperator:
    """T_N(f) stored by its first column (and row when not symmetric)."""

    col: np.ndarray
    row: np.ndarray
    N: int

    @property
    def symmetric(self):
        return np.array_equal(self.col, self.row)

    def dense(self):
        return sla.toeplitz(self.col, self.row)

    def matvec(self, x):
        """T x by circulant embedding; x may be (N+1,) or (N+1, R)."""
        x = np.asarray(x)
        n = self.N + 1
        if x.shape[0] != n:
            raise ValueError("size mismatch")
        if n <= 64:
            return self.dense() @ x
        # circulant of size 2n whose first column is (col, 0, row reversed)
        c = np.concatenate([self.col, [0.0], self.row[:0:-1]])
        fc = np.fft.rfft(c)
        X = x if x.ndim == 2 else x[:, None]
        y = np.fft.irfft(fc[:, None] * np.fft.rfft(X, n=2 * n, axis=0), n=2 * n, axis=0)[:n]
        return y if x.ndim == 2 else y[:, 0]


def build_toeplitz(series: FourierSeries, N: int) -> ToeplitzOperator:
    """Entry (k, l) is h(l - k)."""
    if series.K < N:
        raise ValueError(f"series truncated at K={series.K} < N={N}")
    k = np.arange(N + 1)
    return ToeplitzOperator(np.asarray(series[-k]), np.asarray(series[k]), N)


@dataclass(frozen=True)
class PredictorCoefficients:
    """beta_{k,N} = (T_N^{-1})_{k,0} / sqrt((T_N^{-1})_{0,0})."""

    beta: np.ndarray
    reflection: np.ndarray
    N: int
    label: str = ""

    def polynomial(self, theta):
        z = np.exp(1j * np.asarray(theta, dtype=float))
        return np.polyval(self.beta[::-1], z)

    def grid_values(self, M=None):
        M = M or int(2 ** np.ceil(np.log2(8 * (self.N + 1))))
        return np.fft.fft(self.beta, n=M).conj()  # K_N(e^{i theta_j})

    def winding_number(self, M=None):
        v = self.grid_values(M)
        ph = np.unwrap(np.angle(np.concatenate([v, v[:1]])))
        return int(np.rint((ph[-1] - ph[0]) / (2 * np.pi)))

    def inverse_density_coeffs(self, M=None):
        """Fourier coefficients of |K_N|^{-2} on a grid (k = 0..N)."""
        M = M or int(2 ** np.ceil(np.log2(64 * (self.N + 1))))
        w = 1.0 / np.abs(np.fft.fft(self.beta, n=M)) ** 2
        return np.fft.rfft(w).real[: self.N + 1] / M

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "beta"])
            for k, b in enumerate(self.beta):
                wr.writerow([k, repr(float(b))])


def _levinson(r, N):
    a = np.zeros(N + 1)
    a[0] = 1.0
    e = r[0]
    if not e > 0:
        raise NotPositiveDefiniteError(0)
    refl = np.zeros(N + 1)
    for m in range(1, N + 1):
        k = -np.dot(a[:m], r[m:0:-1]) / e
        if not abs(k) < 1.0:
            raise NotPositiveDefiniteError(m, f" (reflection coefficient {k:.6g})")
        refl[m] = k
        a[: m + 1] += k * a[m::-1].copy()
        e *= (1.0 - k) * (1.0 + k)
    return a, e, refl


def predictor(series: FourierSeries, N: int) -> PredictorCoefficients:
    """Levinson-Szego recursion, O(N^2)."""
    if not series.real_even:
        raise ValueError("predictor needs a real even series")
    if series.K < N:
        raise ValueError(f"series truncated at K={series.K} < N={N}")
    r = np.asarray(series.coeffs[: N + 1], dtype=float)
    a, e, refl = _levinson(r, N)
    return PredictorCoefficients(a / np.sqrt(e), refl, N)


def _lower_apply(v, x):
    # L(v) x with L(v) lower-triangular Toeplitz, first column v
    n = len(v)
    if x.ndim == 1:
        return fftconvolve(v, x)[:n]
    return fftconvolve(v[:, None], x, axes=0)[:n]


def _lower_t_apply(v, x):
    # L(v)^T x
    n = len(v)
    if x.ndim == 1:
        return fftconvolve(v, x[::-1])[:n][::-1]
    return fftconvolve(v[:, None], x[::-1], axes=0)[:n][::-1]


def gs_inverse_apply(pred: PredictorCoefficients, x):
    """T_N^{-1} x = L(b) L(b)^T x - L(u) L(u)^T x, u = (0, b_N, ..., b_1)."""
    x = np.asarray(x, dtype=float)
    b = pred.beta
    if x.shape[0] != b.size:
        raise ValueError(f"vector length {x.shape[0]} != N+1 = {b.size}")
    u = np.concatenate([[0.0], b[:0:-1]])
    return _lower_apply(b, _lower_t_apply(b, x)) - _lower_apply(u, _lower_t_apply(u, x))


def _gs_diagonal_sums(beta):
    """D(s) = sum_k (T^{-1})_{k,k+s}, s = 0..N, from the predictor alone."""
    n = beta.size
    u = np.concatenate([[0.0], beta[:0:-1]])
    i = np.arange(n, dtype=float)
    s = np.arange(n)

    def part(v):
        # sum_i (n - s - i) v_i v_{i+s}
        acf = fftconvolve(v[::-1], v)[n - 1:]
        wacf = fftconvolve((i * v)[::-1], v)[n - 1:]
        return (n - s) * acf - wacf

    return part(beta) - part(u)


def log_det(series: FourierSeries, N: int):
    L = np.linalg.cholesky(build_toeplitz(series, N).dense())
    return 2.0 * np.sum(np.log(np.diag(L)))


@lru_cache(maxsize=2)
def _reduced(f1: FHSymbol, f2: FHSymbol, N: int):
    """Cholesky reduction B = L^{-1} T(f1) L^{-T}, with T(f2) = L L^T."""
    T2 = build_toeplitz(fourier_coeffs(f2, N), N).dense()
    try:
        L = sla.cholesky(T2, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(N) from exc
    anorm = np.max(np.sum(np.abs(T2), axis=0))
    rcond, _ = sla.lapack.dpocon(L, anorm, uplo="L")
    T1 = build_toeplitz(fourier_coeffs(f1, N), N).dense()
    del T2
    Y = sla.solve_triangular(L, T1, lower=True, overwrite_b=True)
    B = sla.solve_triangular(L, Y.T, lower=True, overwrite_b=True)
    B = 0.5 * (B + B.T)
    cond = np.inf if rcond == 0 else 1.0 / rcond
    return B, float(cond)


@dataclass(frozen=True)
class SpectralSample:
    eigenvalues: np.ndarray
    cond: float
    N: int
    pair: tuple = field(default=(), compare=False)

    @property
    def low_trust(self):
        return self.cond > LOW_TRUST_COND

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["i", "mu"])
            for i, m in enumerate(self.eigenvalues):
                wr.writerow([i, repr(float(m))])


@lru_cache(maxsize=16)
def _eigs(f1, f2, N):
    B, cond = _reduced(f1, f2, N)
    try:
        mu = sla.eigvalsh(B, overwrite_a=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigensolver failed at N={N} (cond estimate {cond:.3g})") from exc
    mu.flags.writeable = False
    return mu, cond


def gen_eigs(f1: FHSymbol, f2: FHSymbol, N: int) -> SpectralSample:
    """Sorted eigenvalues of T_N(f1) T_N(f2)^{-1} via Cholesky reduction."""
    mu, cond = _eigs(f1, f2, N)
    return SpectralSample(mu, cond, N, (f1, f2))


def trace_ratio_power(f1: FHSymbol, f2: FHSymbol, N: int, s: int = 1, path="dense"):
    """Tr((T_N(f1) T_N(f2)^{-1})^s)."""
    if s < 1 or int(s) != s:
        raise ValueError("s must be a positive integer")
    if path == "structured":
        if s != 1:
            raise ValueError("structured path implements s = 1 only")
        pred = predictor(fourier_coeffs(f2, N), N)
        D = _gs_diagonal_sums(pred.beta)
        h1 = fourier_coeffs(f1, N).coeffs[: N + 1]
        return float(h1[0] * D[0] + 2.0 * np.dot(h1[1:], D[1:]))
    if path != "dense":
        raise ValueError(f"unknown path {path!r}")
    if N > DENSE_MAX_N:
        raise ValueError(f"dense path capped at N={DENSE_MAX_N}")
    if s == 1:
        B, _ = _reduced(f1, f2, N)
        return float(np.trace(B))
    mu, cond = _eigs(f1, f2, N)
    if s * np.log(max(cond, 1.0)) > 700:
        raise OverflowError("s * ln(cond) too large")
    return float(np.sum(mu**s))


def trace_of_symbol(series: FourierSeries, N: int) -> float:
    return float((N + 1) * np.real(series[0]))
