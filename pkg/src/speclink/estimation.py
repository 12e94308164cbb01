"""Covariance lags, truncated periodograms and Gaussian likelihoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    ArgumentError,
    CovarianceSequence,
    DomainError,
    MatrixPseudoPolynomial,
    SpectralDensitySamples,
    StructureError,
    evaluate_coeffs,
)

__all__ = [
    "TimeSeries",
    "sample_covariances",
    "truncated_periodogram",
    "whittle_loglik",
    "exact_gaussian_neglik",
    "trace_pairing",
]


@dataclass(frozen=True)
class TimeSeries:
    """N real observations of an m-dimensional process; row t is y(t)."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise StructureError("samples must be an (N, m) array")
        object.__setattr__(self, "samples", samples)

    @property
    def N(self):
        return self.samples.shape[0]

    @property
    def m(self):
        return self.samples.shape[1]


def sample_covariances(y, n):
    """Biased covariance lags R_k = (1/N) sum_{t=k+1..N} y(t) y(t-k)^T.

    The 1/N divisor keeps the implied block-Toeplitz extension positive
    semidefinite; R_0 is symmetrized.
    """
    if n >= y.N:
        raise ArgumentError("max lag %d needs more than %d samples" % (n, y.N))
    data = y.samples
    lags = np.empty((n + 1, y.m, y.m))
    for k in range(n + 1):
        lags[k] = data[k:].T @ data[: y.N - k] / y.N
    return CovarianceSequence(lags)


def truncated_periodogram(R, grid):
    """Degree-n trigonometric polynomial with the sample lags as coefficients.

    Hermitian at every node but in general not positive definite.
    """
    return SpectralDensitySamples(grid, evaluate_coeffs(R.lags, grid.nodes))


def whittle_loglik(phi, phi_hat):
    """Asymptotic negative log-likelihood: integral of log det(phi) + tr(phi^{-1} phi_hat)."""
    if phi.grid.L != phi_hat.grid.L or not np.array_equal(
        phi.grid.nodes, phi_hat.grid.nodes
    ):
        raise StructureError("whittle_loglik needs matching grids")
    try:
        chol = np.linalg.cholesky(phi.values)
    except np.linalg.LinAlgError:
        raise DomainError("whittle_loglik: spectrum not positive at some node")
    logdet = 2.0 * np.log(np.einsum("lii->li", chol).real).sum(axis=1)
    sol = np.linalg.solve(phi.values, phi_hat.values)
    trace = np.einsum("lii->l", sol).real
    return float(phi.grid.weights @ (logdet + trace))


def exact_gaussian_neglik(y, R):
    """Exact Gaussian negative log-likelihood via the block-Toeplitz covariance.

    Dense O((mN)^3) evaluation, guarded to desk scale; lags beyond those
    provided are treated as zero.
    """
    N, m = y.N, y.m
    if N > 256 or m > 8:
        raise ArgumentError("exact likelihood limited to N <= 256, m <= 8")
    if R.m != m:
        raise StructureError("lag dimension does not match the series")
    blocks = np.zeros((N, m, m))
    blocks[: min(R.n, N - 1) + 1] = R.lags[:N]
    T = np.zeros((N * m, N * m))
    for h in range(N):
        for k in range(N):
            d = h - k
            T[h * m : (h + 1) * m, k * m : (k + 1) * m] = (
                blocks[d] if d >= 0 else blocks[-d].T
            )
    try:
        cf = scipy.linalg.cho_factor(T)
    except np.linalg.LinAlgError:
        raise DomainError("block-Toeplitz covariance is not positive definite")
    logdet = 2.0 * np.log(np.diag(cf[0])).sum()
    yv = y.samples.reshape(-1)
    quad = yv @ scipy.linalg.cho_solve(cf, yv)
    return float(logdet / N + quad / N)


def trace_pairing(Q, R):
    """Coefficient-space value of the normalized integral of tr(Q * Phi_hat_n).

    Orthogonality of the lag exponentials collapses the integral to
    tr(Q_0 R_0) + 2 sum_k <Q_k, R_k>; lags of R beyond Q's degree drop out.
    """
    if Q.n > R.n:
        raise ArgumentError("pairing needs lag data up to the polynomial degree")
    total = float((Q.coeffs[0] * R.lags[0]).sum())
    if Q.n > 0:
        total += 2.0 * float((Q.coeffs[1:] * R.lags[1 : Q.n + 1]).sum())
    return total
