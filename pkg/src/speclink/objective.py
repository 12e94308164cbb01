"""Functionals of the identification problem.

The dual variable is a degree-n pseudo-polynomial Q.  Internally the solver
works on a flat vector of *unique* coefficients: the upper triangle of the
symmetric lag-0 block once, then each higher-lag block in full.  In those
coordinates the plain Euclidean prox of the group penalty and the gradient
below are mutually consistent, so proximal-gradient fixed points are exactly
the optimality conditions checked by the KKT report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ArgumentError,
    CovarianceSequence,
    DomainError,
    MatrixPseudoPolynomial,
    SpectralDensitySamples,
    StructureError,
    Support,
    evaluate_coeffs,
    extract_lags,
)
from .estimation import trace_pairing

__all__ = [
    "PenaltyGroups",
    "RegularizedProblem",
    "itakura_saito",
    "smooth_objective",
    "smooth_gradient",
    "penalty",
    "prox_penalty",
    "project_l1_ball",
    "flatten_coeffs",
    "unflatten_coeffs",
    "flatten_gradient",
]


# ---------------------------------------------------------------------------
# flat coordinate layout


def _triu_size(m):
    return m * (m + 1) // 2


def coord_count(m, n):
    return _triu_size(m) + n * m * m


def flatten_coeffs(coeffs):
    """Unique coefficients of a pseudo-polynomial as one flat vector."""
    n = coeffs.shape[0] - 1
    m = coeffs.shape[1]
    iu = np.triu_indices(m)
    parts = [coeffs[0][iu]]
    for k in range(1, n + 1):
        parts.append(coeffs[k].ravel())
    return np.concatenate(parts)


def unflatten_coeffs(u, m, n):
    """Inverse of flatten_coeffs; rebuilds the symmetric lag-0 block."""
    coeffs = np.empty((n + 1, m, m))
    iu = np.triu_indices(m)
    q0 = np.zeros((m, m))
    q0[iu] = u[: _triu_size(m)]
    coeffs[0] = q0 + np.triu(q0, 1).T
    off = _triu_size(m)
    for k in range(1, n + 1):
        coeffs[k] = u[off : off + m * m].reshape(m, m)
        off += m * m
    return coeffs


def flatten_gradient(grad_coeffs):
    """Adjoint of unflatten_coeffs: lag-0 off-diagonal entries count twice.

    Maps the matrix-form gradient of a functional of the coefficient matrices
    to its gradient with respect to the unique coordinates.
    """
    g = grad_coeffs[0]
    doubled = g + g.T - np.diag(np.diag(g))
    n = grad_coeffs.shape[0] - 1
    m = grad_coeffs.shape[1]
    iu = np.triu_indices(m)
    parts = [doubled[iu]]
    for k in range(1, n + 1):
        parts.append(grad_coeffs[k].ravel())
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# penalty groups


class PenaltyGroups:
    """Coefficient groups penalized by the summed group-infinity norm.

    One group per off-diagonal pair (h, k), h < k, outside the prior
    support: the vector ((Q_0)_hk, (Q_1)_hk..(Q_n)_hk, (Q_1)_kh..(Q_n)_kh)
    of length 2n+1.  ``indices`` addresses these entries in the flat
    unique-coordinate layout.
    """

    def __init__(self, m, n, omega_sigma):
        if omega_sigma.m != m:
            raise StructureError("support dimension mismatch in penalty groups")
        self.m = m
        self.n = n
        self.pairs = sorted(omega_sigma.complement_pairs())
        iu = np.triu_indices(m)
        triu_pos = {}
        for p, (i, j) in enumerate(zip(*iu)):
            triu_pos[(int(i), int(j))] = p
        idx = np.empty((len(self.pairs), 2 * n + 1), dtype=int)
        for g, (h, k) in enumerate(self.pairs):
            idx[g, 0] = triu_pos[(h, k)]
            for j in range(1, n + 1):
                base = _triu_size(m) + (j - 1) * m * m
                idx[g, j] = base + h * m + k
                idx[g, n + j] = base + k * m + h
        self.indices = idx

    @property
    def size(self):
        return len(self.pairs)

    def gather(self, u):
        """Group vectors from a flat coordinate vector, shape (groups, 2n+1)."""
        return u[self.indices]

    def gather_poly(self, Q):
        return self.gather(flatten_coeffs(Q.coeffs))


@dataclass(frozen=True)
class RegularizedProblem:
    """One identification instance: prior inverse, data lags, prior support.

    ``lam > 0`` activates the group penalty on pairs outside ``omega_sigma``
    (support estimation); a ``hard_mask`` instead pins the variable to a
    known target support and requires ``lam == 0`` (link selection).
    """

    psi_inv: SpectralDensitySamples
    lags: CovarianceSequence
    omega_sigma: Support
    lam: float = 0.0
    hard_mask: Support | None = None

    def __post_init__(self):
        if not self.psi_inv.positive:
            raise ArgumentError("prior inverse samples must be flagged positive")
        if self.psi_inv.m != self.lags.m or self.psi_inv.m != self.omega_sigma.m:
            raise StructureError("dimension mismatch in problem data")
        if self.lam < 0:
            raise ArgumentError("lambda must be nonnegative")
        if self.hard_mask is not None:
            if self.lam != 0.0:
                raise ArgumentError("hard-mask problems must have lambda = 0")
            if not self.omega_sigma <= self.hard_mask:
                raise ArgumentError("hard mask must contain the prior support")

    @property
    def m(self):
        return self.psi_inv.m

    @property
    def n(self):
        return self.lags.n

    @property
    def grid(self):
        return self.psi_inv.grid

    def groups(self):
        return PenaltyGroups(self.m, self.n, self.omega_sigma)


# ---------------------------------------------------------------------------
# functionals


def _chol_logdet(values):
    """Batched log det via Cholesky; DomainError (with min eig) if not PD."""
    try:
        chol = np.linalg.cholesky(values)
    except np.linalg.LinAlgError:
        mins = np.linalg.eigvalsh(values)[:, 0]
        raise DomainError(
            "matrix samples not positive definite (min eigenvalue %.3e at node %d)"
            % (mins.min(), int(np.argmin(mins)))
        )
    return 2.0 * np.log(np.einsum("lii->li", chol).real).sum(axis=1)


def itakura_saito(phi, psi):
    """Multivariate Itakura-Saito pseudo-distance between positive spectra.

    Zero iff the samples coincide; the pointwise integrand
    tr(psi^{-1} phi) - log det(psi^{-1} phi) - m is nonnegative.
    """
    if not np.array_equal(phi.grid.nodes, psi.grid.nodes):
        raise StructureError("itakura_saito needs matching grids")
    ld_phi = _chol_logdet(phi.values)
    if np.array_equal(phi.values, psi.values):
        # the integrand cancels identically; skip the rounding noise
        return 0.0
    ld_psi = _chol_logdet(psi.values)
    sol = np.linalg.solve(psi.values, phi.values)
    trace = np.einsum("lii->l", sol).real
    w = phi.grid.weights
    return float(0.5 * (w @ (-ld_phi + ld_psi + trace) - phi.m))


def smooth_objective(Q, prob):
    """tr-pairing of Q with the data lags minus integral log det(psi^{-1} + Q)."""
    values = prob.psi_inv.values + evaluate_coeffs(Q.coeffs, prob.grid.nodes)
    logdet = _chol_logdet(values)
    return trace_pairing(Q, prob.lags) - float(prob.grid.weights @ logdet)


def smooth_gradient(Q, prob):
    """Coefficient-space gradient of the smooth dual objective.

    Lag k of the gradient is the quadrature Fourier coefficient of
    (periodogram - (psi^{-1}+Q)^{-1}); the k = 0 block enters once
    (symmetric) and blocks with k >= 1 carry a factor 2 because each stored
    coefficient also represents its transposed negative lag.
    """
    values = prob.psi_inv.values + evaluate_coeffs(Q.coeffs, prob.grid.nodes)
    _chol_logdet(values)  # domain check
    inv = np.linalg.inv(values)
    inv = 0.5 * (inv + inv.conj().transpose(0, 2, 1))
    phi_lags = extract_lags(SpectralDensitySamples(prob.grid, inv), Q.n)
    grad = prob.lags.lags[: Q.n + 1] - phi_lags
    grad = grad.copy()
    grad[1:] *= 2.0
    grad[0] = 0.5 * (grad[0] + grad[0].T)
    out = MatrixPseudoPolynomial(grad)
    if prob.hard_mask is not None:
        from .core import project_support

        out = project_support(out, prob.hard_mask)
    return out


def penalty(Q, groups):
    """Sum over groups of the max-modulus of the group vector."""
    if groups.size == 0:
        return 0.0
    return float(np.abs(groups.gather_poly(Q)).max(axis=1).sum())


def project_l1_ball(v, radius):
    """Exact Euclidean projection onto the l1 ball, sort-based.

    Accepts a single vector or a stack of row vectors with a scalar or
    per-row radius.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    r = np.broadcast_to(np.asarray(radius, dtype=float), (V.shape[0],))
    out = V.copy()
    zero_rows = r <= 0
    out[zero_rows] = 0.0
    a = np.abs(V)
    need = (a.sum(axis=1) > r) & ~zero_rows
    if np.any(need):
        aw = a[need]
        rw = r[need]
        s = -np.sort(-aw, axis=1)
        cs = np.cumsum(s, axis=1)
        j = np.arange(1, s.shape[1] + 1)
        # the condition below is true exactly on a prefix of each row
        rho = (s > (cs - rw[:, None]) / j).sum(axis=1)
        theta = (cs[np.arange(len(rho)), rho - 1] - rw) / rho
        out[need] = np.sign(V[need]) * np.maximum(aw - theta[:, None], 0.0)
    return out[0] if single else out


def prox_penalty(Q, groups, kappa):
    """Proximal map of kappa * (group-infinity penalty), by Moreau.

    Each penalized group vector v becomes v - Proj_{l1 ball, kappa}(v);
    every unpenalized coefficient entry is untouched.
    """
    if kappa < 0:
        raise ArgumentError("prox needs a nonnegative step * lambda")
    if groups.size == 0 or kappa == 0.0:
        return Q
    u = flatten_coeffs(Q.coeffs)
    V = groups.gather(u)
    u[groups.indices.ravel()] = (V - project_l1_ball(V, kappa)).ravel()
    return MatrixPseudoPolynomial(unflatten_coeffs(u, Q.m, Q.n))
