"""Frequency grids, matrix pseudo-polynomials, spectral samples and supports.

Conventions used throughout the package:

* all scalar functionals integrate against the normalized measure
  ``d(theta)/(2*pi)`` on ``[-pi, pi]``;
* processes are real, so spectra satisfy ``F(-theta) = F(theta)^T`` and we
  only ever store values on ``[0, pi]`` (conjugate half implied);
* a pseudo-polynomial of degree ``n`` is the Laurent sum
  ``Q(theta) = sum_k Q_k e^{-i k theta}`` over ``k = -n..n`` with real
  coefficient matrices and ``Q_{-k} = Q_k^T``; only ``Q_0..Q_n`` are stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpeclinkError",
    "StructureError",
    "DomainError",
    "ArgumentError",
    "NumericalError",
    "GenerationError",
    "FrequencyGrid",
    "MatrixPseudoPolynomial",
    "SpectralDensitySamples",
    "Support",
    "CovarianceSequence",
    "evaluate",
    "evaluate_coeffs",
    "extract_lags",
    "norm_P",
    "project_support",
    "inverse_samples",
    "min_eig_per_node",
    "hermitian_sqrt",
]

HERMITIAN_RTOL = 1e-12


class SpeclinkError(Exception):
    """Base class for all library errors."""


class StructureError(SpeclinkError):
    """Dimension or layout mismatch between objects."""


class DomainError(SpeclinkError):
    """A spectral quantity left its required domain (e.g. lost positivity)."""


class ArgumentError(SpeclinkError, ValueError):
    """Caller passed arguments outside an operation's contract."""


class NumericalError(SpeclinkError):
    """The numerics broke down (step underflow, impossible backtracking)."""


class GenerationError(SpeclinkError):
    """Random model generation failed; retry with another seed."""


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform quadrature grid on [0, pi] for the normalized circle measure.

    ``nodes[0] = 0`` and ``nodes[-1] = pi``; interior nodes carry doubled
    trapezoid weight because each one stands for a conjugate pair
    ``(+theta, -theta)``.  Weights sum to one, so ``sum(w * f(nodes))``
    approximates the normalized integral of any even integrand, and does so
    exactly for trigonometric polynomials of degree below ``2*(L-1)``.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = _readonly(np.asarray(self.nodes, dtype=float))
        weights = _readonly(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.size < 2:
            raise StructureError("grid needs at least two nodes")
        if nodes[0] != 0.0 or abs(nodes[-1] - np.pi) > 1e-15:
            raise StructureError("grid must start at 0 and end at pi")
        if np.any(np.diff(nodes) <= 0):
            raise StructureError("grid nodes must be strictly increasing")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise StructureError("grid weights must sum to 1")

    @classmethod
    def default(cls, L=512):
        """Trapezoid rule with ``L`` nodes; endpoints carry half weight."""
        if L < 2:
            raise ArgumentError("grid size must be >= 2")
        nodes = np.linspace(0.0, np.pi, L)
        weights = np.full(L, 1.0 / (L - 1))
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return cls(nodes=nodes, weights=weights)

    @property
    def L(self):
        return self.nodes.size

    def refined(self, factor):
        """Same rule with ``factor``-times finer spacing (for oracle checks)."""
        return FrequencyGrid.default((self.L - 1) * factor + 1)

    def phases(self, n):
        """Matrix ``exp(1j * nodes * k)`` for lags ``k = 0..n``, shape (L, n+1)."""
        return np.exp(1j * np.outer(self.nodes, np.arange(n + 1)))


@dataclass(frozen=True)
class MatrixPseudoPolynomial:
    """Real-coefficient Hermitian-valued pseudo-polynomial.

    ``coeffs`` has shape ``(n+1, m, m)`` holding ``Q_0..Q_n``; the implied
    negative lags are the transposes.  ``Q_0`` is symmetrized on
    construction instead of trusting callers.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise StructureError(
                "coeffs must have shape (n+1, m, m), got %r" % (coeffs.shape,)
            )
        coeffs[0] = 0.5 * (coeffs[0] + coeffs[0].T)
        object.__setattr__(self, "coeffs", _readonly(coeffs))

    @classmethod
    def zero(cls, m, n):
        return cls(np.zeros((n + 1, m, m)))

    @classmethod
    def constant(cls, q0):
        return cls(np.asarray(q0, dtype=float)[None, :, :])

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def n(self):
        return self.coeffs.shape[0] - 1

    def __add__(self, other):
        if self.m != other.m:
            raise StructureError("dimension mismatch in pseudo-polynomial sum")
        n = max(self.n, other.n)
        out = np.zeros((n + 1, self.m, self.m))
        out[: self.n + 1] += self.coeffs
        out[: other.n + 1] += other.coeffs
        return MatrixPseudoPolynomial(out)

    def __mul__(self, scalar):
        return MatrixPseudoPolynomial(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other


@dataclass(frozen=True)
class SpectralDensitySamples:
    """Hermitian matrix samples of a spectral density on a frequency grid.

    ``values`` has shape ``(L, m, m)``.  ``positive=True`` asserts that the
    minimum eigenvalue over all nodes is strictly positive (checked).
    """

    grid: FrequencyGrid
    values: np.ndarray
    positive: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise StructureError("values must have shape (L, m, m)")
        if values.shape[0] != self.grid.L:
            raise StructureError("sample count does not match grid size")
        herm_gap = np.abs(values - values.conj().transpose(0, 2, 1)).max()
        scale = max(np.abs(values).max(), 1.0)
        if herm_gap > HERMITIAN_RTOL * scale:
            raise StructureError(
                "samples are not Hermitian (relative gap %.3e)" % (herm_gap / scale)
            )
        values = 0.5 * (values + values.conj().transpose(0, 2, 1))
        object.__setattr__(self, "values", _readonly(values))
        if self.positive:
            mins = min_eig_per_node(values)
            node = int(np.argmin(mins))
            if mins[node] <= 0.0:
                raise DomainError(
                    "samples flagged positive but node %d has min eigenvalue %.3e"
                    % (node, mins[node])
                )

    @property
    def m(self):
        return self.values.shape[1]

    def __add__(self, other):
        if self.grid is not other.grid and not np.array_equal(
            self.grid.nodes, other.grid.nodes
        ):
            raise StructureError("grids differ in sample sum")
        return SpectralDensitySamples(self.grid, self.values + other.values)


class Support:
    """Symmetric edge set over ``{0..m-1}``; diagonal pairs always present.

    Edges are stored as pairs ``(i, j)`` with ``i <= j``.
    """

    def __init__(self, m, edges=()):
        self.m = int(m)
        pairs = {(i, i) for i in range(self.m)}
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise StructureError("edge (%d, %d) outside 0..%d" % (i, j, self.m - 1))
            pairs.add((min(i, j), max(i, j)))
        self.edges = frozenset(pairs)

    @classmethod
    def full(cls, m):
        return cls(m, [(i, j) for i in range(m) for j in range(i + 1, m)])

    @classmethod
    def diagonal(cls, m):
        return cls(m)

    def __contains__(self, pair):
        i, j = pair
        return (min(i, j), max(i, j)) in self.edges

    def __eq__(self, other):
        return (
            isinstance(other, Support)
            and self.m == other.m
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.m, self.edges))

    def __le__(self, other):
        return self.m == other.m and self.edges <= other.edges

    def __repr__(self):
        off = sorted(self.off_diagonal())
        return "Support(m=%d, off_diagonal=%r)" % (self.m, off)

    def off_diagonal(self):
        return {(i, j) for i, j in self.edges if i != j}

    def complement_pairs(self):
        """Off-diagonal pairs (i, j) with i < j that are *not* in the support."""
        return {
            (i, j)
            for i in range(self.m)
            for j in range(i + 1, self.m)
            if (i, j) not in self.edges
        }

    def union(self, other):
        if self.m != other.m:
            raise StructureError("support union on different dimensions")
        return Support(self.m, self.edges | other.edges)

    def mask(self):
        """Dense boolean m x m mask (symmetric, diagonal True)."""
        out = np.zeros((self.m, self.m), dtype=bool)
        for i, j in self.edges:
            out[i, j] = out[j, i] = True
        return out


@dataclass(frozen=True)
class CovarianceSequence:
    """Covariance lags ``R_0..R_n``; ``R_0`` is symmetrized on construction."""

    lags: np.ndarray

    def __post_init__(self):
        lags = np.array(self.lags, dtype=float)
        if lags.ndim != 3 or lags.shape[1] != lags.shape[2]:
            raise StructureError("lags must have shape (n+1, m, m)")
        lags[0] = 0.5 * (lags[0] + lags[0].T)
        eig0 = np.linalg.eigvalsh(lags[0])[0]
        if eig0 < -1e-8 * max(1.0, np.abs(lags[0]).max()):
            raise DomainError("lag-0 covariance is not positive semidefinite")
        object.__setattr__(self, "lags", _readonly(lags))

    @property
    def m(self):
        return self.lags.shape[1]

    @property
    def n(self):
        return self.lags.shape[0] - 1


# ---------------------------------------------------------------------------
# operations


def evaluate_coeffs(coeffs, nodes):
    """Sample ``Q(theta)`` at ``nodes`` from stored coefficients.

    Returns a complex array of shape ``(len(nodes), m, m)``; exactly
    Hermitian by construction (B + B^H plus a real symmetric constant).
    """
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0] - 1
    values = np.broadcast_to(
        coeffs[0].astype(complex), (len(nodes), *coeffs.shape[1:])
    ).copy()
    if n > 0:
        # e^{-i k theta} against Q_k, k = 1..n; transposed conjugate adds Q_k^T terms
        phases = np.exp(-1j * np.outer(nodes, np.arange(1, n + 1)))
        partial = np.einsum("lk,kij->lij", phases, coeffs[1:])
        values += partial + partial.conj().transpose(0, 2, 1)
    return values


def evaluate(p, grid):
    """Sample a pseudo-polynomial on a grid as SpectralDensitySamples."""
    if not isinstance(p, MatrixPseudoPolynomial):
        raise StructureError("evaluate expects a MatrixPseudoPolynomial")
    return SpectralDensitySamples(grid, evaluate_coeffs(p.coeffs, grid.nodes))


def extract_lags(samples, n):
    """Quadrature Fourier coefficients ``integral(F e^{i k theta})``, k = 0..n.

    For samples of a real-process spectrum this returns the real covariance
    lags; exact for trigonometric polynomials resolved by the grid.
    """
    grid = samples.grid
    wphase = grid.weights[:, None] * grid.phases(n)
    return np.einsum("lk,lij->kij", wphase, samples.values).real


def norm_P(p, grid):
    """Normalized integral of the largest-modulus eigenvalue of ``p``."""
    values = evaluate_coeffs(p.coeffs, grid.nodes)
    eigs = np.linalg.eigvalsh(values)
    return float(grid.weights @ np.abs(eigs).max(axis=1))


def project_support(p, omega):
    """Zero every coefficient entry outside the support, for all lags."""
    if p.m != omega.m:
        raise StructureError("support dimension %d != polynomial dimension %d"
                             % (omega.m, p.m))
    return MatrixPseudoPolynomial(p.coeffs * omega.mask()[None, :, :])


def min_eig_per_node(values):
    """Smallest eigenvalue of each Hermitian sample, shape (L,)."""
    return np.linalg.eigvalsh(values)[:, 0]


def inverse_samples(phi):
    """Node-wise Hermitian inverse of positive samples."""
    mins = min_eig_per_node(phi.values)
    node = int(np.argmin(mins))
    if mins[node] <= 0.0:
        raise DomainError(
            "cannot invert: node %d has min eigenvalue %.3e" % (node, mins[node])
        )
    inv = np.linalg.inv(phi.values)
    inv = 0.5 * (inv + inv.conj().transpose(0, 2, 1))
    return SpectralDensitySamples(phi.grid, inv, positive=True)


def hermitian_sqrt(values):
    """Hermitian square root of each PD sample, shape preserved."""
    w, v = np.linalg.eigh(values)
    if w.min() < 0:
        raise DomainError("hermitian_sqrt needs positive semidefinite samples")
    return np.einsum("lij,lj,lkj->lik", v, np.sqrt(w), v.conj())
