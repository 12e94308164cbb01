"""Synthetic ground-truth networks and stationary Gaussian sample paths.

Models control the support of the *inverse* spectrum directly: the truth is
a pseudo-polynomial M with prescribed coefficient support (optionally over a
scalar moving-average factor), so declared edge sets are exact.  Sample
paths come from frequency-domain synthesis: independent complex Gaussians
per DFT bin shaped by the Hermitian square root of the spectrum, inverse
transformed.  The resulting covariance is the circulant wrap-around of the
true one, an O(1/N)-bias approximation of stationarity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ArgumentError,
    FrequencyGrid,
    GenerationError,
    MatrixPseudoPolynomial,
    SpectralDensitySamples,
    StructureError,
    Support,
    evaluate_coeffs,
    hermitian_sqrt,
)
from .estimation import TimeSeries

__all__ = [
    "GroundTruthModel",
    "ScenarioSpec",
    "Scenario",
    "random_sparse_model",
    "extend_model",
    "sample_path",
    "build_scenario",
    "random_nested_scenario",
]

_LOAD_STEP = 0.1
_MAX_LOADS = 100


@dataclass(frozen=True)
class GroundTruthModel:
    """A network model with known inverse-spectrum support.

    kind "poly": ``coeffs`` are M_0..M_n and the inverse spectrum is
    M(theta) / s(theta) with s = |b(e^{i theta})|^2 from the scalar ``ma``
    coefficients (``ma = [1]`` gives a plain polynomial inverse).
    kind "ar": ``coeffs`` are the filter matrices F_1..F_n of
    y(t) = sum_k F_k y(t-k) + e(t) with unit noise covariance.
    """

    kind: str
    coeffs: np.ndarray
    ma: np.ndarray
    support: Support | None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "ma", np.asarray(self.ma, dtype=float))
        if self.kind not in ("poly", "ar"):
            raise StructureError("unknown model kind %r" % (self.kind,))
        if self.kind == "ar" and self.ma.size != 1:
            raise StructureError("ar models take no moving-average factor")

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def n(self):
        return self.coeffs.shape[0] - (1 if self.kind == "poly" else 0)

    def _ma_factor(self, thetas):
        z = np.exp(-1j * np.outer(thetas, np.arange(self.ma.size)))
        return np.abs(z @ self.ma) ** 2

    def inverse_spectrum_at(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        if self.kind == "poly":
            vals = evaluate_coeffs(self.coeffs, thetas)
            return vals / self._ma_factor(thetas)[:, None, None]
        # ar: A(theta) = I - sum_k F_k e^{-i k theta};  Phi^{-1} = A^H A
        phases = np.exp(-1j * np.outer(thetas, np.arange(1, self.n + 1)))
        A = np.eye(self.m) - np.einsum("lk,kij->lij", phases, self.coeffs)
        return np.einsum("lji,ljk->lik", A.conj(), A)

    def spectrum_at(self, thetas):
        inv = self.inverse_spectrum_at(thetas)
        out = np.linalg.inv(inv)
        return 0.5 * (out + out.conj().transpose(0, 2, 1))

    def inverse_spectrum(self, grid):
        return SpectralDensitySamples(
            grid, self.inverse_spectrum_at(grid.nodes), positive=True
        )

    def spectrum(self, grid):
        return SpectralDensitySamples(
            grid, self.spectrum_at(grid.nodes), positive=True
        )


def _loaded(coeffs, grid, min_eig, what):
    """Add c*I to the lag-0 block until the evaluated minimum eigenvalue clears min_eig."""
    coeffs = coeffs.copy()
    for _ in range(_MAX_LOADS):
        vals = evaluate_coeffs(coeffs, grid.nodes)
        low = np.linalg.eigvalsh(vals)[:, 0].min()
        if low >= min_eig:
            return coeffs
        coeffs[0] += _LOAD_STEP * np.eye(coeffs.shape[1])
    raise GenerationError("%s stayed indefinite after diagonal loading" % what)


def random_sparse_model(
    m, n, omega, seed, grid=None, amplitude=0.4, min_eig=0.1, ma=(1.0,)
):
    """Random degree-n inverse-spectrum polynomial supported on ``omega``.

    Entries outside the support are exactly zero at every lag; the lag-0
    block is diagonally loaded until the evaluated minimum eigenvalue over
    the grid clears ``min_eig``.  Deterministic in ``seed``.
    """
    grid = grid or FrequencyGrid.default()
    rng = np.random.default_rng(seed)
    mask = omega.mask().astype(float)
    coeffs = np.empty((n + 1, m, m))
    q0 = amplitude * rng.standard_normal((m, m))
    coeffs[0] = 0.5 * (q0 + q0.T) + np.eye(m)
    for k in range(1, n + 1):
        coeffs[k] = amplitude / (k + 1.0) * rng.standard_normal((m, m))
    coeffs *= mask[None, :, :]
    coeffs = _loaded(coeffs, grid, min_eig, "random sparse model")
    return GroundTruthModel(
        kind="poly", coeffs=coeffs, ma=np.asarray(ma, float), support=omega, seed=seed
    )


def extend_model(model, new_edges, seed, grid=None, amplitude=0.4, min_eig=0.1):
    """Add edges to a poly model: random coefficients on the new pairs only.

    Existing entries are preserved (up to diagonal loading), so supports
    stay exactly nested.  The lag-0 entry of a new edge has magnitude at
    least 0.6 * amplitude so every declared edge is actually load-bearing.
    """
    if model.kind != "poly":
        raise ArgumentError("only poly models can be extended")
    grid = grid or FrequencyGrid.default()
    rng = np.random.default_rng(seed)
    m, n = model.m, model.n
    delta = np.zeros((n + 1, m, m))
    for i, j in new_edges:
        i, j = min(i, j), max(i, j)
        if (i, j) in model.support:
            raise ArgumentError("edge (%d, %d) already present" % (i, j))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        v0 = sign * amplitude * rng.uniform(0.6, 1.0)
        delta[0, i, j] = delta[0, j, i] = v0
        for k in range(1, n + 1):
            delta[k, i, j] = amplitude / (k + 1.0) * rng.standard_normal()
            delta[k, j, i] = amplitude / (k + 1.0) * rng.standard_normal()
    coeffs = _loaded(model.coeffs + delta, grid, min_eig, "extended model")
    return GroundTruthModel(
        kind="poly",
        coeffs=coeffs,
        ma=model.ma,
        support=Support(m, set(model.support.off_diagonal()) | set(new_edges)),
        seed=seed,
    )


def sample_path(model, N, seed):
    """Length-N Gaussian path whose population spectrum is the model's.

    Frequency-domain synthesis with enforced conjugate symmetry; the output
    is exactly real and bit-reproducible for a fixed seed.
    """
    if N < 4 * model.n:
        raise ArgumentError("need at least 4n samples for synthesis")
    m = model.m
    rng = np.random.default_rng(seed)
    half = N // 2
    omegas = 2.0 * np.pi * np.arange(half + 1) / N
    S = hermitian_sqrt(model.spectrum_at(omegas))
    a = rng.standard_normal((half + 1, m))
    b = rng.standard_normal((half + 1, m))
    z = (a + 1j * b) / np.sqrt(2.0)
    z[0] = a[0]
    if N % 2 == 0:
        z[half] = a[half]
    X = np.empty((N, m), dtype=complex)
    X[: half + 1] = np.einsum("lij,lj->li", S, z)
    X[half + 1 :] = X[1 : N - half][::-1].conj()
    y = np.fft.ifft(X, axis=0).real * np.sqrt(N)
    return TimeSeries(np.ascontiguousarray(y))


@dataclass(frozen=True)
class ScenarioSpec:
    """Models per window (index 0 is the known prior) plus window lengths."""

    models: list
    window_lengths: list
    seed: int = 0

    def __post_init__(self):
        if len(self.models) != len(self.window_lengths):
            raise StructureError("one window length per model required")
        if len(self.models) < 1:
            raise StructureError("a scenario needs at least the prior model")
        for prev, cur in zip(self.models, self.models[1:]):
            if not prev.support <= cur.support:
                raise StructureError("scenario supports must be nested")


@dataclass(frozen=True)
class Scenario:
    """Materialized scenario: prior model, per-window data, truth supports."""

    spec: ScenarioSpec
    windows: list  # TimeSeries for windows 1..K

    @property
    def prior_model(self):
        return self.spec.models[0]

    @property
    def truth_supports(self):
        return [mod.support for mod in self.spec.models]


def build_scenario(spec):
    """Draw all window paths; window k uses a seed split as (seed, k)."""
    windows = []
    for k, model in enumerate(spec.models):
        if k == 0:
            continue
        seed = np.random.SeedSequence((spec.seed, k))
        windows.append(sample_path(model, spec.window_lengths[k], seed))
    return Scenario(spec=spec, windows=windows)


def _random_support(m, n_edges, rng):
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    if n_edges > len(pairs):
        raise ArgumentError("more edges requested than pairs available")
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    return Support(m, [pairs[c] for c in chosen])


def random_nested_scenario(
    m,
    n,
    window_lengths,
    base_edges,
    added_edges,
    seed,
    grid=None,
    amplitude=0.25,
    new_edge_amplitude=0.8,
    min_eig=0.5,
    ma=(1.0,),
):
    """Random scenario with nested supports: prior plus growing windows.

    ``added_edges[k]`` new pairs appear in window k+1; coefficients on old
    edges carry over so consecutive models differ only where edges appear.
    The defaults keep the models well conditioned and the new edges strong
    enough to be identifiable from a thousand samples.
    """
    if len(added_edges) + 1 != len(window_lengths):
        raise ArgumentError("need one added-edge count per data window")
    grid = grid or FrequencyGrid.default()
    rng = np.random.default_rng(seed)
    omega0 = _random_support(m, base_edges, rng)
    models = [
        random_sparse_model(
            m, n, omega0, seed=int(rng.integers(2**32)), grid=grid,
            amplitude=amplitude, min_eig=min_eig, ma=ma,
        )
    ]
    for count in added_edges:
        current = models[-1]
        candidates = sorted(current.support.complement_pairs())
        if count > len(candidates):
            raise GenerationError("no room left for new edges")
        picks = rng.choice(len(candidates), size=count, replace=False)
        new_edges = [candidates[p] for p in picks]
        models.append(
            extend_model(
                current, new_edges, seed=int(rng.integers(2**32)), grid=grid,
                amplitude=new_edge_amplitude, min_eig=min_eig,
            )
        )
    return ScenarioSpec(models=models, window_lengths=list(window_lengths), seed=seed)
