"""Partial-coherence edge scores, thresholding, and baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ArgumentError,
    SpectralDensitySamples,
    StructureError,
    Support,
    inverse_samples,
)

__all__ = [
    "ScoreMatrix",
    "partial_coherence",
    "score_matrix",
    "threshold",
    "common_neighbors",
    "score_against_truth",
    "PredictionMetrics",
]


@dataclass(frozen=True)
class ScoreMatrix:
    """Nonnegative scores for candidate pairs outside the prior support."""

    m: int
    omega_sigma: Support
    scores: dict

    def __post_init__(self):
        for (i, j), s in self.scores.items():
            if i >= j or (i, j) in self.omega_sigma:
                raise StructureError("score stored for a non-candidate pair")
            if s < 0:
                raise StructureError("scores must be nonnegative")

    def max_score(self):
        return max(self.scores.values(), default=0.0)

    def dense(self):
        """Symmetric m x m array, zero at prior/diagonal cells."""
        out = np.zeros((self.m, self.m))
        for (i, j), s in self.scores.items():
            out[i, j] = out[j, i] = s
        return out


def partial_coherence(phi):
    """Diagonal-normalized inverse spectrum, node by node.

    Gamma = diag(phi)^{1/2} phi^{-1} diag(phi)^{1/2}; invariant under
    positive per-channel rescaling of phi.
    """
    inv = inverse_samples(phi)
    d = np.einsum("lii->li", phi.values).real
    if d.min() <= 0:
        raise StructureError("positive samples must have positive diagonal")
    sq = np.sqrt(d)
    gamma = sq[:, :, None] * inv.values * sq[:, None, :]
    return SpectralDensitySamples(phi.grid, gamma)


def score_matrix(gamma, omega_sigma):
    """Edge scores: sqrt of the *unnormalized* integral of |Gamma_ij|^2.

    Unlike every other functional here, the integral runs over plain
    d(theta) on [-pi, pi] (one factor 2*pi against the normalized weights),
    so published threshold values apply directly.
    """
    if gamma.m != omega_sigma.m:
        raise StructureError("score dimension mismatch")
    w = gamma.grid.weights
    sq = np.einsum("l,lij->ij", w, np.abs(gamma.values) ** 2)
    scores = {}
    for i, j in omega_sigma.complement_pairs():
        scores[(i, j)] = float(np.sqrt(2.0 * np.pi * sq[i, j]))
    return ScoreMatrix(m=gamma.m, omega_sigma=omega_sigma, scores=scores)


def threshold(G, t_r):
    """Predicted support: the prior plus every candidate scoring above t_r."""
    if t_r <= 0:
        raise ArgumentError("threshold must be positive")
    edges = set(G.omega_sigma.off_diagonal())
    edges.update(pair for pair, s in G.scores.items() if s > t_r)
    return Support(G.m, edges)


def common_neighbors(omega):
    """Baseline score: number of shared neighbors of each candidate pair."""
    adj = omega.mask().astype(int)
    np.fill_diagonal(adj, 0)
    counts = adj @ adj
    scores = {}
    for i, j in omega.complement_pairs():
        scores[(i, j)] = float(counts[i, j])
    return ScoreMatrix(m=omega.m, omega_sigma=omega, scores=scores)


@dataclass(frozen=True)
class PredictionMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def score_against_truth(predicted, truth, omega_sigma):
    """Precision/recall/F1 over candidate pairs only (added edges)."""
    if not (predicted.m == truth.m == omega_sigma.m):
        raise StructureError("support dimensions differ")
    candidates = omega_sigma.complement_pairs()
    pred = {p for p in candidates if p in predicted}
    true = {p for p in candidates if p in truth}
    tp = len(pred & true)
    fp = len(pred - true)
    fn = len(true - pred)
    precision = tp / (tp + fp) if tp + fp else (1.0 if fn == 0 else 0.0)
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return PredictionMetrics(tp, fp, fn, precision, recall, f1)
