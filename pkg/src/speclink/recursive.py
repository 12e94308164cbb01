"""Recursive link prediction: chain identification across time windows.

After window k the inverse spectrum is the base prior's inverse plus the
accumulated dual increments, Phi_k^{-1} = Phi_0^{-1} + sum_l Q_l.  All
increments share the same degree n, so the model degree stays bounded by
deg(Phi_0) + n no matter how many windows arrive, and estimated supports
can only grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ArgumentError,
    SpectralDensitySamples,
    SpeclinkError,
    evaluate_coeffs,
)
from .estimation import sample_covariances
from .objective import RegularizedProblem
from .scoring import partial_coherence, score_matrix, threshold
from .solver import SolverConfig, recover_primal, solve_regularized

__all__ = ["RecursiveState", "initial_state", "step", "flatten"]


@dataclass(frozen=True)
class RecursiveState:
    """State after k windows of the recursive scheme."""

    k: int
    n: int
    base_inverse: SpectralDensitySamples
    base_degree: int
    support: "Support"
    increments: tuple = ()
    current_inverse: SpectralDensitySamples = None
    reports: tuple = ()
    scores: tuple = ()

    def __post_init__(self):
        if self.current_inverse is None:
            object.__setattr__(self, "current_inverse", self.base_inverse)

    @property
    def degree_bound(self):
        """Exact integer bound on the current model degree."""
        return self.base_degree + (self.n if self.increments else 0)

    @property
    def grid(self):
        return self.base_inverse.grid


def initial_state(prior_inverse, omega0, n, base_degree):
    """State before any data window: the known prior and its support."""
    if not prior_inverse.positive:
        raise ArgumentError("prior inverse samples must be flagged positive")
    return RecursiveState(
        k=0,
        n=n,
        base_inverse=prior_inverse,
        base_degree=base_degree,
        support=omega0,
    )


def flatten(state):
    """Prior-inverse samples for the next solve, recomputed from scratch.

    Equals the sequentially accumulated ``current_inverse`` up to rounding;
    the summed increment degree stays n regardless of k.
    """
    values = state.base_inverse.values.copy()
    for Q in state.increments:
        values = values + evaluate_coeffs(Q.coeffs, state.grid.nodes)
    return SpectralDensitySamples(state.grid, values, positive=True)


def step(state, y_window, lam, t_r, cfg=None):
    """Consume one data window: solve, rescore, grow the support estimate."""
    if y_window.N <= state.n:
        raise ArgumentError("window shorter than the model order")
    cfg = cfg or SolverConfig()
    lags = sample_covariances(y_window, state.n)
    prob = RegularizedProblem(
        psi_inv=state.current_inverse,
        lags=lags,
        omega_sigma=state.support,
        lam=lam,
    )
    try:
        Q_new, report = solve_regularized(prob, cfg)
    except SpeclinkError as err:
        raise type(err)("window %d: %s" % (state.k + 1, err)) from err
    phi = recover_primal(Q_new, state.current_inverse)
    gamma = partial_coherence(phi)
    G = score_matrix(gamma, state.support)
    new_support = threshold(G, t_r)
    # increments never raise the degree bound: every Q_l has degree n
    assert Q_new.n == state.n
    next_inverse = SpectralDensitySamples(
        state.grid,
        state.current_inverse.values
        + evaluate_coeffs(Q_new.coeffs, state.grid.nodes),
        positive=True,
    )
    new_state = RecursiveState(
        k=state.k + 1,
        n=state.n,
        base_inverse=state.base_inverse,
        base_degree=state.base_degree,
        support=new_support,
        increments=state.increments + (Q_new,),
        current_inverse=next_inverse,
        reports=state.reports + (report,),
        scores=state.scores + (G,),
    )
    assert new_state.degree_bound <= state.base_degree + state.n
    return new_state
