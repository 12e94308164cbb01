"""Shared builders for random test instances."""

import numpy as np
import pytest

from speclink import core, estimation, objective


def grid(L=64):
    return core.FrequencyGrid.default(L)


def random_poly(rng, m, n, scale=1.0):
    return core.MatrixPseudoPolynomial(scale * rng.standard_normal((n + 1, m, m)))


def random_pd_samples(rng, g, m, floor=0.5):
    """Random Hermitian-PD samples, smooth in theta (poly-based).

    The diagonal shift is computed on a fixed fine grid so that the same
    draws produce the same underlying function on any evaluation grid.
    """
    p = random_poly(rng, m, 2, 0.3)
    fine = core.FrequencyGrid.default(257)
    low = np.linalg.eigvalsh(core.evaluate(p, fine).values)[:, 0].min()
    vals = core.evaluate(p, g).values + (max(0.0, -low) + floor) * np.eye(m)
    return core.SpectralDensitySamples(g, vals, positive=True)


def random_psi_inv(rng, g, m, n=2, floor=0.5):
    """Positive polynomial prior inverse (loaded to clear the floor).

    Loading uses a fixed fine grid so the coefficients do not depend on the
    evaluation grid.
    """
    c = 0.3 * rng.standard_normal((n + 1, m, m))
    c[0] = 0.5 * (c[0] + c[0].T)
    fine = core.FrequencyGrid.default(257)
    vals = core.evaluate(core.MatrixPseudoPolynomial(c), fine).values
    low = np.linalg.eigvalsh(vals)[:, 0].min()
    c[0] += (max(0.0, -low) + floor) * np.eye(m)
    return core.SpectralDensitySamples(
        g, core.evaluate(core.MatrixPseudoPolynomial(c), g).values, positive=True
    )


def random_problem(seed, m=3, n=2, L=64, lam=0.05, N=200, omega_edges=((0, 1),)):
    rng = np.random.default_rng(seed)
    g = grid(L)
    psi_inv = random_psi_inv(rng, g, m, n)
    y = estimation.TimeSeries(rng.standard_normal((N, m)))
    lags = estimation.sample_covariances(y, n)
    omega = core.Support(m, omega_edges)
    return objective.RegularizedProblem(
        psi_inv=psi_inv, lags=lags, omega_sigma=omega, lam=lam
    )
