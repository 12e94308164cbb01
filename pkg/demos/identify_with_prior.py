"""One identification window, start to finish.

A sparse ground-truth network gains one edge; we observe 1000 samples,
identify the updated model using the old one as prior, and watch the new
edge surface in the partial-coherence scores.
"""

import numpy as np

from speclink import core, estimation, objective, scoring, simulate, solver

grid = core.FrequencyGrid.default(128)
m, n = 6, 2

# yesterday's network: 5 known edges
prior_support = core.Support(m, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
prior = simulate.random_sparse_model(m, n, prior_support, seed=1, grid=grid,
                                     amplitude=0.25, min_eig=0.5)

# today's network: edge (0, 5) appeared
truth = simulate.extend_model(prior, [(0, 5)], seed=2, grid=grid, amplitude=0.8)
data = simulate.sample_path(truth, 1000, seed=3)
print("observed %d samples of a %d-channel process" % (data.N, m))

# identify with the prior and a group-sparsity penalty off its support
problem = objective.RegularizedProblem(
    psi_inv=prior.inverse_spectrum(grid),
    lags=estimation.sample_covariances(data, n),
    omega_sigma=prior_support,
    lam=0.0427,
)
Q, report = solver.solve_regularized(problem, solver.SolverConfig(tol_grad=1e-9))
print("solved in %d iterations (converged=%s, KKT passed=%s)"
      % (report.iterations, report.converged, report.kkt.passed))

phi = solver.recover_primal(Q, problem.psi_inv)
scores = scoring.score_matrix(scoring.partial_coherence(phi), prior_support)
print("\ncandidate scores (true new edge is (0, 5)):")
for pair, s in sorted(scores.scores.items(), key=lambda kv: -kv[1]):
    if s > 0:
        print("  %s  %.4f" % (pair, s))

predicted = scoring.threshold(scores, t_r=0.3)
added = sorted(predicted.off_diagonal() - prior_support.off_diagonal())
print("\nedges added at threshold 0.3:", added)

metrics = scoring.score_against_truth(predicted, truth.support, prior_support)
print("precision %.2f  recall %.2f  F1 %.2f" %
      (metrics.precision, metrics.recall, metrics.f1))
