#pragma once

#include "nscr/dataset.hpp"
#include "nscr/types.hpp"

#include <vector>

namespace nscr {

enum class PropagationSolver { Direct, FixedPoint };

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One social-propagation solve: anchor matrix P0 (M2 x K), the smoothness /
/// fitting tradeoff mu, and the solver configuration.
struct PropagationProblem {
  const SocialGraph* graph = nullptr;
  Matrix anchor;  // P^(0)
  double mu = 0.7;
  PropagationSolver solver = PropagationSolver::FixedPoint;
  double tolerance = 1e-8;
  int max_iterations = 500;

  void validate() const;
};

/// Degree-normalized adjacency with entries s_ab / sqrt(d_a d_b); rows and
/// columns of isolated vertices are zero.
SparseMatrix normalized_adjacency(const SocialGraph& graph);

/// Solves P = mu/(1+mu) (I - S_hat/(1+mu))^{-1} P0, either by a direct sparse
/// solve per column or by the contractive fixed-point iteration
/// P <- S_hat P/(1+mu) + mu P0/(1+mu).
Matrix propagate(const PropagationProblem& problem);

/// Max-abs residual of the fixed-point equation at P.
double propagation_residual(const SocialGraph& graph, const Matrix& p,
                            const Matrix& anchor, double mu);

/// Smoothness (degree-normalized disagreement along edges) and fitting
/// (anchor distance over bridge users) terms of the social objective.
std::pair<double, double> social_objective(const SocialGraph& graph, const Matrix& p,
                                           const Matrix& anchor,
                                           const std::vector<int>& bridge_set);

}  // namespace nscr
