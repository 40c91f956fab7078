#include "nscr/propagation.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace nscr {

void PropagationProblem::validate() const {
  if (graph == nullptr) throw DataError("propagation problem has no graph");
  if (anchor.rows() != graph->num_social_users())
    throw DimensionMismatch("anchor rows must equal the social user count");
  if (!anchor.allFinite()) throw NumericFailure("non-finite anchor matrix");
  if (mu <= 0.0) throw DataError("mu must be positive");
  if (tolerance <= 0.0) throw DataError("tolerance must be positive");
  if (max_iterations < 1) throw DataError("max_iterations must be >= 1");
}

SparseMatrix normalized_adjacency(const SocialGraph& graph) {
  const int n = graph.num_social_users();
  Vector inv_sqrt_deg(n);
  for (int v = 0; v < n; ++v) {
    const double d = graph.degrees()[v];
    inv_sqrt_deg[v] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(graph.adjacency().nonZeros());
  for (int col = 0; col < graph.adjacency().outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(graph.adjacency(), col); it; ++it)
      entries.emplace_back(it.row(), it.col(),
                           it.value() * inv_sqrt_deg[it.row()] * inv_sqrt_deg[it.col()]);
  SparseMatrix out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Matrix propagate(const PropagationProblem& problem) {
  problem.validate();
  const SparseMatrix s_hat = normalized_adjacency(*problem.graph);
  const double mu = problem.mu;
  const double damping = 1.0 / (1.0 + mu);

  if (problem.solver == PropagationSolver::Direct) {
    const int n = problem.graph->num_social_users();
    SparseMatrix identity(n, n);
    identity.setIdentity();
    SparseMatrix system = identity - damping * s_hat;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(system);
    if (lu.info() != Eigen::Success) throw NumericFailure("sparse LU factorization failed");
    return lu.solve((mu * damping) * problem.anchor);
  }

  // Fixed point: the iteration matrix has spectral radius <= 1/(1+mu) < 1.
  Matrix p = problem.anchor;
  for (int iter = 0; iter < problem.max_iterations; ++iter) {
    Matrix next = damping * (s_hat * p) + (mu * damping) * problem.anchor;
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (change < problem.tolerance) return p;
  }
  throw NoConvergence("fixed-point propagation did not converge within " +
                      std::to_string(problem.max_iterations) + " iterations");
}

double propagation_residual(const SocialGraph& graph, const Matrix& p,
                            const Matrix& anchor, double mu) {
  const SparseMatrix s_hat = normalized_adjacency(graph);
  const double damping = 1.0 / (1.0 + mu);
  Matrix residual = p - damping * (s_hat * p) - (mu * damping) * anchor;
  return residual.cwiseAbs().maxCoeff();
}

std::pair<double, double> social_objective(const SocialGraph& graph, const Matrix& p,
                                           const Matrix& anchor,
                                           const std::vector<int>& bridge_set) {
  double smoothness = 0.0;
  const auto& adj = graph.adjacency();
  for (int col = 0; col < adj.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(adj, col); it; ++it) {
      if (it.row() >= it.col()) continue;  // each undirected edge once
      const double da = graph.degrees()[it.row()];
      const double db = graph.degrees()[it.col()];
      Vector diff = p.row(it.row()).transpose() / std::sqrt(da) -
                    p.row(it.col()).transpose() / std::sqrt(db);
      smoothness += it.value() * diff.squaredNorm();
    }
  }
  double fitting = 0.0;
  for (int u : bridge_set)
    fitting += 0.5 * (p.row(u) - anchor.row(u)).squaredNorm();
  return {smoothness, fitting};
}

}  // namespace nscr
