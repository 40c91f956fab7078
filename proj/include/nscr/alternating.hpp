#pragma once

#include "nscr/dataset.hpp"
#include "nscr/evaluation.hpp"
#include "nscr/model.hpp"
#include "nscr/propagation.hpp"
#include "nscr/trainer.hpp"

namespace nscr {

struct TrainConfig {
  HyperParams hp;
  int outer_iterations = 50;
  int inner_epochs_per_iteration = 1;
  int early_stop_patience = 5;  // on validation AUC
  bool social_propagation = true;
  PropagationSolver solver = PropagationSolver::FixedPoint;
  double propagation_tolerance = 1e-8;
  int propagation_max_iterations = 500;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double smoothness = 0.0;
  double fitting = 0.0;
  double val_auc = 0.0;
};

struct FitResult {
  ModelParameters params;       // snapshot with the best validation AUC
  Matrix social_embeddings;     // P, M2 x K
  std::vector<IterationRecord> history;
  int best_iteration = 0;
};

/// Outer alternation: inner ranking epochs, bridge-embedding hand-off into
/// the anchor matrix, social propagation, write-back of bridge rows, early
/// stopping on validation AUC.
FitResult fit(const DataBundle& bundle, const SplitSpec& split,
              const TrainConfig& config);

/// Scores a social user against an item: the user's propagated row is merged
/// with the pooled item vector and pushed through the hidden stack, eval mode.
double predict_social(const ModelParameters& params, const Matrix& social_embeddings,
                      int social_user, int item, const AttributeCatalog& catalog);

/// Eval-mode scorer over information-domain users.
Scorer make_info_scorer(const ModelParameters& params, const AttributeCatalog& catalog);

}  // namespace nscr
