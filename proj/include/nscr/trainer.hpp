#pragma once

#include "nscr/dataset.hpp"
#include "nscr/model.hpp"

namespace nscr {

/// A pairwise training instance: observed (user, pos) against an item the
/// user never interacted with in any split.
struct Triplet {
  int user = 0;
  int pos_item = 0;
  int neg_item = 0;
};

struct ExhaustedNegatives : DataError {
  explicit ExhaustedNegatives(int user)
      : DataError("user " + std::to_string(user) + " has interacted with every item"),
        user(user) {}
  int user;
};

/// Uniformly samples observed train pairs, pairing each with one unobserved
/// negative (rejection sampling with a scan fallback).
std::vector<Triplet> sample_batch(const InteractionTable& table,
                                  const SplitSpec& split, int batch_size, Rng& rng);

/// Regression-based ranking loss (y_ui - y_uj - 1)^2.
inline double triplet_loss(double pred_pos, double pred_neg) {
  const double margin = pred_pos - pred_neg - 1.0;
  return margin * margin;
}

/// One pass of ceil(|train| / batch_size) mini-batches; the batch gradient is
/// the mean over its triplets. Returns the mean triplet loss over the epoch.
double train_epoch(ModelParameters& params, const InteractionTable& table,
                   const AttributeCatalog& catalog, const SplitSpec& split,
                   const HyperParams& hp, Rng& rng);

}  // namespace nscr
