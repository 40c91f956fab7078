#pragma once

#include "nscr/dataset.hpp"
#include "nscr/evaluation.hpp"
#include "nscr/model.hpp"
#include "nscr/trainer.hpp"

namespace nscr {

// ---------------------------------------------------------------------------
// ItemPop

/// Train-interaction count per item.
std::vector<double> itempop_counts(const InteractionTable& table,
                                   const SplitSpec& split);

inline double itempop_score(const std::vector<double>& counts, int item) {
  return counts[item];
}

// ---------------------------------------------------------------------------
// MF

struct MfParameters {
  Matrix user_vecs;
  Matrix item_vecs;
  Matrix user_acc;
  Matrix item_acc;

  static MfParameters init(int num_users, int num_items, const HyperParams& hp);
};

inline double mf_predict(const Vector& user_vec, const Vector& item_vec) {
  if (user_vec.size() != item_vec.size())
    throw DimensionMismatch("mf_predict vector lengths differ");
  return user_vec.dot(item_vec);
}

/// One epoch of the shared triplet sampler and ranking loss over the MF
/// predictor; returns the mean triplet loss.
double mf_train_epoch(MfParameters& params, const InteractionTable& table,
                      const SplitSpec& split, const HyperParams& hp, Rng& rng);

// ---------------------------------------------------------------------------
// SFM: factorization machine over user/item IDs, attributes, and the friend
// IDs of bridge users.

struct FmFeature {
  int index = 0;
  double value = 0.0;
};

struct FmParameters {
  double bias = 0.0;
  Vector linear;    // per feature
  Matrix factors;   // num_features x K
  double bias_acc = 0.0;
  Vector linear_acc;
  Matrix factors_acc;

  int num_users = 0;
  int num_items = 0;
  int num_attributes = 0;
  int num_social = 0;

  static FmParameters init(const DataBundle& bundle, const HyperParams& hp);

  int user_feature(int user) const { return user; }
  int item_feature(int item) const { return num_users + item; }
  int attr_feature(int attr) const { return num_users + num_items + attr; }
  int friend_feature(int social) const {
    return num_users + num_items + num_attributes + social;
  }
};

/// Feature vector for a (user, item) pair: one-hot IDs, count-normalized
/// attributes, and count-normalized friend IDs when the user is a bridge user.
std::vector<FmFeature> sfm_features(const FmParameters& fm, const DataBundle& bundle,
                                    int user, int item, bool use_attributes,
                                    bool use_friends);

/// w0 + sum w_f x_f + sum_{f<f'} <v_f, v_f'> x_f x_f', via the linear-time
/// sum-of-squares identity.
double sfm_predict(const FmParameters& fm, const std::vector<FmFeature>& features);

double sfm_train_epoch(FmParameters& params, const DataBundle& bundle,
                       const SplitSpec& split, const HyperParams& hp,
                       bool use_attributes, Rng& rng);

// ---------------------------------------------------------------------------
// SR: MF plus an un-normalized friend-similarity regularizer over bridge
// users, with attribute-overlap weights.

/// Jaccard overlap of attribute sets, floored at epsilon; the "-a" variant
/// uses a constant 1.
double sr_similarity(const std::vector<int>& attrs_a, const std::vector<int>& attrs_b,
                     bool use_attributes, double floor_eps = 0.01);

struct SrOptions {
  double beta = 0.5;
  bool use_attributes = true;
};

double sr_train_epoch(MfParameters& params, const DataBundle& bundle,
                      const SplitSpec& split, const HyperParams& hp,
                      const SrOptions& options, Rng& rng);

}  // namespace nscr
