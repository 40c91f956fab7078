#pragma once

#include "nscr/dataset.hpp"
#include "nscr/types.hpp"

#include <functional>
#include <vector>

namespace nscr {

using Scorer = std::function<double(int user, int item)>;

struct UserMetrics {
  int user = 0;
  double auc = 0.0;
  double recall_at_k = 0.0;
};

struct EvalReport {
  std::vector<UserMetrics> per_user;
  double mean_auc = 0.0;
  double mean_recall = 0.0;
  int recall_k = 5;
  int skipped_users = 0;  // users whose test partition was empty
  std::string negative_set_policy = "all-unobserved";
  std::uint64_t seed = 0;
};

struct EmptySide : DataError {
  using DataError::DataError;
};
struct EmptyRelevant : DataError {
  using DataError::DataError;
};
struct NoTestUsers : DataError {
  using DataError::DataError;
};
struct DegenerateInput : DataError {
  using DataError::DataError;
};

/// Fraction of (pos, neg) score pairs with pos strictly greater; ties count
/// as failures.
double user_auc(const std::vector<double>& pos_scores,
                const std::vector<double>& neg_scores);

/// |relevant intersect top-K of ranked_items| / |relevant|.
double user_recall_at_k(const std::vector<int>& ranked_items,
                        const std::vector<int>& relevant, int k);

/// Ranks candidate items by score descending with ascending item-index
/// tie-break.
std::vector<int> rank_items(const Scorer& scorer, int user,
                            const std::vector<int>& candidates);

/// Core holdout evaluation: for each listed user, positives are scored
/// against every item outside that user's exclusion set.
EvalReport evaluate_ranking(const Scorer& scorer, const std::vector<int>& users,
                            const std::vector<std::vector<int>>& positives,
                            const std::vector<std::vector<int>>& excluded,
                            int num_items, int recall_k);

enum class EvalPartition { Validation, Test };

/// Bridge-user holdout evaluation against the full unobserved negative set.
EvalReport evaluate_model(const Scorer& scorer, const InteractionTable& table,
                          const SplitSpec& split, int recall_k,
                          EvalPartition partition = EvalPartition::Test);

/// Two-sided paired t-test; throws DegenerateInput when the differences have
/// zero variance.
std::pair<double, double> paired_ttest(const std::vector<double>& a,
                                       const std::vector<double>& b);

}  // namespace nscr
