#include "nscr/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace nscr {

double user_auc(const std::vector<double>& pos_scores,
                const std::vector<double>& neg_scores) {
  if (pos_scores.empty() || neg_scores.empty())
    throw EmptySide("user_auc requires nonempty positive and negative scores");
  std::int64_t wins = 0;
  for (double p : pos_scores)
    for (double n : neg_scores)
      if (p > n) ++wins;
  return static_cast<double>(wins) /
         (static_cast<double>(pos_scores.size()) * neg_scores.size());
}

double user_recall_at_k(const std::vector<int>& ranked_items,
                        const std::vector<int>& relevant, int k) {
  if (relevant.empty()) throw EmptyRelevant("recall requires a nonempty relevant set");
  if (k < 1) throw DataError("recall K must be >= 1");
  std::unordered_set<int> relevant_set(relevant.begin(), relevant.end());
  const int top = std::min<int>(k, static_cast<int>(ranked_items.size()));
  int hits = 0;
  for (int r = 0; r < top; ++r)
    if (relevant_set.count(ranked_items[r])) ++hits;
  return static_cast<double>(hits) / relevant_set.size();
}

std::vector<int> rank_items(const Scorer& scorer, int user,
                            const std::vector<int>& candidates) {
  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidates.size());
  for (int item : candidates) scored.emplace_back(scorer(user, item), item);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(scored.size());
  for (const auto& [score, item] : scored) out.push_back(item);
  return out;
}

EvalReport evaluate_ranking(const Scorer& scorer, const std::vector<int>& users,
                            const std::vector<std::vector<int>>& positives,
                            const std::vector<std::vector<int>>& excluded,
                            int num_items, int recall_k) {
  EvalReport report;
  report.recall_k = recall_k;
  for (std::size_t idx = 0; idx < users.size(); ++idx) {
    if (positives[idx].empty()) {
      ++report.skipped_users;
      continue;
    }
    const int user = users[idx];
    std::unordered_set<int> skip(excluded[idx].begin(), excluded[idx].end());

    std::vector<double> pos_scores;
    for (int item : positives[idx]) pos_scores.push_back(scorer(user, item));

    std::vector<double> neg_scores;
    std::vector<int> pool(positives[idx]);
    for (int item = 0; item < num_items; ++item) {
      if (skip.count(item)) continue;
      neg_scores.push_back(scorer(user, item));
      pool.push_back(item);
    }
    if (neg_scores.empty()) throw EmptySide("no negative candidates for user");

    UserMetrics m;
    m.user = user;
    m.auc = user_auc(pos_scores, neg_scores);
    m.recall_at_k = user_recall_at_k(rank_items(scorer, user, pool),
                                     positives[idx], recall_k);
    report.per_user.push_back(m);
  }
  if (report.per_user.empty()) throw NoTestUsers("no users with a nonempty test set");
  for (const auto& m : report.per_user) {
    report.mean_auc += m.auc;
    report.mean_recall += m.recall_at_k;
  }
  report.mean_auc /= report.per_user.size();
  report.mean_recall /= report.per_user.size();
  return report;
}

EvalReport evaluate_model(const Scorer& scorer, const InteractionTable& table,
                          const SplitSpec& split, int recall_k,
                          EvalPartition partition) {
  std::vector<int> users;
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> excluded;
  for (const auto& [user, us] : split.bridge) {
    users.push_back(user);
    const auto& rows = partition == EvalPartition::Test ? us.test : us.validation;
    std::vector<int> pos;
    for (int r : rows) pos.push_back(table.rows()[r].item);
    positives.push_back(std::move(pos));

    // Exclude every observed interaction of the user (train, val, and test);
    // the positives re-enter the ranking pool explicitly.
    std::vector<int> skip;
    for (int r : table.user_rows(user)) skip.push_back(table.rows()[r].item);
    excluded.push_back(std::move(skip));
  }
  EvalReport report = evaluate_ranking(scorer, users, positives, excluded,
                                       table.num_items(), recall_k);
  report.seed = split.seed;
  return report;
}

std::pair<double, double> paired_ttest(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw DegenerateInput("paired t-test needs equal-length samples of size >= 2");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var == 0.0) throw DegenerateInput("zero variance of paired differences");

  const double t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t dist(static_cast<double>(n - 1));
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return {t, p};
}

}  // namespace nscr
