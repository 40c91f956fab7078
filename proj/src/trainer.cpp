#include "nscr/trainer.hpp"

#include <cmath>

namespace nscr {

namespace {

constexpr int kRejectionCap = 100;

int sample_negative(const InteractionTable& table, int user, Rng& rng) {
  std::uniform_int_distribution<int> item_dist(0, table.num_items() - 1);
  for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
    int j = item_dist(rng);
    if (!table.observed(user, j)) return j;
  }
  // Dense user: scan for the unobserved items and pick one uniformly.
  std::vector<int> candidates;
  for (int j = 0; j < table.num_items(); ++j)
    if (!table.observed(user, j)) candidates.push_back(j);
  if (candidates.empty()) throw ExhaustedNegatives(user);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

}  // namespace

std::vector<Triplet> sample_batch(const InteractionTable& table,
                                  const SplitSpec& split, int batch_size, Rng& rng) {
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (split.train_rows.empty()) throw DataError("empty training set");
  std::uniform_int_distribution<std::size_t> row_dist(0, split.train_rows.size() - 1);
  std::vector<Triplet> batch;
  batch.reserve(batch_size);
  for (int b = 0; b < batch_size; ++b) {
    const auto& row = table.rows()[split.train_rows[row_dist(rng)]];
    batch.push_back({row.user, row.item, sample_negative(table, row.user, rng)});
  }
  return batch;
}

double train_epoch(ModelParameters& params, const InteractionTable& table,
                   const AttributeCatalog& catalog, const SplitSpec& split,
                   const HyperParams& hp, Rng& rng) {
  const int num_batches = static_cast<int>(
      std::ceil(static_cast<double>(split.train_rows.size()) / hp.batch_size));
  double loss_sum = 0.0;
  std::int64_t triplet_count = 0;

  for (int b = 0; b < num_batches; ++b) {
    auto batch = sample_batch(table, split, hp.batch_size, rng);
    GradientSet grads = GradientSet::zeros_like(params);
    for (const auto& t : batch) {
      ForwardTrace pos = forward(params, t.user, t.pos_item, catalog, Mode::Train,
                                 hp.dropout_ratio, &rng);
      ForwardTrace neg = forward(params, t.user, t.neg_item, catalog, Mode::Train,
                                 hp.dropout_ratio, &rng);
      const double margin = pos.prediction - neg.prediction - 1.0;
      loss_sum += margin * margin;
      backward(pos, params, catalog, 2.0 * margin, grads);
      backward(neg, params, catalog, -2.0 * margin, grads);
    }
    grads.scale(1.0 / batch.size());
    adagrad_step(params, grads, hp.learning_rate);
    triplet_count += static_cast<std::int64_t>(batch.size());
  }

  const double mean_loss = loss_sum / static_cast<double>(triplet_count);
  if (!std::isfinite(mean_loss) || !params.all_finite())
    throw NumericFailure("non-finite loss or parameters during train_epoch");
  return mean_loss;
}

}  // namespace nscr
