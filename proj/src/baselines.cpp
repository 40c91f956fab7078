#include "nscr/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace nscr {

namespace {

constexpr double kAdagradEps = 1e-8;

Matrix gaussian_matrix(int rows, int cols, double std, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

void adagrad_row(Matrix& theta, Matrix& acc, int row, const Vector& g, double lr) {
  acc.row(row).array() += g.array().square().transpose();
  theta.row(row).array() -=
      lr * g.array().transpose() / (acc.row(row).array().sqrt() + kAdagradEps);
}

}  // namespace

std::vector<double> itempop_counts(const InteractionTable& table,
                                   const SplitSpec& split) {
  std::vector<double> counts(table.num_items(), 0.0);
  for (int r : split.train_rows) counts[table.rows()[r].item] += 1.0;
  return counts;
}

MfParameters MfParameters::init(int num_users, int num_items, const HyperParams& hp) {
  hp.validate();
  Rng rng(hp.seed);
  MfParameters p;
  p.user_vecs = gaussian_matrix(num_users, hp.embedding_size, hp.init_std, rng);
  p.item_vecs = gaussian_matrix(num_items, hp.embedding_size, hp.init_std, rng);
  p.user_acc = Matrix::Zero(num_users, hp.embedding_size);
  p.item_acc = Matrix::Zero(num_items, hp.embedding_size);
  return p;
}

double mf_train_epoch(MfParameters& params, const InteractionTable& table,
                      const SplitSpec& split, const HyperParams& hp, Rng& rng) {
  const int num_batches = static_cast<int>(
      std::ceil(static_cast<double>(split.train_rows.size()) / hp.batch_size));
  double loss_sum = 0.0;
  std::int64_t count = 0;

  for (int b = 0; b < num_batches; ++b) {
    auto batch = sample_batch(table, split, hp.batch_size, rng);
    std::map<int, Vector> user_grads, item_grads;
    for (const auto& t : batch) {
      const Vector pu = params.user_vecs.row(t.user).transpose();
      const Vector qi = params.item_vecs.row(t.pos_item).transpose();
      const Vector qj = params.item_vecs.row(t.neg_item).transpose();
      const double margin = pu.dot(qi) - pu.dot(qj) - 1.0;
      loss_sum += margin * margin;
      const double coeff = 2.0 * margin;

      auto add = [](std::map<int, Vector>& grads, int row, const Vector& g) {
        auto [it, inserted] = grads.try_emplace(row, g);
        if (!inserted) it->second += g;
      };
      add(user_grads, t.user, (coeff * (qi - qj)).eval());
      add(item_grads, t.pos_item, (coeff * pu).eval());
      add(item_grads, t.neg_item, (-coeff * pu).eval());
    }
    const double inv = 1.0 / batch.size();
    for (auto& [row, g] : user_grads)
      adagrad_row(params.user_vecs, params.user_acc, row, (g * inv).eval(),
                  hp.learning_rate);
    for (auto& [row, g] : item_grads)
      adagrad_row(params.item_vecs, params.item_acc, row, (g * inv).eval(),
                  hp.learning_rate);
    count += static_cast<std::int64_t>(batch.size());
  }
  return loss_sum / static_cast<double>(count);
}

FmParameters FmParameters::init(const DataBundle& bundle, const HyperParams& hp) {
  hp.validate();
  FmParameters p;
  p.num_users = bundle.interactions.num_users();
  p.num_items = bundle.interactions.num_items();
  p.num_attributes = bundle.catalog.num_attributes;
  p.num_social = bundle.graph.num_social_users();
  const int features = p.num_users + p.num_items + p.num_attributes + p.num_social;
  Rng rng(hp.seed);
  p.linear = gaussian_matrix(features, 1, hp.init_std, rng).col(0);
  p.factors = gaussian_matrix(features, hp.embedding_size, hp.init_std, rng);
  p.linear_acc = Vector::Zero(features);
  p.factors_acc = Matrix::Zero(features, hp.embedding_size);
  return p;
}

std::vector<FmFeature> sfm_features(const FmParameters& fm, const DataBundle& bundle,
                                    int user, int item, bool use_attributes,
                                    bool use_friends) {
  std::vector<FmFeature> features;
  features.push_back({fm.user_feature(user), 1.0});
  features.push_back({fm.item_feature(item), 1.0});
  if (use_attributes) {
    const auto& ua = bundle.catalog.user_attrs[user];
    for (int a : ua) features.push_back({fm.attr_feature(a), 1.0 / ua.size()});
    const auto& ia = bundle.catalog.item_attrs[item];
    for (int a : ia) features.push_back({fm.attr_feature(a), 1.0 / ia.size()});
  }
  if (use_friends) {
    const int social = bundle.graph.social_index_of(user);
    if (social >= 0) {
      std::vector<int> friends;
      for (SparseMatrix::InnerIterator it(bundle.graph.adjacency(), social); it; ++it)
        friends.push_back(static_cast<int>(it.row()));
      for (int f : friends)
        features.push_back({fm.friend_feature(f), 1.0 / friends.size()});
    }
  }
  return features;
}

double sfm_predict(const FmParameters& fm, const std::vector<FmFeature>& features) {
  double score = fm.bias;
  Vector sum = Vector::Zero(fm.factors.cols());
  double sq_sum = 0.0;
  for (const auto& f : features) {
    if (f.index < 0 || f.index >= fm.factors.rows())
      throw IndexOutOfRange("unknown feature index");
    score += fm.linear[f.index] * f.value;
    const Vector scaled = f.value * fm.factors.row(f.index).transpose();
    sum += scaled;
    sq_sum += scaled.squaredNorm();
  }
  score += 0.5 * (sum.squaredNorm() - sq_sum);
  return score;
}

double sfm_train_epoch(FmParameters& params, const DataBundle& bundle,
                       const SplitSpec& split, const HyperParams& hp,
                       bool use_attributes, Rng& rng) {
  const auto& table = bundle.interactions;
  const int num_batches = static_cast<int>(
      std::ceil(static_cast<double>(split.train_rows.size()) / hp.batch_size));
  double loss_sum = 0.0;
  std::int64_t count = 0;

  for (int b = 0; b < num_batches; ++b) {
    auto batch = sample_batch(table, split, hp.batch_size, rng);
    double bias_grad = 0.0;
    std::map<int, double> linear_grads;
    std::map<int, Vector> factor_grads;

    auto accumulate = [&](const std::vector<FmFeature>& features, double coeff) {
      bias_grad += coeff;
      Vector sum = Vector::Zero(params.factors.cols());
      for (const auto& f : features)
        sum += f.value * params.factors.row(f.index).transpose();
      for (const auto& f : features) {
        linear_grads[f.index] += coeff * f.value;
        Vector g = coeff * f.value *
                   (sum - f.value * params.factors.row(f.index).transpose());
        auto [it, inserted] = factor_grads.try_emplace(f.index, g);
        if (!inserted) it->second += g;
      }
    };

    for (const auto& t : batch) {
      auto pos = sfm_features(params, bundle, t.user, t.pos_item, use_attributes, true);
      auto neg = sfm_features(params, bundle, t.user, t.neg_item, use_attributes, true);
      const double margin = sfm_predict(params, pos) - sfm_predict(params, neg) - 1.0;
      loss_sum += margin * margin;
      accumulate(pos, 2.0 * margin);
      accumulate(neg, -2.0 * margin);
    }

    const double inv = 1.0 / batch.size();
    bias_grad *= inv;
    params.bias_acc += bias_grad * bias_grad;
    params.bias -= hp.learning_rate * bias_grad / (std::sqrt(params.bias_acc) + kAdagradEps);
    for (auto& [idx, g] : linear_grads) {
      const double grad = g * inv;
      params.linear_acc[idx] += grad * grad;
      params.linear[idx] -=
          hp.learning_rate * grad / (std::sqrt(params.linear_acc[idx]) + kAdagradEps);
    }
    for (auto& [idx, g] : factor_grads)
      adagrad_row(params.factors, params.factors_acc, idx, (g * inv).eval(),
                  hp.learning_rate);
    count += static_cast<std::int64_t>(batch.size());
  }
  return loss_sum / static_cast<double>(count);
}

double sr_similarity(const std::vector<int>& attrs_a, const std::vector<int>& attrs_b,
                     bool use_attributes, double floor_eps) {
  if (!use_attributes) return 1.0;
  std::vector<int> inter;
  std::set_intersection(attrs_a.begin(), attrs_a.end(), attrs_b.begin(),
                        attrs_b.end(), std::back_inserter(inter));
  const std::size_t uni = attrs_a.size() + attrs_b.size() - inter.size();
  const double jaccard = uni == 0 ? 0.0 : static_cast<double>(inter.size()) / uni;
  return std::max(jaccard, floor_eps);
}

double sr_train_epoch(MfParameters& params, const DataBundle& bundle,
                      const SplitSpec& split, const HyperParams& hp,
                      const SrOptions& options, Rng& rng) {
  const double loss =
      mf_train_epoch(params, bundle.interactions, split, hp, rng);
  if (options.beta == 0.0) return loss;

  // Friend pairs where both endpoints are bridge users, pulled together with
  // attribute-overlap weights; no degree normalization.
  std::map<int, Vector> reg_grads;
  const auto& bridge = bundle.graph.bridge_map();
  for (const auto& [social_a, info_a] : bridge) {
    for (SparseMatrix::InnerIterator it(bundle.graph.adjacency(), social_a); it;
         ++it) {
      const int social_b = static_cast<int>(it.row());
      if (social_b <= social_a) continue;
      auto found = bridge.find(social_b);
      if (found == bridge.end()) continue;
      const int info_b = found->second;
      const double sim =
          sr_similarity(bundle.catalog.user_attrs[info_a],
                        bundle.catalog.user_attrs[info_b], options.use_attributes);
      Vector diff = (params.user_vecs.row(info_a) - params.user_vecs.row(info_b))
                        .transpose();
      Vector g = 2.0 * options.beta * sim * diff;
      auto add = [&reg_grads](int row, const Vector& v) {
        auto [itg, inserted] = reg_grads.try_emplace(row, v);
        if (!inserted) itg->second += v;
      };
      add(info_a, g);
      add(info_b, (-g).eval());
    }
  }
  for (auto& [row, g] : reg_grads)
    adagrad_row(params.user_vecs, params.user_acc, row, g, hp.learning_rate);
  return loss;
}

}  // namespace nscr
