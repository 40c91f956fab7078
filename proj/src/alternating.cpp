#include "nscr/alternating.hpp"

namespace nscr {

void TrainConfig::validate() const {
  hp.validate();
  if (outer_iterations < 1) throw DataError("outer_iterations must be >= 1");
  if (inner_epochs_per_iteration < 0)
    throw DataError("inner_epochs_per_iteration must be >= 0");
  if (early_stop_patience < 1) throw DataError("early_stop_patience must be >= 1");
}

Scorer make_info_scorer(const ModelParameters& params,
                        const AttributeCatalog& catalog) {
  return [&params, &catalog](int user, int item) {
    return forward(params, user, item, catalog, Mode::Eval, 0.0, nullptr).prediction;
  };
}

double predict_social(const ModelParameters& params, const Matrix& social_embeddings,
                      int social_user, int item, const AttributeCatalog& catalog) {
  if (social_user < 0 || social_user >= social_embeddings.rows())
    throw IndexOutOfRange("social user index");
  if (item < 0 || item >= params.item_emb.rows())
    throw IndexOutOfRange("item index");

  Vector pooled_item, attr_sum;
  pool_channel(params.item_emb.row(item).transpose(), params.attr_emb,
               catalog.item_attrs[item], pooled_item, attr_sum);
  Vector vec = (social_embeddings.row(social_user).transpose().array() *
                pooled_item.array())
                   .matrix();
  for (int l = 0; l < params.num_hidden_layers(); ++l)
    vec = (params.hidden_w[l] * vec + params.hidden_b[l]).cwiseMax(0.0);
  return params.pred_w.dot(vec);
}

FitResult fit(const DataBundle& bundle, const SplitSpec& split,
              const TrainConfig& config) {
  config.validate();
  if (bundle.graph.bridge_map().empty())
    throw DataError("fit requires at least one bridge user");

  const int k = config.hp.embedding_size;
  const int m2 = bundle.graph.num_social_users();

  ModelParameters params =
      ModelParameters::init(bundle.interactions.num_users(),
                            bundle.interactions.num_items(),
                            bundle.catalog.num_attributes, config.hp);
  Rng rng(config.hp.seed);

  // Social embeddings start as a random tensor like everything else; with
  // propagation disabled they are never touched again.
  Matrix social_p(m2, k);
  {
    std::normal_distribution<double> dist(0.0, config.hp.init_std);
    Rng social_rng(config.hp.seed ^ 0xb5ad4eceda1ce2a9ull);
    for (int r = 0; r < m2; ++r)
      for (int c = 0; c < k; ++c) social_p(r, c) = dist(social_rng);
  }
  Matrix prev_p = Matrix::Zero(m2, k);  // non-bridge anchor rows, zero at round 0

  FitResult result;
  result.params = params;
  result.social_embeddings = social_p;

  double best_val_auc = -1.0;
  int since_best = 0;
  const std::vector<int> bridge_social = bundle.graph.bridge_social_users();

  for (int iter = 1; iter <= config.outer_iterations; ++iter) {
    IterationRecord record;
    record.iteration = iter;

    double loss_sum = 0.0;
    for (int e = 0; e < config.inner_epochs_per_iteration; ++e)
      loss_sum += train_epoch(params, bundle.interactions, bundle.catalog, split,
                              config.hp, rng);
    record.loss = config.inner_epochs_per_iteration > 0
                      ? loss_sum / config.inner_epochs_per_iteration
                      : 0.0;

    if (config.social_propagation) {
      // Anchor: bridge rows carry the freshly trained ID embeddings,
      // non-bridge rows the previous round's propagated values.
      Matrix anchor = prev_p;
      for (const auto& [social, info] : bundle.graph.bridge_map())
        anchor.row(social) = params.user_emb.row(info);

      PropagationProblem problem;
      problem.graph = &bundle.graph;
      problem.anchor = std::move(anchor);
      problem.mu = config.hp.tradeoff_mu;
      problem.solver = config.solver;
      problem.tolerance = config.propagation_tolerance;
      problem.max_iterations = config.propagation_max_iterations;
      social_p = propagate(problem);

      auto [smoothness, fitting] =
          social_objective(bundle.graph, social_p, problem.anchor, bridge_social);
      record.smoothness = smoothness;
      record.fitting = fitting;

      // Bridge rows of P re-enter the information domain as the next
      // initialization of those users' ID embeddings.
      for (const auto& [social, info] : bundle.graph.bridge_map())
        params.user_emb.row(info) = social_p.row(social);
      prev_p = social_p;
    }

    EvalReport val = evaluate_model(make_info_scorer(params, bundle.catalog),
                                    bundle.interactions, split, 5,
                                    EvalPartition::Validation);
    record.val_auc = val.mean_auc;
    result.history.push_back(record);

    if (record.val_auc > best_val_auc) {
      best_val_auc = record.val_auc;
      result.params = params;
      result.social_embeddings = social_p;
      result.best_iteration = iter;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace nscr
