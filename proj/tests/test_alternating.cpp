#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nscr/alternating.hpp"
#include "nscr/synth.hpp"

#include <algorithm>

using namespace nscr;

namespace {

// Eight information users (0-3 bridged), ten items, six social users on a
// ring, no attributes.
DataBundle plain_bundle() {
  std::vector<Interaction> rows;
  std::int64_t ts = 0;
  for (int u = 0; u < 8; ++u)
    for (int j = 0; j < 6; ++j) rows.push_back({u, (u + j) % 10, ts++});
  InteractionTable table(8, 10, std::move(rows));

  AttributeCatalog catalog;
  catalog.num_attributes = 1;
  catalog.user_attrs.assign(8, {});
  catalog.item_attrs.assign(10, {});

  std::vector<Eigen::Triplet<double>> edges;
  for (int v = 0; v < 6; ++v) edges.emplace_back(v, (v + 1) % 6, 1.0);
  SocialGraph graph(6, edges, {{0, 0}, {1, 1}, {2, 2}, {3, 3}});

  DataBundle bundle{std::move(table), std::move(catalog), std::move(graph)};
  for (int u = 0; u < 8; ++u) bundle.user_ids.push_back("u" + std::to_string(u));
  for (int i = 0; i < 10; ++i) bundle.item_ids.push_back("i" + std::to_string(i));
  for (int s = 0; s < 6; ++s) bundle.social_ids.push_back("s" + std::to_string(s));
  bundle.attr_ids = {"a0"};
  return bundle;
}

TrainConfig small_config() {
  TrainConfig config;
  config.hp.embedding_size = 4;
  config.hp.num_hidden_layers = 1;
  config.hp.dropout_ratio = 0.0;
  config.hp.batch_size = 16;
  config.hp.seed = 33;
  config.outer_iterations = 6;
  config.early_stop_patience = 3;
  return config;
}

}  // namespace

TEST_CASE("config validation") {
  TrainConfig config = small_config();
  config.outer_iterations = 0;
  CHECK_THROWS_AS(config.validate(), DataError);
  config = small_config();
  config.inner_epochs_per_iteration = -1;
  CHECK_THROWS_AS(config.validate(), DataError);
  config = small_config();
  config.early_stop_patience = 0;
  CHECK_THROWS_AS(config.validate(), DataError);
}

TEST_CASE("fit requires bridge users") {
  DataBundle bundle = plain_bundle();
  std::vector<Eigen::Triplet<double>> edges{{0, 1, 1.0}};
  DataBundle no_bridge{bundle.interactions, bundle.catalog,
                       SocialGraph(6, edges, {})};
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  CHECK_THROWS_AS(fit(no_bridge, split, small_config()), DataError);
}

TEST_CASE("degenerate schedule with no inner epochs leaves the model at init") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  TrainConfig config = small_config();
  config.inner_epochs_per_iteration = 0;
  config.social_propagation = false;

  FitResult result = fit(bundle, split, config);
  ModelParameters init = ModelParameters::init(8, 10, 1, config.hp);
  CHECK(result.params.user_emb.isApprox(init.user_emb, 0.0));
  CHECK(result.params.item_emb.isApprox(init.item_emb, 0.0));
  CHECK(result.params.pred_w.isApprox(init.pred_w, 0.0));
  for (const auto& rec : result.history) {
    CHECK(rec.loss == 0.0);
    CHECK(rec.smoothness == 0.0);
    CHECK(rec.fitting == 0.0);
  }
  // Identical validation AUC every round: early stopping fires after the
  // patience window.
  CHECK(result.best_iteration == 1);
  CHECK(result.history.size() == 1 + config.early_stop_patience);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  TrainConfig config = small_config();

  FitResult a = fit(bundle, split, config);
  FitResult b = fit(bundle, split, config);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].val_auc == b.history[i].val_auc);
    CHECK(a.history[i].smoothness == b.history[i].smoothness);
  }
  CHECK(a.best_iteration == b.best_iteration);
  CHECK(a.params.user_emb.isApprox(b.params.user_emb, 0.0));
  CHECK(a.social_embeddings.isApprox(b.social_embeddings, 0.0));
}

TEST_CASE("bridge rows are written back into the information domain") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  FitResult result = fit(bundle, split, small_config());
  for (const auto& [social, info] : bundle.graph.bridge_map())
    CHECK(result.params.user_emb.row(info).isApprox(
        result.social_embeddings.row(social), 0.0));
}

TEST_CASE("the snapshot is the argmax of validation AUC") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  FitResult result = fit(bundle, split, small_config());
  double best = -1.0;
  int best_iter = 0;
  for (const auto& rec : result.history) {
    if (rec.val_auc > best) {
      best = rec.val_auc;
      best_iter = rec.iteration;
    }
  }
  CHECK(result.best_iteration == best_iter);
}

TEST_CASE("disabled propagation leaves the social embeddings at their init") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  TrainConfig off = small_config();
  off.social_propagation = false;
  TrainConfig off_longer = off;
  off_longer.inner_epochs_per_iteration = 2;

  FitResult a = fit(bundle, split, off);
  FitResult b = fit(bundle, split, off_longer);
  // Training differs, but the untouched social tensor is identical.
  CHECK(a.social_embeddings.isApprox(b.social_embeddings, 0.0));
  // And with propagation enabled it is not the same tensor.
  FitResult c = fit(bundle, split, small_config());
  CHECK(!c.social_embeddings.isApprox(a.social_embeddings, 1e-12));
}

TEST_CASE("propagated rows keep a small fixed-point residual") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  TrainConfig config = small_config();
  config.outer_iterations = 1;
  config.early_stop_patience = 1;
  config.inner_epochs_per_iteration = 0;  // keeps the anchor reconstructible
  FitResult result = fit(bundle, split, config);

  // Reconstruct the anchor of the single round: bridge rows carry the
  // untrained initial embeddings, non-bridge rows were zero.
  ModelParameters init = ModelParameters::init(8, 10, 1, config.hp);
  Matrix anchor = Matrix::Zero(6, config.hp.embedding_size);
  for (const auto& [social, info] : bundle.graph.bridge_map())
    anchor.row(social) = init.user_emb.row(info);
  CHECK(propagation_residual(bundle.graph, result.social_embeddings, anchor,
                             config.hp.tradeoff_mu) < 1e-6);
}

TEST_CASE("predict_social matches the information-domain scorer for bridge users") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  FitResult result = fit(bundle, split, small_config());
  Scorer scorer = make_info_scorer(result.params, bundle.catalog);
  // With no user attributes the pooled user vector is the raw embedding row,
  // which equals the written-back propagated row.
  for (const auto& [social, info] : bundle.graph.bridge_map())
    for (int item = 0; item < 10; ++item)
      CHECK(predict_social(result.params, result.social_embeddings, social, item,
                           bundle.catalog) ==
            doctest::Approx(scorer(info, item)).epsilon(1e-12));
}

TEST_CASE("predict_social bounds checking") {
  DataBundle bundle = plain_bundle();
  SplitSpec split = build_split(bundle.interactions, {0, 1, 2, 3}, 13);
  TrainConfig config = small_config();
  config.outer_iterations = 1;
  config.early_stop_patience = 1;
  FitResult result = fit(bundle, split, config);
  CHECK_THROWS_AS(predict_social(result.params, result.social_embeddings, 6, 0,
                                 bundle.catalog),
                  IndexOutOfRange);
  CHECK_THROWS_AS(predict_social(result.params, result.social_embeddings, 0, 10,
                                 bundle.catalog),
                  IndexOutOfRange);
}

TEST_CASE("training on synthetic data improves validation AUC") {
  SyntheticSpec spec;
  spec.num_info_users = 60;
  spec.num_items = 40;
  spec.num_social_users = 80;
  spec.num_bridge_users = 12;
  spec.num_attribute_groups = 4;
  spec.interactions_per_user_mean = 12.0;
  spec.friends_per_user_mean = 5.0;
  spec.seed = 7;
  DataBundle bundle = generate(spec);

  SplitSpec split =
      build_split(bundle.interactions, bundle.graph.bridge_info_users(), 13);
  TrainConfig config;
  config.hp.embedding_size = 8;
  config.hp.num_hidden_layers = 2;
  config.hp.dropout_ratio = 0.1;
  config.hp.batch_size = 64;
  config.hp.seed = 42;
  config.outer_iterations = 15;
  config.early_stop_patience = 15;
  FitResult result = fit(bundle, split, config);

  const double first = result.history.front().val_auc;
  double best = 0.0;
  for (const auto& rec : result.history) best = std::max(best, rec.val_auc);
  CHECK(best > first);
  CHECK(best > 0.6);
}
