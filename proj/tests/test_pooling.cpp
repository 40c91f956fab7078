#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nscr/model.hpp"

#include <algorithm>
#include <cmath>

using namespace nscr;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Quadratic-time double sum, the reference for the fast reformulation.
Vector pool_oracle(const Vector& id, const std::vector<Vector>& attrs) {
  if (attrs.empty()) return id;
  Vector out = Vector::Zero(id.size());
  for (const auto& g : attrs) out.array() += id.array() * g.array();
  for (std::size_t t = 0; t < attrs.size(); ++t)
    for (std::size_t u = t + 1; u < attrs.size(); ++u)
      out.array() += attrs[t].array() * attrs[u].array();
  return out;
}

}  // namespace

TEST_CASE("pairwise pool examples") {
  CHECK(pairwise_pool(vec({1, 2}), {vec({3, 4})}).isApprox(vec({3, 8})));
  CHECK(pairwise_pool(vec({1, 1}), {vec({2, 0}), vec({0, 3})}).isApprox(vec({2, 3})));
  CHECK(pairwise_pool(vec({5, -1}), {}).isApprox(vec({5, -1})));
}

TEST_CASE("pairwise pool rejects mismatched lengths") {
  CHECK_THROWS_AS(pairwise_pool(vec({1, 2}), {vec({1, 2, 3})}), DimensionMismatch);
}

TEST_CASE("fast form equals the double-sum oracle on random cases") {
  Rng rng(2024);
  std::uniform_int_distribution<int> kd(1, 16), vd(0, 8);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = kd(rng);
    const int v = vd(rng);
    Vector id(k);
    for (int j = 0; j < k; ++j) id[j] = nd(rng);
    std::vector<Vector> attrs;
    for (int t = 0; t < v; ++t) {
      Vector g(k);
      for (int j = 0; j < k; ++j) g[j] = nd(rng);
      attrs.push_back(g);
    }
    Vector fast = pairwise_pool(id, attrs);
    Vector slow = pool_oracle(id, attrs);
    const double scale = std::max(1.0, slow.cwiseAbs().maxCoeff());
    CHECK((fast - slow).cwiseAbs().maxCoeff() / scale < 1e-10);
  }
}

TEST_CASE("permutation invariance of the attribute set") {
  Rng rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  const int k = 6;
  Vector id(k);
  for (int j = 0; j < k; ++j) id[j] = nd(rng);
  std::vector<Vector> attrs;
  for (int t = 0; t < 5; ++t) {
    Vector g(k);
    for (int j = 0; j < k; ++j) g[j] = nd(rng);
    attrs.push_back(g);
  }
  Vector base = pairwise_pool(id, attrs);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(attrs.begin(), attrs.end(), rng);
    CHECK(pairwise_pool(id, attrs).isApprox(base, 1e-12));
  }
}

TEST_CASE("scaling attributes scales the two terms linearly and quadratically") {
  // With a zero id vector only the attribute-attribute term survives; it must
  // scale with c^2. With nonzero id, subtracting the c^2-scaled pure term
  // leaves the id-attribute part, which must scale with c.
  Vector id = vec({1.0, -2.0, 0.5});
  std::vector<Vector> attrs{vec({0.3, 1.1, -0.7}), vec({-1.2, 0.4, 0.9}),
                            vec({0.8, -0.5, 0.2})};
  const double c = 3.0;
  std::vector<Vector> scaled;
  for (const auto& g : attrs) scaled.push_back(c * g);

  Vector zero = Vector::Zero(3);
  Vector attr_term = pairwise_pool(zero, attrs) - zero;  // pure attribute part
  Vector attr_term_scaled = pairwise_pool(zero, scaled);
  CHECK(attr_term_scaled.isApprox((c * c) * attr_term, 1e-12));

  Vector id_term = pairwise_pool(id, attrs) - attr_term;
  Vector id_term_scaled = pairwise_pool(id, scaled) - attr_term_scaled;
  CHECK(id_term_scaled.isApprox(c * id_term, 1e-12));
}

TEST_CASE("forward examples on the L=0 path") {
  HyperParams hp;
  hp.embedding_size = 2;
  hp.num_hidden_layers = 0;
  hp.dropout_ratio = 0.0;
  AttributeCatalog catalog;
  catalog.num_attributes = 1;
  catalog.user_attrs = {{}};
  catalog.item_attrs = {{}};

  ModelParameters p = ModelParameters::init(1, 1, 1, hp);
  p.pred_w = vec({1, 1});

  SUBCASE("orthogonal embeddings score zero") {
    p.user_emb.row(0) = vec({1, 0}).transpose();
    p.item_emb.row(0) = vec({0, 1}).transpose();
    auto t = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
    CHECK(t.prediction == doctest::Approx(0.0));
    CHECK(t.merged.isApprox(vec({0, 0})));
  }
  SUBCASE("reduces to the inner product") {
    p.user_emb.row(0) = vec({2, 3}).transpose();
    p.item_emb.row(0) = vec({1, 1}).transpose();
    auto t = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
    CHECK(t.prediction == doctest::Approx(5.0));
  }
}

TEST_CASE("rho=0 makes train and eval forward identical") {
  HyperParams hp;
  hp.embedding_size = 4;
  hp.num_hidden_layers = 2;
  hp.seed = 11;
  AttributeCatalog catalog;
  catalog.num_attributes = 3;
  catalog.user_attrs = {{0, 2}};
  catalog.item_attrs = {{1}};
  ModelParameters p = ModelParameters::init(1, 1, 3, hp);
  Rng rng(3);
  auto train_trace = forward(p, 0, 0, catalog, Mode::Train, 0.0, &rng);
  auto eval_trace = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
  CHECK(train_trace.prediction == eval_trace.prediction);
}

TEST_CASE("train-mode forward is deterministic given the seed") {
  HyperParams hp;
  hp.embedding_size = 8;
  hp.num_hidden_layers = 2;
  hp.seed = 77;
  AttributeCatalog catalog;
  catalog.num_attributes = 2;
  catalog.user_attrs = {{0}};
  catalog.item_attrs = {{1}};
  ModelParameters p = ModelParameters::init(1, 1, 2, hp);
  Rng r1(123), r2(123);
  auto t1 = forward(p, 0, 0, catalog, Mode::Train, 0.4, &r1);
  auto t2 = forward(p, 0, 0, catalog, Mode::Train, 0.4, &r2);
  CHECK(t1.prediction == t2.prediction);
  CHECK(t1.user_mask.isApprox(t2.user_mask));
  CHECK(t1.item_mask.isApprox(t2.item_mask));
}

TEST_CASE("adagrad step examples") {
  HyperParams hp;
  hp.embedding_size = 1;
  hp.num_hidden_layers = 0;
  ModelParameters p = ModelParameters::init(1, 1, 1, hp);
  p.pred_w[0] = 1.0;

  GradientSet g = GradientSet::zeros_like(p);
  g.pred_w[0] = 1.0;
  adagrad_step(p, g, 0.1);
  // First step: acc = 1, update = 0.1 / (1 + 1e-8).
  CHECK(p.pred_w[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));

  const double before = p.pred_w[0];
  adagrad_step(p, g, 0.1);
  // Second identical step shrinks by 1/sqrt(2).
  CHECK(before - p.pred_w[0] ==
        doctest::Approx(0.1 / (std::sqrt(2.0) + 1e-8)).epsilon(1e-9));

  GradientSet zero = GradientSet::zeros_like(p);
  const double unchanged = p.pred_w[0];
  adagrad_step(p, zero, 0.1);
  CHECK(p.pred_w[0] == unchanged);
}
