#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nscr/model.hpp"

#include <cmath>
#include <functional>

using namespace nscr;

namespace {

AttributeCatalog small_catalog() {
  AttributeCatalog c;
  c.num_attributes = 4;
  c.user_attrs = {{0, 2}, {1}};
  c.item_attrs = {{1, 3}, {}};
  return c;
}

double eval_prediction(const ModelParameters& p, const AttributeCatalog& catalog,
                       int user, int item) {
  return forward(p, user, item, catalog, Mode::Eval, 0.0, nullptr).prediction;
}

// Central finite difference of the eval-mode prediction with respect to one
// scalar parameter reached through `slot`.
double fd(ModelParameters p, const AttributeCatalog& catalog, int user, int item,
          const std::function<double&(ModelParameters&)>& slot) {
  const double eps = 1e-5;
  const double saved = slot(p);
  slot(p) = saved + eps;
  const double up = eval_prediction(p, catalog, user, item);
  slot(p) = saved - eps;
  const double down = eval_prediction(p, catalog, user, item);
  return (up - down) / (2 * eps);
}

void check_close(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  CHECK(std::abs(analytic - numeric) / scale < 1e-4);
}

}  // namespace

TEST_CASE("closed-form gradients on the L=0 path") {
  HyperParams hp;
  hp.embedding_size = 3;
  hp.num_hidden_layers = 0;
  hp.seed = 9;
  AttributeCatalog catalog;
  catalog.num_attributes = 1;
  catalog.user_attrs = {{}};
  catalog.item_attrs = {{}};
  ModelParameters p = ModelParameters::init(1, 1, 1, hp);
  p.user_emb.row(0) << 1.0, -2.0, 0.5;
  p.item_emb.row(0) << 0.3, 0.7, -1.1;
  p.pred_w << 2.0, -1.0, 0.4;

  auto trace = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
  GradientSet g = backward(trace, p, catalog, 1.0);

  // With no hidden layers and no attributes: y = w . (u . i), so
  // dy/dw = u . i, dy/du = w . i, dy/di = w . u.
  Vector u = p.user_emb.row(0).transpose(), i = p.item_emb.row(0).transpose(),
         w = p.pred_w;
  CHECK(g.pred_w.isApprox(Vector(u.cwiseProduct(i)), 1e-12));
  CHECK(g.user_rows.at(0).isApprox(Vector(w.cwiseProduct(i)), 1e-12));
  CHECK(g.item_rows.at(0).isApprox(Vector(w.cwiseProduct(u)), 1e-12));
}

TEST_CASE("backward matches finite differences through the full network") {
  HyperParams hp;
  hp.embedding_size = 4;
  hp.num_hidden_layers = 2;
  hp.seed = 31;
  AttributeCatalog catalog = small_catalog();
  ModelParameters p = ModelParameters::init(2, 2, 4, hp);
  // Shift biases so ReLU units sit away from the kink where the finite
  // difference would straddle the nondifferentiable point.
  for (auto& b : p.hidden_b) b.array() += 0.3;

  for (int user : {0, 1}) {
    for (int item : {0, 1}) {
      auto trace = forward(p, user, item, catalog, Mode::Eval, 0.0, nullptr);
      GradientSet g = backward(trace, p, catalog, 1.0);

      for (int j = 0; j < hp.embedding_size; ++j) {
        check_close(g.user_rows.at(user)[j],
                    fd(p, catalog, user, item,
                       [&](ModelParameters& m) -> double& { return m.user_emb(user, j); }));
        check_close(g.item_rows.at(item)[j],
                    fd(p, catalog, user, item,
                       [&](ModelParameters& m) -> double& { return m.item_emb(item, j); }));
        check_close(g.pred_w[j],
                    fd(p, catalog, user, item,
                       [&](ModelParameters& m) -> double& { return m.pred_w[j]; }));
      }
      for (int a : catalog.user_attrs[user]) {
        for (int j = 0; j < hp.embedding_size; ++j) {
          check_close(g.attr_rows.at(a)[j],
                      fd(p, catalog, user, item,
                         [&](ModelParameters& m) -> double& { return m.attr_emb(a, j); }));
        }
      }
      for (int l = 0; l < hp.num_hidden_layers; ++l) {
        for (int r = 0; r < hp.embedding_size; ++r) {
          check_close(g.hidden_b[l][r],
                      fd(p, catalog, user, item,
                         [&](ModelParameters& m) -> double& { return m.hidden_b[l][r]; }));
          for (int c = 0; c < hp.embedding_size; ++c) {
            check_close(g.hidden_w[l](r, c),
                        fd(p, catalog, user, item,
                           [&](ModelParameters& m) -> double& { return m.hidden_w[l](r, c); }));
          }
        }
      }
    }
  }
}

TEST_CASE("attribute gradient accumulates when both sides share a vocabulary entry") {
  HyperParams hp;
  hp.embedding_size = 3;
  hp.num_hidden_layers = 1;
  hp.seed = 15;
  AttributeCatalog catalog;
  catalog.num_attributes = 2;
  catalog.user_attrs = {{0, 1}};
  catalog.item_attrs = {{1}};  // attribute 1 appears on both sides
  ModelParameters p = ModelParameters::init(1, 1, 2, hp);
  for (auto& b : p.hidden_b) b.array() += 0.3;

  auto trace = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
  GradientSet g = backward(trace, p, catalog, 1.0);
  for (int j = 0; j < hp.embedding_size; ++j) {
    check_close(g.attr_rows.at(1)[j],
                fd(p, catalog, 0, 0,
                   [&](ModelParameters& m) -> double& { return m.attr_emb(1, j); }));
  }
}

TEST_CASE("upstream coefficient scales every gradient linearly") {
  HyperParams hp;
  hp.embedding_size = 4;
  hp.num_hidden_layers = 2;
  hp.seed = 8;
  AttributeCatalog catalog = small_catalog();
  ModelParameters p = ModelParameters::init(2, 2, 4, hp);
  auto trace = forward(p, 0, 1, catalog, Mode::Eval, 0.0, nullptr);

  GradientSet g1 = backward(trace, p, catalog, 1.0);
  GradientSet g3 = backward(trace, p, catalog, 3.0);
  CHECK(g3.pred_w.isApprox(Vector(3.0 * g1.pred_w), 1e-12));
  CHECK(g3.user_rows.at(0).isApprox(Vector(3.0 * g1.user_rows.at(0)), 1e-12));
  for (int l = 0; l < 2; ++l)
    CHECK(g3.hidden_w[l].isApprox(Matrix(3.0 * g1.hidden_w[l]), 1e-12));
}

TEST_CASE("accumulating backward adds into the existing gradient set") {
  HyperParams hp;
  hp.embedding_size = 3;
  hp.num_hidden_layers = 1;
  hp.seed = 21;
  AttributeCatalog catalog;
  catalog.num_attributes = 1;
  catalog.user_attrs = {{0}, {0}};
  catalog.item_attrs = {{}, {}};
  ModelParameters p = ModelParameters::init(2, 2, 1, hp);

  auto t1 = forward(p, 0, 0, catalog, Mode::Eval, 0.0, nullptr);
  auto t2 = forward(p, 1, 1, catalog, Mode::Eval, 0.0, nullptr);

  GradientSet acc = GradientSet::zeros_like(p);
  backward(t1, p, catalog, 1.0, acc);
  backward(t2, p, catalog, 1.0, acc);

  GradientSet s1 = backward(t1, p, catalog, 1.0);
  GradientSet s2 = backward(t2, p, catalog, 1.0);
  CHECK(acc.pred_w.isApprox(Vector(s1.pred_w + s2.pred_w), 1e-12));
  CHECK(acc.attr_rows.at(0).isApprox(
      Vector(s1.attr_rows.at(0) + s2.attr_rows.at(0)), 1e-12));
  CHECK(acc.user_rows.at(0).isApprox(s1.user_rows.at(0), 1e-12));
  CHECK(acc.user_rows.at(1).isApprox(s2.user_rows.at(1), 1e-12));
}

TEST_CASE("dropout masks are honored exactly in the backward pass") {
  // In train mode the replayed masks must enter the gradient: a zeroed merged
  // coordinate contributes nothing, and surviving ones carry the 1/(1-rho)
  // scale. Verified by finite differences on the fixed trace.
  HyperParams hp;
  hp.embedding_size = 6;
  hp.num_hidden_layers = 2;
  hp.seed = 4;
  AttributeCatalog catalog;
  catalog.num_attributes = 2;
  catalog.user_attrs = {{0}};
  catalog.item_attrs = {{1}};
  ModelParameters p = ModelParameters::init(1, 1, 2, hp);
  for (auto& b : p.hidden_b) b.array() += 0.3;

  Rng rng(99);
  auto trace = forward(p, 0, 0, catalog, Mode::Train, 0.4, &rng);
  GradientSet g = backward(trace, p, catalog, 1.0);

  // Recompute the prediction from a perturbed parameter while replaying the
  // same masks by hand.
  auto replay = [&](const ModelParameters& m) {
    Vector pu, qi, su, si;
    pool_channel(m.user_emb.row(0).transpose(), m.attr_emb, catalog.user_attrs[0], pu, su);
    pool_channel(m.item_emb.row(0).transpose(), m.attr_emb, catalog.item_attrs[0], qi, si);
    Vector x = (pu.cwiseProduct(trace.user_mask)).cwiseProduct(qi.cwiseProduct(trace.item_mask));
    for (int l = 0; l < 2; ++l) {
      Vector z = (m.hidden_w[l] * x + m.hidden_b[l]).cwiseMax(0.0);
      x = z.cwiseProduct(trace.layer_mask[l]);
    }
    return m.pred_w.dot(x);
  };
  CHECK(replay(p) == doctest::Approx(trace.prediction).epsilon(1e-12));

  const double eps = 1e-5;
  for (int j = 0; j < hp.embedding_size; ++j) {
    ModelParameters q = p;
    q.user_emb(0, j) += eps;
    const double up = replay(q);
    q.user_emb(0, j) -= 2 * eps;
    const double down = replay(q);
    check_close(g.user_rows.at(0)[j], (up - down) / (2 * eps));
  }
}

TEST_CASE("adagrad leaves untouched embedding rows alone") {
  HyperParams hp;
  hp.embedding_size = 2;
  hp.num_hidden_layers = 0;
  hp.seed = 3;
  ModelParameters p = ModelParameters::init(3, 3, 1, hp);
  Matrix before_users = p.user_emb;

  GradientSet g = GradientSet::zeros_like(p);
  g.user_rows[1] = Vector::Constant(2, 1.0);
  adagrad_step(p, g, 0.1);

  CHECK(p.user_emb.row(0).isApprox(before_users.row(0)));
  CHECK(p.user_emb.row(2).isApprox(before_users.row(2)));
  CHECK(!p.user_emb.row(1).isApprox(before_users.row(1)));
  // The accumulator only grew on the touched row.
  CHECK(p.user_acc.row(0).norm() == 0.0);
  CHECK(p.user_acc.row(1).norm() > 0.0);
}
