#include "nscr/model.hpp"

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

Vector dropout_mask(int size, double rho, Rng& rng) {
  Vector mask = Vector::Ones(size);
  if (rho <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rho);
  const double scale = 1.0 / (1.0 - rho);
  for (int k = 0; k < size; ++k) mask[k] = keep(rng) ? scale : 0.0;
  return mask;
}

void adagrad_update(Matrix& theta, Matrix& acc, const Matrix& g, double lr) {
  acc.array() += g.array().square();
  theta.array() -= lr * g.array() / (acc.array().sqrt() + kAdagradEps);
}

void adagrad_update_row(Matrix& theta, Matrix& acc, int row, const Vector& g,
                        double lr) {
  acc.row(row).array() += g.array().square().transpose();
  theta.row(row).array() -=
      lr * g.array().transpose() / (acc.row(row).array().sqrt() + kAdagradEps);
}

void adagrad_update(Vector& theta, Vector& acc, const Vector& g, double lr) {
  acc.array() += g.array().square();
  theta.array() -= lr * g.array() / (acc.array().sqrt() + kAdagradEps);
}

}  // namespace

void HyperParams::validate() const {
  if (embedding_size < 1) throw DataError("embedding_size must be >= 1");
  if (num_hidden_layers < 0) throw DataError("num_hidden_layers must be >= 0");
  if (dropout_ratio < 0.0 || dropout_ratio >= 1.0)
    throw DataError("dropout_ratio must be in [0, 1)");
  if (learning_rate <= 0.0) throw DataError("learning_rate must be positive");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (tradeoff_mu <= 0.0) throw DataError("tradeoff_mu must be positive");
  if (init_std <= 0.0) throw DataError("init_std must be positive");
}

ModelParameters ModelParameters::init(int num_users, int num_items,
                                      int num_attributes, const HyperParams& hp) {
  hp.validate();
  Rng rng(hp.seed);
  const int k = hp.embedding_size;
  ModelParameters p;
  p.user_emb = gaussian_matrix(num_users, k, hp.init_std, rng);
  p.item_emb = gaussian_matrix(num_items, k, hp.init_std, rng);
  p.attr_emb = gaussian_matrix(num_attributes, k, hp.init_std, rng);
  for (int l = 0; l < hp.num_hidden_layers; ++l) {
    p.hidden_w.push_back(gaussian_matrix(k, k, hp.init_std, rng));
    p.hidden_b.push_back(gaussian_matrix(k, 1, hp.init_std, rng).col(0));
  }
  p.pred_w = gaussian_matrix(k, 1, hp.init_std, rng).col(0);

  p.user_acc = Matrix::Zero(num_users, k);
  p.item_acc = Matrix::Zero(num_items, k);
  p.attr_acc = Matrix::Zero(num_attributes, k);
  for (int l = 0; l < hp.num_hidden_layers; ++l) {
    p.hidden_w_acc.push_back(Matrix::Zero(k, k));
    p.hidden_b_acc.push_back(Vector::Zero(k));
  }
  p.pred_w_acc = Vector::Zero(k);
  return p;
}

bool ModelParameters::all_finite() const {
  bool ok = user_emb.allFinite() && item_emb.allFinite() && attr_emb.allFinite() &&
            pred_w.allFinite();
  for (const auto& w : hidden_w) ok = ok && w.allFinite();
  for (const auto& b : hidden_b) ok = ok && b.allFinite();
  return ok;
}

GradientSet GradientSet::zeros_like(const ModelParameters& params) {
  GradientSet g;
  for (const auto& w : params.hidden_w) g.hidden_w.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : params.hidden_b) g.hidden_b.push_back(Vector::Zero(b.size()));
  g.pred_w = Vector::Zero(params.pred_w.size());
  return g;
}

void GradientSet::scale(double factor) {
  for (auto& [r, v] : user_rows) v *= factor;
  for (auto& [r, v] : item_rows) v *= factor;
  for (auto& [r, v] : attr_rows) v *= factor;
  for (auto& w : hidden_w) w *= factor;
  for (auto& b : hidden_b) b *= factor;
  pred_w *= factor;
}

Vector pairwise_pool(const Vector& id_vec, const std::vector<Vector>& attr_vecs) {
  if (attr_vecs.empty()) return id_vec;
  Vector attr_sum = Vector::Zero(id_vec.size());
  Vector attr_sq_sum = Vector::Zero(id_vec.size());
  for (const auto& g : attr_vecs) {
    if (g.size() != id_vec.size()) throw DimensionMismatch("attribute vector length");
    attr_sum += g;
    attr_sq_sum.array() += g.array().square();
  }
  const Vector total = id_vec + attr_sum;
  return 0.5 * (total.array().square() - id_vec.array().square() -
                attr_sq_sum.array());
}

void pool_channel(const Vector& id_vec, const Matrix& attr_emb,
                  const std::vector<int>& attrs, Vector& pooled, Vector& attr_sum) {
  attr_sum = Vector::Zero(id_vec.size());
  if (attrs.empty()) {
    pooled = id_vec;
    return;
  }
  Vector attr_sq_sum = Vector::Zero(id_vec.size());
  for (int a : attrs) {
    attr_sum += attr_emb.row(a).transpose();
    attr_sq_sum.array() += attr_emb.row(a).transpose().array().square();
  }
  const Vector total = id_vec + attr_sum;
  pooled = 0.5 * (total.array().square() - id_vec.array().square() -
                  attr_sq_sum.array());
}

ForwardTrace forward(const ModelParameters& params, int user, int item,
                     const AttributeCatalog& catalog, Mode mode,
                     double dropout_ratio, Rng* rng) {
  if (user < 0 || user >= params.user_emb.rows()) throw IndexOutOfRange("user index");
  if (item < 0 || item >= params.item_emb.rows()) throw IndexOutOfRange("item index");
  const bool drop = mode == Mode::Train && dropout_ratio > 0.0;
  if (drop && rng == nullptr) throw DataError("train-mode forward requires an rng");

  const int k = params.embedding_size();
  ForwardTrace t;
  t.user = user;
  t.item = item;
  pool_channel(params.user_emb.row(user).transpose(), params.attr_emb,
               catalog.user_attrs[user], t.pooled_user, t.attr_sum_user);
  pool_channel(params.item_emb.row(item).transpose(), params.attr_emb,
               catalog.item_attrs[item], t.pooled_item, t.attr_sum_item);

  t.user_mask = drop ? dropout_mask(k, dropout_ratio, *rng) : Vector::Ones(k);
  t.item_mask = drop ? dropout_mask(k, dropout_ratio, *rng) : Vector::Ones(k);
  t.merged = (t.pooled_user.array() * t.user_mask.array() * t.pooled_item.array() *
              t.item_mask.array())
                 .matrix();

  const Vector* input = &t.merged;
  for (int l = 0; l < params.num_hidden_layers(); ++l) {
    Vector z = params.hidden_w[l] * (*input) + params.hidden_b[l];
    t.layer_relu.push_back(z.cwiseMax(0.0));
    t.layer_mask.push_back(drop ? dropout_mask(k, dropout_ratio, *rng)
                                : Vector::Ones(k));
    t.layer_out.push_back(
        (t.layer_relu.back().array() * t.layer_mask.back().array()).matrix());
    input = &t.layer_out.back();
  }
  t.prediction = params.pred_w.dot(*input);
  return t;
}

void backward(const ForwardTrace& trace, const ModelParameters& params,
              const AttributeCatalog& catalog, double coeff, GradientSet& out) {
  const int k = params.embedding_size();
  const int layers = params.num_hidden_layers();
  if (static_cast<int>(trace.layer_out.size()) != layers ||
      trace.merged.size() != k)
    throw DimensionMismatch("trace shapes disagree with parameters");
  if (out.pred_w.size() == 0) {
    GradientSet fresh = GradientSet::zeros_like(params);
    out.hidden_w = std::move(fresh.hidden_w);
    out.hidden_b = std::move(fresh.hidden_b);
    out.pred_w = std::move(fresh.pred_w);
  }

  out.pred_w += coeff * trace.final_vector();
  Vector grad = coeff * params.pred_w;  // gradient w.r.t. current layer output

  for (int l = layers - 1; l >= 0; --l) {
    // Undo dropout, then gate by the ReLU activation pattern.
    Vector grad_z = (grad.array() * trace.layer_mask[l].array() *
                     (trace.layer_relu[l].array() > 0.0).cast<double>())
                        .matrix();
    const Vector& input = l == 0 ? trace.merged : trace.layer_out[l - 1];
    out.hidden_w[l] += grad_z * input.transpose();
    out.hidden_b[l] += grad_z;
    grad = params.hidden_w[l].transpose() * grad_z;
  }

  // Through the elementwise merge and the two dropout masks.
  Vector grad_pu = (grad.array() * trace.user_mask.array() *
                    trace.pooled_item.array() * trace.item_mask.array())
                       .matrix();
  Vector grad_qi = (grad.array() * trace.item_mask.array() *
                    trace.pooled_user.array() * trace.user_mask.array())
                       .matrix();

  auto pool_backward = [&](const Vector& grad_pooled, const Vector& id_vec,
                           const Vector& attr_sum, const std::vector<int>& attrs,
                           std::map<int, Vector>& id_rows, int row) {
    if (attrs.empty()) {
      auto [it, inserted] = id_rows.try_emplace(row, grad_pooled);
      if (!inserted) it->second += grad_pooled;
      return;
    }
    Vector grad_id = (grad_pooled.array() * attr_sum.array()).matrix();
    auto [it, inserted] = id_rows.try_emplace(row, grad_id);
    if (!inserted) it->second += grad_id;
    const Vector total = id_vec + attr_sum;
    for (int a : attrs) {
      Vector grad_g = (grad_pooled.array() *
                       (total.array() - params.attr_emb.row(a).transpose().array()))
                          .matrix();
      auto [ait, ains] = out.attr_rows.try_emplace(a, grad_g);
      if (!ains) ait->second += grad_g;
    }
  };

  pool_backward(grad_pu, params.user_emb.row(trace.user).transpose(),
                trace.attr_sum_user, catalog.user_attrs[trace.user], out.user_rows,
                trace.user);
  pool_backward(grad_qi, params.item_emb.row(trace.item).transpose(),
                trace.attr_sum_item, catalog.item_attrs[trace.item], out.item_rows,
                trace.item);
}

GradientSet backward(const ForwardTrace& trace, const ModelParameters& params,
                     const AttributeCatalog& catalog, double upstream_grad) {
  GradientSet out = GradientSet::zeros_like(params);
  backward(trace, params, catalog, upstream_grad, out);
  return out;
}

void adagrad_step(ModelParameters& params, const GradientSet& grads, double lr) {
  for (const auto& [row, g] : grads.user_rows)
    adagrad_update_row(params.user_emb, params.user_acc, row, g, lr);
  for (const auto& [row, g] : grads.item_rows)
    adagrad_update_row(params.item_emb, params.item_acc, row, g, lr);
  for (const auto& [row, g] : grads.attr_rows)
    adagrad_update_row(params.attr_emb, params.attr_acc, row, g, lr);
  for (std::size_t l = 0; l < grads.hidden_w.size(); ++l) {
    adagrad_update(params.hidden_w[l], params.hidden_w_acc[l], grads.hidden_w[l], lr);
    adagrad_update(params.hidden_b[l], params.hidden_b_acc[l], grads.hidden_b[l], lr);
  }
  if (grads.pred_w.size() > 0)
    adagrad_update(params.pred_w, params.pred_w_acc, grads.pred_w, lr);
}

}  // namespace nscr
