#pragma once

#include "nscr/dataset.hpp"
#include "nscr/types.hpp"

#include <map>
#include <vector>

namespace nscr {

struct HyperParams {
  int embedding_size = 16;      // K
  int num_hidden_layers = 2;    // L
  double dropout_ratio = 0.2;   // rho in [0, 1)
  double learning_rate = 0.05;
  int batch_size = 256;
  double tradeoff_mu = 0.7;
  double init_std = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

enum class Mode { Train, Eval };

/// All trainable tensors plus their Adagrad accumulators. Embedding tables
/// store one row per entity; hidden layers are square (K x K).
struct ModelParameters {
  Matrix user_emb;   // M1 x K
  Matrix item_emb;   // N x K
  Matrix attr_emb;   // V x K, shared between user- and item-side attributes
  std::vector<Matrix> hidden_w;  // L matrices, K x K
  std::vector<Vector> hidden_b;  // L vectors
  Vector pred_w;                 // K

  Matrix user_acc, item_acc, attr_acc;
  std::vector<Matrix> hidden_w_acc;
  std::vector<Vector> hidden_b_acc;
  Vector pred_w_acc;

  static ModelParameters init(int num_users, int num_items, int num_attributes,
                              const HyperParams& hp);

  int embedding_size() const { return static_cast<int>(pred_w.size()); }
  int num_hidden_layers() const { return static_cast<int>(hidden_w.size()); }
  bool all_finite() const;
};

/// Every intermediate value of one forward pass, sufficient to replay the
/// exact backward pass including dropout masks.
struct ForwardTrace {
  int user = 0;
  int item = 0;
  Vector pooled_user;   // p_u, pre-dropout
  Vector pooled_item;   // q_i, pre-dropout
  Vector attr_sum_user; // sum of user attribute embeddings (zero when none)
  Vector attr_sum_item;
  Vector user_mask;     // inverted-dropout masks, entries 0 or 1/(1-rho)
  Vector item_mask;
  Vector merged;        // (p_u . mask) elementwise (q_i . mask)
  std::vector<Vector> layer_relu;  // post-ReLU, pre-dropout
  std::vector<Vector> layer_mask;
  std::vector<Vector> layer_out;   // post-dropout layer outputs
  double prediction = 0.0;

  const Vector& final_vector() const {
    return layer_out.empty() ? merged : layer_out.back();
  }
};

/// Sparse gradient container: embedding gradients keyed by row, dense
/// gradients for the shared MLP tensors.
struct GradientSet {
  std::map<int, Vector> user_rows;
  std::map<int, Vector> item_rows;
  std::map<int, Vector> attr_rows;
  std::vector<Matrix> hidden_w;
  std::vector<Vector> hidden_b;
  Vector pred_w;

  static GradientSet zeros_like(const ModelParameters& params);
  void scale(double factor);
};

/// Pairwise pooling: sum of id (x) g_t over attributes plus all g_t (x) g_t'
/// pairs, evaluated with the linear-time sum-of-squares reformulation.
/// An empty attribute list returns the id vector unchanged.
Vector pairwise_pool(const Vector& id_vec, const std::vector<Vector>& attr_vecs);

/// Pooling over an embedding table row and attribute-index list; returns the
/// pooled vector and the attribute-embedding sum (needed by backward).
void pool_channel(const Vector& id_vec, const Matrix& attr_emb,
                  const std::vector<int>& attrs, Vector& pooled, Vector& attr_sum);

ForwardTrace forward(const ModelParameters& params, int user, int item,
                     const AttributeCatalog& catalog, Mode mode,
                     double dropout_ratio, Rng* rng);

/// Accumulates coeff * d(prediction)/d(theta) into `out`.
void backward(const ForwardTrace& trace, const ModelParameters& params,
              const AttributeCatalog& catalog, double coeff, GradientSet& out);

GradientSet backward(const ForwardTrace& trace, const ModelParameters& params,
                     const AttributeCatalog& catalog, double upstream_grad);

/// Per-scalar Adagrad: acc += g^2; theta -= lr * g / (sqrt(acc) + 1e-8).
void adagrad_step(ModelParameters& params, const GradientSet& grads, double lr);

}  // namespace nscr
