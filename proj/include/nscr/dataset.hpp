#pragma once

#include "nscr/types.hpp"

#include <map>
#include <unordered_set>
#include <vector>

namespace nscr {

struct Interaction {
  int user = 0;
  int item = 0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Sparse binary implicit feedback: a stored row means an observed
/// interaction, absence means unobserved.
class InteractionTable {
 public:
  InteractionTable(int num_users, int num_items, std::vector<Interaction> rows);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  const std::vector<Interaction>& rows() const { return rows_; }

  bool observed(int user, int item) const {
    return observed_[user].count(item) > 0;
  }
  /// Row indices of a user's interactions, in insertion order.
  const std::vector<int>& user_rows(int user) const { return user_rows_[user]; }

  friend bool operator==(const InteractionTable& a, const InteractionTable& b) {
    return a.num_users_ == b.num_users_ && a.num_items_ == b.num_items_ &&
           a.rows_ == b.rows_;
  }

 private:
  int num_users_;
  int num_items_;
  std::vector<Interaction> rows_;
  std::vector<std::unordered_set<int>> observed_;
  std::vector<std::vector<int>> user_rows_;
};

/// Per-user and per-item categorical attribute sets drawn from one shared
/// vocabulary of size V. Lists are sorted and duplicate-free; empty lists
/// are legal.
struct AttributeCatalog {
  int num_attributes = 0;
  std::vector<std::vector<int>> user_attrs;
  std::vector<std::vector<int>> item_attrs;

  void validate() const;
  /// Copy with all attribute lists emptied (the "-a" ablation).
  AttributeCatalog without_attributes() const;

  friend bool operator==(const AttributeCatalog&, const AttributeCatalog&) = default;
};

/// Weighted undirected user-user adjacency with a cached degree vector and
/// the partial social-index -> information-index bridge mapping.
class SocialGraph {
 public:
  SocialGraph(int num_social_users, const std::vector<Eigen::Triplet<double>>& edges,
              std::map<int, int> bridge_map);

  int num_social_users() const { return num_social_users_; }
  const SparseMatrix& adjacency() const { return adjacency_; }
  const Vector& degrees() const { return degrees_; }
  const std::map<int, int>& bridge_map() const { return bridge_map_; }

  /// Social-user indices mapped to the information domain.
  std::vector<int> bridge_social_users() const;
  /// Information-domain indices of bridge users.
  std::vector<int> bridge_info_users() const;
  /// Inverse bridge lookup: information index -> social index, or -1.
  int social_index_of(int info_user) const;

  friend bool operator==(const SocialGraph& a, const SocialGraph& b);

 private:
  int num_social_users_;
  SparseMatrix adjacency_;
  Vector degrees_;
  std::map<int, int> bridge_map_;
};

/// True iff the cached degree vector matches recomputed adjacency row sums
/// within 1e-12.
bool degree_check(const SocialGraph& graph);

struct UserSplit {
  std::vector<int> train;       // row indices into InteractionTable
  std::vector<int> validation;
  std::vector<int> test;
};

/// Per-bridge-user holdout: test = the latest ceil(20%) interactions,
/// validation = a seeded random ceil(20%) of the remainder.
struct SplitSpec {
  std::map<int, UserSplit> bridge;  // keyed by information-domain user index
  std::vector<int> train_rows;      // all training rows, bridge and non-bridge
  std::uint64_t seed = 0;
};

struct BridgeUserTooSparse : DataError {
  explicit BridgeUserTooSparse(int user)
      : DataError("bridge user " + std::to_string(user) + " has fewer than 5 interactions"),
        user(user) {}
  int user;
};

SplitSpec build_split(const InteractionTable& interactions,
                      const std::vector<int>& bridge_users, std::uint64_t seed);

/// The immutable dataset bundle shared by trainers and evaluators.
struct DataBundle {
  InteractionTable interactions;
  AttributeCatalog catalog;
  SocialGraph graph;

  // External string IDs, indexed by the dense indices used everywhere else.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<std::string> social_ids;
  std::vector<std::string> attr_ids;

  // Ground-truth group sidecar for synthetic bundles (empty otherwise).
  std::vector<int> user_groups;
  std::vector<int> item_groups;
  std::vector<int> social_groups;

  friend bool operator==(const DataBundle&, const DataBundle&) = default;
};

}  // namespace nscr
