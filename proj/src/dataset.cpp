#include "nscr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nscr {

InteractionTable::InteractionTable(int num_users, int num_items,
                                   std::vector<Interaction> rows)
    : num_users_(num_users), num_items_(num_items), rows_(std::move(rows)) {
  observed_.resize(num_users_);
  user_rows_.resize(num_users_);
  for (int r = 0; r < static_cast<int>(rows_.size()); ++r) {
    const auto& it = rows_[r];
    if (it.user < 0 || it.user >= num_users_ || it.item < 0 || it.item >= num_items_)
      throw IndexOutOfRange("interaction index out of range");
    if (!observed_[it.user].insert(it.item).second)
      throw DataError("duplicate interaction (" + std::to_string(it.user) + "," +
                      std::to_string(it.item) + ")");
    user_rows_[it.user].push_back(r);
  }
}

void AttributeCatalog::validate() const {
  auto check = [this](const std::vector<std::vector<int>>& lists) {
    for (const auto& attrs : lists) {
      if (!std::is_sorted(attrs.begin(), attrs.end()))
        throw DataError("attribute list not sorted");
      if (std::adjacent_find(attrs.begin(), attrs.end()) != attrs.end())
        throw DataError("duplicate attribute in list");
      if (!attrs.empty() && (attrs.front() < 0 || attrs.back() >= num_attributes))
        throw IndexOutOfRange("attribute index out of range");
    }
  };
  check(user_attrs);
  check(item_attrs);
}

AttributeCatalog AttributeCatalog::without_attributes() const {
  AttributeCatalog empty;
  empty.num_attributes = num_attributes;
  empty.user_attrs.resize(user_attrs.size());
  empty.item_attrs.resize(item_attrs.size());
  return empty;
}

SocialGraph::SocialGraph(int num_social_users,
                         const std::vector<Eigen::Triplet<double>>& edges,
                         std::map<int, int> bridge_map)
    : num_social_users_(num_social_users),
      adjacency_(num_social_users, num_social_users),
      bridge_map_(std::move(bridge_map)) {
  std::vector<Eigen::Triplet<double>> sym;
  sym.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.row() < 0 || e.row() >= num_social_users_ || e.col() < 0 ||
        e.col() >= num_social_users_)
      throw IndexOutOfRange("social edge endpoint out of range");
    if (e.row() == e.col()) throw DataError("self-loop in social graph");
    if (e.value() < 0.0) throw DataError("negative social edge weight");
    sym.emplace_back(e.row(), e.col(), e.value());
    sym.emplace_back(e.col(), e.row(), e.value());
  }
  adjacency_.setFromTriplets(sym.begin(), sym.end(),
                             [](double a, double) { return a; });
  degrees_ = adjacency_ * Vector::Ones(num_social_users_);

  std::unordered_set<int> images;
  for (const auto& [social, info] : bridge_map_) {
    if (social < 0 || social >= num_social_users_)
      throw IndexOutOfRange("bridge social index out of range");
    if (info < 0) throw IndexOutOfRange("bridge info index negative");
    if (!images.insert(info).second) throw DataError("bridge map not injective");
  }
}

std::vector<int> SocialGraph::bridge_social_users() const {
  std::vector<int> out;
  out.reserve(bridge_map_.size());
  for (const auto& [social, info] : bridge_map_) out.push_back(social);
  return out;
}

std::vector<int> SocialGraph::bridge_info_users() const {
  std::vector<int> out;
  out.reserve(bridge_map_.size());
  for (const auto& [social, info] : bridge_map_) out.push_back(info);
  return out;
}

int SocialGraph::social_index_of(int info_user) const {
  for (const auto& [social, info] : bridge_map_)
    if (info == info_user) return social;
  return -1;
}

bool operator==(const SocialGraph& a, const SocialGraph& b) {
  if (a.num_social_users_ != b.num_social_users_ || a.bridge_map_ != b.bridge_map_)
    return false;
  SparseMatrix diff = a.adjacency_ - b.adjacency_;
  return diff.coeffs().size() == 0 || diff.coeffs().cwiseAbs().maxCoeff() == 0.0;
}

bool degree_check(const SocialGraph& graph) {
  Vector recomputed = graph.adjacency() * Vector::Ones(graph.num_social_users());
  return (recomputed - graph.degrees()).cwiseAbs().maxCoeff() <= 1e-12;
}

SplitSpec build_split(const InteractionTable& interactions,
                      const std::vector<int>& bridge_users, std::uint64_t seed) {
  SplitSpec split;
  split.seed = seed;
  std::unordered_set<int> bridge_set(bridge_users.begin(), bridge_users.end());

  for (int u : bridge_users) {
    const auto& rows = interactions.user_rows(u);
    const int n = static_cast<int>(rows.size());
    if (n < 5) throw BridgeUserTooSparse(u);

    // Sort by (timestamp, item) ascending; the test set is the tail.
    std::vector<int> order(rows);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& ia = interactions.rows()[a];
      const auto& ib = interactions.rows()[b];
      return std::tie(ia.timestamp, ia.item) < std::tie(ib.timestamp, ib.item);
    });

    const int n_test = static_cast<int>(std::ceil(0.2 * n));
    UserSplit us;
    us.test.assign(order.end() - n_test, order.end());
    std::vector<int> remainder(order.begin(), order.end() - n_test);

    const int n_val =
        static_cast<int>(std::ceil(0.2 * static_cast<double>(remainder.size())));
    Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(u + 1)));
    std::shuffle(remainder.begin(), remainder.end(), rng);
    us.validation.assign(remainder.begin(), remainder.begin() + n_val);
    us.train.assign(remainder.begin() + n_val, remainder.end());
    std::sort(us.validation.begin(), us.validation.end());
    std::sort(us.train.begin(), us.train.end());

    split.train_rows.insert(split.train_rows.end(), us.train.begin(), us.train.end());
    split.bridge.emplace(u, std::move(us));
  }

  // Non-bridge users contribute everything to train.
  for (int u = 0; u < interactions.num_users(); ++u) {
    if (bridge_set.count(u)) continue;
    const auto& rows = interactions.user_rows(u);
    split.train_rows.insert(split.train_rows.end(), rows.begin(), rows.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  return split;
}

}  // namespace nscr
