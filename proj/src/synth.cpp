#include "nscr/synth.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace nscr {

void SyntheticSpec::validate() const {
  if (num_info_users < 1 || num_items < 1 || num_social_users < 1 ||
      num_attribute_groups < 1)
    throw InfeasibleSpec("all entity counts must be positive");
  if (num_bridge_users < 1)
    throw InfeasibleSpec("at least one bridge user is required");
  if (num_bridge_users > std::min(num_info_users, num_social_users))
    throw InfeasibleSpec("bridge users exceed the smaller user population");
  if (interactions_per_user_mean <= 0.0 || friends_per_user_mean <= 0.0)
    throw InfeasibleSpec("mean counts must be positive");
  if (preference_noise < 0.0 || preference_noise > 1.0)
    throw InfeasibleSpec("preference_noise must be in [0, 1]");
  if (homophily < 0.0 || homophily > 1.0)
    throw InfeasibleSpec("homophily must be in [0, 1]");
  if (friends_per_user_mean >= num_social_users)
    throw InfeasibleSpec("friends_per_user_mean exceeds the social population");
}

namespace {

std::vector<int> sample_distinct(int count, int population, Rng& rng) {
  std::vector<int> all(population);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

DataBundle generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int groups = spec.num_attribute_groups;
  std::uniform_int_distribution<int> group_dist(0, groups - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Group assignments.
  std::vector<int> user_groups(spec.num_info_users);
  for (auto& g : user_groups) g = group_dist(rng);
  std::vector<int> item_groups(spec.num_items);
  for (auto& g : item_groups) g = group_dist(rng);

  std::vector<std::vector<int>> items_by_group(groups);
  for (int i = 0; i < spec.num_items; ++i) items_by_group[item_groups[i]].push_back(i);
  if (spec.preference_noise == 0.0) {
    for (int g = 0; g < groups; ++g)
      if (items_by_group[g].empty())
        throw InfeasibleSpec("group " + std::to_string(g) +
                             " has no items but noise is zero");
  }

  // Bridge mapping: sampled info users paired with sampled social users.
  std::vector<int> bridge_info = sample_distinct(spec.num_bridge_users,
                                                 spec.num_info_users, rng);
  std::vector<int> bridge_social = sample_distinct(spec.num_bridge_users,
                                                   spec.num_social_users, rng);
  std::map<int, int> bridge_map;
  for (int b = 0; b < spec.num_bridge_users; ++b)
    bridge_map[bridge_social[b]] = bridge_info[b];

  std::vector<int> social_groups(spec.num_social_users);
  for (auto& g : social_groups) g = group_dist(rng);
  for (const auto& [social, info] : bridge_map)
    social_groups[social] = user_groups[info];

  // Attributes. Items carry their group plus a popularity tier; the tier pairs
  // with the group in the pooled representation, so group membership can be
  // read off an item even when its ID embedding has seen little training
  // data. Users disclose their group only half the time and have an empty
  // attribute list otherwise, so user preferences are not fully recoverable
  // from the catalog and the ID embeddings must carry the rest.
  AttributeCatalog catalog;
  catalog.num_attributes = groups + 2;
  auto draw_attrs = [&](int group, double reveal) {
    if (unit(rng) >= reveal) return std::vector<int>{};
    return std::vector<int>{group};
  };
  for (int u = 0; u < spec.num_info_users; ++u)
    catalog.user_attrs.push_back(draw_attrs(user_groups[u], 0.5));
  std::vector<int> item_tier(spec.num_items, 0);
  for (int g = 0; g < groups; ++g)
    for (std::size_t r = 0; r < items_by_group[g].size(); ++r)
      item_tier[items_by_group[g][r]] = r < items_by_group[g].size() / 2 ? 0 : 1;
  for (int i = 0; i < spec.num_items; ++i)
    catalog.item_attrs.push_back({item_groups[i], groups + item_tier[i]});

  // Interactions: within-group with probability 1 - noise. In-group items are
  // drawn with Zipf weights so items within a group are not exchangeable and
  // ranking quality is not capped by ties among them.
  std::poisson_distribution<int> interaction_count(spec.interactions_per_user_mean);
  std::uniform_int_distribution<int> item_dist(0, spec.num_items - 1);
  std::uniform_int_distribution<std::int64_t> ts_dist(0, 1'000'000'000);
  std::vector<Interaction> rows;
  for (int u = 0; u < spec.num_info_users; ++u) {
    int target = std::clamp(interaction_count(rng), 5, spec.num_items);
    const auto& own = items_by_group[user_groups[u]];
    // Decide up front how many picks are noise so duplicate rejection cannot
    // skew the in-group / out-of-group ratio away from 1 - noise.
    int n_noise = 0;
    for (int k = 0; k < target; ++k)
      if (own.empty() || unit(rng) < spec.preference_noise) ++n_noise;
    int n_in = std::min<int>(target - n_noise, static_cast<int>(own.size()));
    // If the group catalog caps the in-group picks, shrink the noise picks in
    // proportion instead of inflating them, keeping the ratio at 1 - noise.
    if (n_in < target - n_noise && n_in + n_noise > 0) {
      double ratio = spec.preference_noise / std::max(1e-12, 1.0 - spec.preference_noise);
      n_noise = std::min(n_noise, static_cast<int>(std::lround(n_in * ratio)));
    }

    std::set<int> picked;
    // Weighted sampling without replacement (exponential-key trick) so the
    // in-group picks follow the Zipf weights exactly.
    std::vector<std::pair<double, int>> keyed;
    keyed.reserve(own.size());
    for (std::size_t r = 0; r < own.size(); ++r) {
      double w = 1.0 / (1.0 + static_cast<double>(r));
      keyed.emplace_back(-std::log(1.0 - unit(rng)) / w, own[r]);
    }
    std::partial_sort(keyed.begin(), keyed.begin() + n_in, keyed.end());
    for (int k = 0; k < n_in; ++k) picked.insert(keyed[k].second);

    int guard = 0;
    const int floor_total = std::min(5, spec.num_items);
    while (static_cast<int>(picked.size()) <
               std::max(n_in + n_noise, floor_total) &&
           guard++ < 1000 * target)
      picked.insert(item_dist(rng));
    for (int item : picked) rows.push_back({u, item, ts_dist(rng)});
  }

  // Social edges: same-group with probability homophily, weight 1; everyone
  // ends with at least two friends.
  std::vector<std::vector<int>> social_by_group(groups);
  for (int s = 0; s < spec.num_social_users; ++s)
    social_by_group[social_groups[s]].push_back(s);

  std::poisson_distribution<int> friend_count(spec.friends_per_user_mean);
  std::uniform_int_distribution<int> social_dist(0, spec.num_social_users - 1);
  std::set<std::pair<int, int>> edge_set;
  auto degree = std::vector<int>(spec.num_social_users, 0);
  auto add_edge = [&](int a, int b) {
    if (a == b) return false;
    auto key = std::minmax(a, b);
    if (!edge_set.insert(key).second) return false;
    ++degree[a];
    ++degree[b];
    return true;
  };
  auto draw_friend = [&](int s) -> int {
    const auto& own = social_by_group[social_groups[s]];
    if (unit(rng) < spec.homophily) {
      if (own.size() < 2) {
        if (spec.homophily >= 1.0)
          throw InfeasibleSpec("homophily 1 but a group has a single social user");
        return social_dist(rng);
      }
      std::uniform_int_distribution<std::size_t> pick(0, own.size() - 1);
      return own[pick(rng)];
    }
    if (spec.homophily >= 1.0)
      throw InfeasibleSpec("cannot draw cross-group edge at homophily 1");
    return social_dist(rng);
  };
  for (int s = 0; s < spec.num_social_users; ++s) {
    int target = std::max(2, friend_count(rng) / 2);  // each edge serves two users
    int guard = 0;
    while (target > 0 && guard++ < 100 * spec.num_social_users) {
      if (add_edge(s, draw_friend(s))) --target;
    }
  }
  for (int s = 0; s < spec.num_social_users; ++s) {
    int guard = 0;
    while (degree[s] < 2 && guard++ < 100 * spec.num_social_users)
      add_edge(s, draw_friend(s));
    if (degree[s] < 2)
      throw InfeasibleSpec("could not satisfy the minimum-friend requirement");
  }

  std::vector<Eigen::Triplet<double>> edges;
  for (const auto& [a, b] : edge_set) edges.emplace_back(a, b, 1.0);

  DataBundle bundle{
      InteractionTable(spec.num_info_users, spec.num_items, std::move(rows)),
      std::move(catalog),
      SocialGraph(spec.num_social_users, edges, std::move(bridge_map))};
  for (int u = 0; u < spec.num_info_users; ++u)
    bundle.user_ids.push_back("u" + std::to_string(u));
  for (int i = 0; i < spec.num_items; ++i)
    bundle.item_ids.push_back("i" + std::to_string(i));
  for (int s = 0; s < spec.num_social_users; ++s)
    bundle.social_ids.push_back("s" + std::to_string(s));
  for (int a = 0; a < bundle.catalog.num_attributes; ++a)
    bundle.attr_ids.push_back("a" + std::to_string(a));
  bundle.user_groups = std::move(user_groups);
  bundle.item_groups = std::move(item_groups);
  bundle.social_groups = std::move(social_groups);
  return bundle;
}

}  // namespace nscr
