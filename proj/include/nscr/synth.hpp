#pragma once

#include "nscr/dataset.hpp"

namespace nscr {

struct InfeasibleSpec : DataError {
  using DataError::DataError;
};

/// Planted-preference generator: users and items are assigned to attribute
/// groups; interactions stay within-group with probability 1 - noise, and
/// social edges connect same-group users with probability homophily.
struct SyntheticSpec {
  int num_info_users = 500;
  int num_items = 200;
  int num_social_users = 800;
  int num_bridge_users = 50;
  int num_attribute_groups = 19;
  double interactions_per_user_mean = 5.0;
  double friends_per_user_mean = 6.0;
  double preference_noise = 0.2;
  double homophily = 0.9;
  std::uint64_t seed = 7;

  void validate() const;
};

DataBundle generate(const SyntheticSpec& spec);

}  // namespace nscr
