#pragma once

#include "nscr/dataset.hpp"
#include "nscr/model.hpp"
#include "nscr/baselines.hpp"

#include <filesystem>
#include <optional>

namespace nscr {

struct DanglingReference : DataError {
  using DataError::DataError;
};

/// Writes the tab-separated bundle files (interactions, attributes, social
/// edges, bridge map), vocabulary sidecars, and the group sidecar when
/// present. Save/load round-trips bit-exactly.
void save_bundle(const DataBundle& bundle, const std::filesystem::path& dir);

DataBundle load_bundle(const std::filesystem::path& dir);

/// Drops social users with fewer than min_friends neighbors, reindexing the
/// graph and bridge map.
DataBundle apply_min_degree_filter(const DataBundle& bundle, int min_friends);

/// A trained model of any kind, ready for evaluation or recommendation.
struct Checkpoint {
  std::string kind;  // nscr | mf | sfm | sr | itempop
  HyperParams hp;
  std::uint64_t split_seed = 13;
  bool use_attributes = true;
  double sr_beta = 0.0;

  std::optional<ModelParameters> nscr_params;
  Matrix social_embeddings;  // M2 x K for nscr, empty otherwise
  std::optional<MfParameters> mf_params;
  std::optional<FmParameters> fm_params;
  std::vector<double> item_counts;  // itempop

  // Enough context to score without reopening the dataset.
  AttributeCatalog catalog;
  std::map<int, int> bridge_map;
  std::vector<std::string> user_ids, item_ids, social_ids, attr_ids;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nscr
