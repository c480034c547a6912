#pragma once

// Fitted-model snapshots: the hand-off from the CLI (fit/sample) to the
// service. JSON on disk; posterior draws stay in their own CSV and are
// referenced by path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clrmix/clr.h"
#include "clrmix/inference.h"

namespace clrmix {

inline constexpr std::string_view kSnapshotFormat = "clrmix-snapshot/1";

struct PosteriorReference {
  std::filesystem::path draws_path;  // relative paths resolve against the snapshot file
  std::size_t draw_count = 0;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 1;
  int iterations = 0;
};

struct ModelSnapshot {
  std::string dataset_fingerprint;
  std::vector<std::string> predictor_names;
  double prior_sd = kDefaultPriorSd;
  MapResult map;
  Stratum roster;  // prospective stratum
  std::optional<PosteriorReference> posterior;
};

// Throws UsageError when the dataset has no prospective stratum.
ModelSnapshot make_snapshot(const Dataset& dataset, const MapResult& map, double prior_sd);

nlohmann::json snapshot_to_json(const ModelSnapshot& snapshot);
// Throws ParseError on a missing field, wrong format tag or bad value.
ModelSnapshot snapshot_from_json(const nlohmann::json& doc);

void write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot);
ModelSnapshot read_snapshot(const std::filesystem::path& path);

// Throws ValidationError when the snapshot was not fitted on this dataset.
void verify_snapshot(const ModelSnapshot& snapshot, const Dataset& dataset);

// MAP plug-in win probabilities for the roster (omega = 1).
std::vector<double> historical_probabilities(const ModelSnapshot& snapshot);

// SHA-256 (hex) of the newline-joined competitor ids.
std::string roster_fingerprint(std::span<const std::string> ids);

struct LoadedModel {
  ModelSnapshot snapshot;
  std::vector<double> historical;          // MAP plug-in, omega = 1
  std::optional<PosteriorSample> posterior;  // present when the snapshot references draws
  std::string roster_fingerprint;
};

// Reads the snapshot and, if referenced, its draws file.
LoadedModel load_model(const std::filesystem::path& snapshot_path);
LoadedModel load_model(ModelSnapshot snapshot,
                       const std::filesystem::path& base_dir = std::filesystem::path());

}  // namespace clrmix
