#pragma once

// CSV ingestion, validation and descriptive diagnostics for stratified
// competition data.
//
// File layout (UTF-8, one competitor per row):
//
//   stratum_key,competitor_id,label,winner,<predictor_1>,...,<predictor_p>
//
// winner is 1 for the stratum's winner, 0 for the rest, and empty for every
// row of the (single, optional) prospective stratum. Strata keep the order in
// which their keys first appear.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "clrmix/clr.h"

namespace clrmix {

inline constexpr std::string_view kRequiredColumns[] = {"stratum_key", "competitor_id", "label",
                                                        "winner"};

// Throws ParseError with a 1-based line/column locus for: a bad header,
// ragged rows, non-numeric predictors, bad winner cells, duplicate competitor
// ids, zero or multiple winners, more than one prospective stratum, and
// strata with a single competitor.
Dataset parse_dataset(std::string_view csv_text);
Dataset read_dataset_file(const std::filesystem::path& path);

// Inverse of parse_dataset; parse(serialize(d)) reproduces d exactly.
std::string serialize_dataset(const Dataset& dataset);

// SHA-256 (hex) of the canonical serialization.
std::string dataset_fingerprint(const Dataset& dataset);

struct PredictorPrevalence {
  std::string name;
  double mean_among_winners = 0.0;
  double mean_among_others = 0.0;
};

struct DatasetSummary {
  std::size_t historical_strata = 0;
  std::size_t predictors = 0;
  std::size_t historical_competitors = 0;
  std::vector<std::size_t> stratum_sizes;
  std::size_t min_stratum_size = 0;
  std::size_t max_stratum_size = 0;
  std::vector<PredictorPrevalence> prevalence;
  bool has_prospective = false;
  std::string prospective_key;
  std::size_t prospective_size = 0;
};

DatasetSummary dataset_summary(const Dataset& dataset);

// Counts of (predictor, winner) over historical competitor rows.
struct ContingencyTable {
  double exposed_winners = 0;      // predictor 1, winner 1
  double exposed_losers = 0;       // predictor 1, winner 0
  double unexposed_winners = 0;    // predictor 0, winner 1
  double unexposed_losers = 0;     // predictor 0, winner 0
};

// Throws DiagnosticError if the predictor is not 0/1 valued, or if every row
// falls in one predictor class or one outcome class.
ContingencyTable contingency_table(const Dataset& dataset, std::size_t predictor);

// Cross-product ratio; adds 0.5 to every cell when any cell is zero.
double odds_ratio(const ContingencyTable& table);

struct OddsRatioReport {
  std::string predictor;
  ContingencyTable table;
  double estimate = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
  int bootstrap_reps = 0;
  std::uint64_t seed = 0;
};

// Percentile bootstrap over strata (not rows), so each resample keeps one
// winner per stratum. Replicate r draws from its own generator seeded from
// (seed, r), so the result does not depend on evaluation order.
OddsRatioReport odds_ratio_bootstrap(const Dataset& dataset, std::string_view predictor,
                                     int reps = 10'000, std::uint64_t seed = 1,
                                     double level = 0.95);

}  // namespace clrmix
