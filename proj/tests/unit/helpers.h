#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clrmix/clr.h"

namespace clrmix::testing {

inline std::string data_path(const std::string& name) { return std::string(CLRMIX_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) {
  return std::string(CLRMIX_FIXTURE_DIR) + "/" + name;
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// One predictor per row of `features`.
inline Stratum make_stratum(const std::string& key, const std::vector<std::vector<double>>& features,
                            std::optional<std::size_t> winner) {
  std::vector<Competitor> roster;
  for (std::size_t i = 0; i < features.size(); ++i) {
    roster.push_back({"c" + std::to_string(i + 1), "C" + std::to_string(i + 1), features[i]});
  }
  return Stratum(key, std::move(roster), winner);
}

inline Stratum random_stratum(std::mt19937_64& rng, std::size_t n, std::size_t p, bool historical,
                              const std::string& key = "r") {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> features(n, std::vector<double>(p));
  for (auto& row : features)
    for (double& x : row) x = normal(rng);
  std::optional<std::size_t> winner;
  if (historical) winner = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  return make_stratum(key, features, winner);
}

inline Dataset random_dataset(std::mt19937_64& rng, std::size_t strata, std::size_t p) {
  std::uniform_int_distribution<std::size_t> size(2, 10);
  std::vector<Stratum> historical;
  for (std::size_t k = 0; k < strata; ++k) {
    historical.push_back(random_stratum(rng, size(rng), p, true, "k" + std::to_string(k)));
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(std::move(names), std::move(historical));
}

// Oscars 2019 roster order in the shipped fixture.
inline const std::vector<std::string> kRosterIds = {
    "a-star-is-born", "black-panther", "blackkklansman", "bohemian-rhapsody",
    "green-book",     "roma",          "the-favourite",  "vice"};

// omega = 1 column of the printed case-study table, two decimals.
inline const std::vector<double> kPrintedHistorical = {0.00, 0.00, 0.20, 0.03,
                                                       0.03, 0.34, 0.20, 0.20};

}  // namespace clrmix::testing
