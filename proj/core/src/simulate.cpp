#include "clrmix/simulate.h"

#include <cstdio>
#include <random>
#include <string>

#include "clrmix/errors.h"

namespace clrmix {

Dataset simulate_dataset(const SimulationConfig& config) {
  if (config.strata == 0) throw ConfigError("need at least one stratum", "strata");
  if (config.stratum_size < 2) throw ConfigError("strata need at least two competitors", "size");
  if (config.beta.empty()) throw ConfigError("beta must not be empty", "beta");

  const std::size_t p = config.beta.size();
  const Eigen::Map<const Eigen::VectorXd> beta(config.beta.data(),
                                               static_cast<Eigen::Index>(p));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));

  std::vector<Stratum> strata;
  strata.reserve(config.strata);
  for (std::size_t k = 0; k < config.strata; ++k) {
    std::vector<Competitor> roster(config.stratum_size);
    for (std::size_t i = 0; i < roster.size(); ++i) {
      roster[i].id = "c" + std::to_string(i + 1);
      roster[i].label = roster[i].id;
      roster[i].features.resize(p);
      for (double& x : roster[i].features) x = normal(rng);
    }
    char key[16];
    std::snprintf(key, sizeof key, "s%04zu", k + 1);

    const Stratum unlabeled(key, roster);
    const Eigen::VectorXd probs = stratum_win_probabilities(unlabeled, beta);
    std::discrete_distribution<std::size_t> pick(probs.data(), probs.data() + probs.size());
    strata.emplace_back(key, std::move(roster), pick(rng));
  }
  return Dataset(std::move(names), std::move(strata));
}

}  // namespace clrmix
