#include "clrmix/subjective.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clrmix/errors.h"

namespace clrmix {

namespace {

void check_omega(double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw ValidationError("omega must lie in [0, 1]", "omega");
  }
}

double kahan_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void check_probability_vector(std::span<const double> values, double tolerance,
                              const char* field) {
  if (values.empty()) throw ValidationError(std::string(field) + " must not be empty", field);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(std::string(field) + " entries must lie in [0, 1]", field);
    }
  }
  const double total = kahan_sum(values);
  if (std::abs(total - 1.0) > tolerance) {
    throw ValidationError(std::string(field) + " must sum to 1 (got " + std::to_string(total) +
                              ")",
                          field);
  }
}

}  // namespace

SubjectiveSpec::SubjectiveSpec(std::vector<double> priors, double omega,
                               std::optional<std::size_t> baseline_index)
    : priors_(std::move(priors)), omega_(omega) {
  check_probability_vector(priors_, kPriorSumTolerance, "priors");
  check_omega(omega_);
  baseline_index_ = baseline_index.value_or(priors_.size() - 1);
  if (baseline_index_ >= priors_.size()) {
    throw ValidationError("baseline index out of range", "baseline_index");
  }
}

std::vector<double> normalize_elicited_priors(std::span<const double> raw) {
  if (raw.empty()) throw ValidationError("priors must not be empty", "priors");
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("priors must be finite and non-negative", "priors");
    }
  }
  const double total = kahan_sum(raw);
  if (std::abs(total - 1.0) > kRenormalizeBand + 1e-12) {
    throw ValidationError("priors sum to " + std::to_string(total) +
                              "; totals outside [0.98, 1.02] are not renormalized",
                          "priors");
  }
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> uniform_priors(std::size_t n) {
  if (n == 0) throw ValidationError("roster is empty", "priors");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> favorite_priors(std::size_t n, std::size_t favorite, double probability) {
  if (n < 2) throw ValidationError("favorite priors need at least two competitors", "priors");
  if (favorite >= n) throw ValidationError("favorite index out of range", "priors");
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ValidationError("favorite probability must lie in [0, 1]", "priors");
  }
  std::vector<double> out(n, (1.0 - probability) / static_cast<double>(n - 1));
  out[favorite] = probability;
  return out;
}

PhiEffects priors_to_phi(const SubjectiveSpec& spec) {
  const auto priors = spec.priors();
  for (std::size_t c = 0; c < priors.size(); ++c) {
    if (priors[c] < kMinimumElicitedPrior) {
      throw ElicitationError("prior for competitor " + std::to_string(c + 1) +
                                 " is below 1e-6; log-odds effects need a floor (for example "
                                 "0.001) on every competitor",
                             "priors");
    }
  }
  PhiEffects out;
  out.baseline_index = spec.baseline_index();
  const double log_base = std::log(priors[out.baseline_index]);
  for (std::size_t c = 0; c < priors.size(); ++c) {
    if (c == out.baseline_index) continue;
    out.phi.push_back(std::log(priors[c]) - log_base);
  }
  return out;
}

std::vector<double> subjective_stratum_probabilities(const PhiEffects& effects) {
  const std::size_t n = effects.roster_size();
  std::vector<double> eta;
  eta.reserve(n);
  for (std::size_t c = 0, q = 0; c < n; ++c) {
    eta.push_back(c == effects.baseline_index ? 0.0 : effects.phi[q++]);
  }
  const double m = *std::max_element(eta.begin(), eta.end());
  double total = 0.0;
  for (double& e : eta) {
    e = std::exp(e - m);
    total += e;
  }
  for (double& e : eta) e /= total;
  return eta;
}

std::string_view to_string(PredictionSource source) {
  switch (source) {
    case PredictionSource::kMapPlugin:
      return "map_plugin";
    case PredictionSource::kMcmcMean:
      return "mcmc_mean";
    case PredictionSource::kPriorOnly:
      return "prior_only";
  }
  return "unknown";
}

PredictionSet mixture_probabilities(std::span<const double> historical,
                                    const SubjectiveSpec& spec) {
  if (historical.size() != spec.size()) {
    throw ValidationError("priors have " + std::to_string(spec.size()) +
                              " entries but the roster has " + std::to_string(historical.size()),
                          "priors");
  }
  check_probability_vector(historical, kHistoricalSumTolerance, "historical");

  const double omega = spec.omega();
  PredictionSet out;
  out.omega = omega;
  out.source = omega == 0.0 ? PredictionSource::kPriorOnly : PredictionSource::kMapPlugin;
  out.probabilities.resize(historical.size());
  const auto priors = spec.priors();
  for (std::size_t i = 0; i < historical.size(); ++i) {
    out.probabilities[i] = omega * historical[i] + (1.0 - omega) * priors[i];
  }
  return out;
}

SweepCurves omega_sweep(std::span<const double> historical, std::span<const double> priors,
                        std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("omega grid must not be empty", "grid");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] >= 0.0 && grid[g] <= 1.0)) {
      throw ValidationError("omega grid values must lie in [0, 1]", "grid");
    }
    if (g > 0 && !(grid[g] > grid[g - 1])) {
      throw ValidationError("omega grid must be strictly increasing", "grid");
    }
  }
  // Validates priors and historical once; per-point mixtures reuse the check.
  const SubjectiveSpec spec(std::vector<double>(priors.begin(), priors.end()), 1.0);
  mixture_probabilities(historical, spec);

  SweepCurves out;
  out.grid.assign(grid.begin(), grid.end());
  out.curves.assign(historical.size(), std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < historical.size(); ++i) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      out.curves[i][g] = grid[g] * historical[i] + (1.0 - grid[g]) * priors[i];
    }
  }
  return out;
}

std::vector<double> linear_grid(std::size_t points) {
  if (points < 2) throw ValidationError("grid needs at least two points", "grid");
  std::vector<double> grid(points);
  for (std::size_t g = 0; g < points; ++g) {
    grid[g] = static_cast<double>(g) / static_cast<double>(points - 1);
  }
  return grid;
}

SpreadRule parse_spread_rule(std::string_view name) {
  if (name == "uniform") return SpreadRule::kUniform;
  if (name == "proportional") return SpreadRule::kProportional;
  throw ValidationError("unknown spread rule '" + std::string(name) +
                            "' (expected uniform or proportional)",
                        "spread");
}

std::string_view to_string(ThresholdReport::Status status) {
  switch (status) {
    case ThresholdReport::Status::kAttainable:
      return "attainable";
    case ThresholdReport::Status::kUnattainable:
      return "unattainable";
    case ThresholdReport::Status::kTie:
      return "tie";
  }
  return "unknown";
}

ThresholdReport post_mortem_threshold(std::span<const double> historical, std::size_t winner,
                                      double omega, SpreadRule spread) {
  const std::size_t n = historical.size();
  if (n < 2) throw ValidationError("roster needs at least two competitors", "historical");
  if (winner >= n) throw ValidationError("winner index out of range", "winner");
  check_probability_vector(historical, kHistoricalSumTolerance, "historical");
  check_omega(omega);

  const double h_w = historical[winner];

  // Share of the non-winner mass each rival receives.
  std::vector<double> share(n, 1.0 / static_cast<double>(n - 1));
  if (spread == SpreadRule::kProportional) {
    const double rest = 1.0 - h_w;
    if (rest > 0.0) {
      for (std::size_t j = 0; j < n; ++j) share[j] = historical[j] / rest;
    }
  }
  share[winner] = 0.0;

  ThresholdReport report;
  if (omega == 1.0) {
    double best_rival = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != winner && historical[j] > best_rival) {
        best_rival = historical[j];
        report.binding_competitor = j;
      }
    }
    if (h_w > best_rival) {
      report.status = ThresholdReport::Status::kAttainable;
      report.threshold = 0.0;
    } else if (h_w == best_rival) {
      report.status = ThresholdReport::Status::kTie;
      report.threshold = 1.0;
    } else {
      report.status = ThresholdReport::Status::kUnattainable;
      report.threshold = 1.0;
    }
    return report;
  }

  double bound = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == winner) continue;
    const double t = (omega * (historical[j] - h_w) + (1.0 - omega) * share[j]) /
                     ((1.0 - omega) * (1.0 + share[j]));
    if (t > bound) {
      bound = t;
      report.binding_competitor = j;
    }
  }
  if (bound >= 1.0) {
    report.status = ThresholdReport::Status::kUnattainable;
    report.threshold = 1.0;
  } else {
    report.status = ThresholdReport::Status::kAttainable;
    report.threshold = std::max(bound, 0.0);
  }
  return report;
}

}  // namespace clrmix
