#pragma once

// Elicited win probabilities, their baseline-category log-odds form, and the
// two-component mixture that blends them with the historical model:
//
//   P(win_i) = omega * historical_i + (1 - omega) * prior_i
//
// omega = 1 trusts history completely, omega = 0 trusts the elicited prior.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clrmix {

inline constexpr double kPriorSumTolerance = 1e-9;
inline constexpr double kHistoricalSumTolerance = 1e-6;
// Priors below this cannot be converted to finite log-odds effects.
inline constexpr double kMinimumElicitedPrior = 1e-6;
// Raw elicitation totals inside [1 - kRenormalizeBand, 1 + kRenormalizeBand]
// are silently rescaled; anything further off is rejected.
inline constexpr double kRenormalizeBand = 0.02;

class SubjectiveSpec {
 public:
  // priors must lie in [0,1] and sum to 1 within kPriorSumTolerance; omega in
  // [0,1]. baseline defaults to the last competitor. Throws ValidationError.
  SubjectiveSpec(std::vector<double> priors, double omega,
                 std::optional<std::size_t> baseline_index = std::nullopt);

  std::span<const double> priors() const noexcept { return priors_; }
  double omega() const noexcept { return omega_; }
  std::size_t baseline_index() const noexcept { return baseline_index_; }
  std::size_t size() const noexcept { return priors_.size(); }

 private:
  std::vector<double> priors_;
  double omega_;
  std::size_t baseline_index_;
};

// Rescales slider-style raw inputs to sum to one when their total is within
// kRenormalizeBand of 1. Throws ValidationError otherwise, or on negative or
// non-finite entries.
std::vector<double> normalize_elicited_priors(std::span<const double> raw);

std::vector<double> uniform_priors(std::size_t n);

// One favoured competitor at `probability`, the remainder split evenly.
std::vector<double> favorite_priors(std::size_t n, std::size_t favorite, double probability);

struct PhiEffects {
  // log(p_q / p_baseline) for every non-baseline competitor, roster order.
  std::vector<double> phi;
  std::size_t baseline_index = 0;

  std::size_t roster_size() const noexcept { return phi.size() + 1; }
};

// Throws ElicitationError if any prior is below kMinimumElicitedPrior.
PhiEffects priors_to_phi(const SubjectiveSpec& spec);

// softmax over phi with 0 re-inserted at the baseline position.
std::vector<double> subjective_stratum_probabilities(const PhiEffects& effects);

enum class PredictionSource { kMapPlugin, kMcmcMean, kPriorOnly };

std::string_view to_string(PredictionSource source);

struct PredictionSet {
  std::vector<std::string> ids;  // may be empty when the caller has no roster
  std::vector<double> probabilities;
  double omega = 1.0;
  PredictionSource source = PredictionSource::kMapPlugin;
};

// Throws ValidationError if historical is not a probability vector (within
// kHistoricalSumTolerance) or its length differs from the spec. Zero priors
// are allowed here; the mixture never touches phi.
PredictionSet mixture_probabilities(std::span<const double> historical,
                                    const SubjectiveSpec& spec);

struct SweepCurves {
  std::vector<double> grid;
  std::vector<std::vector<double>> curves;  // curves[competitor][grid point]
};

// Requires a non-empty, strictly increasing grid inside [0,1].
SweepCurves omega_sweep(std::span<const double> historical, std::span<const double> priors,
                        std::span<const double> grid);

std::vector<double> linear_grid(std::size_t points);

enum class SpreadRule { kUniform, kProportional };

SpreadRule parse_spread_rule(std::string_view name);

struct ThresholdReport {
  enum class Status {
    kAttainable,    // the winner leads for every prior strictly above threshold
    kUnattainable,  // no prior in [0,1] lets the winner lead
    kTie,           // omega = 1 and the winner ties for the historical lead
  };
  Status status = Status::kAttainable;
  double threshold = 0.0;
  // Competitor whose constraint determines the threshold.
  std::optional<std::size_t> binding_competitor;
};

std::string_view to_string(ThresholdReport::Status status);

// Smallest prior probability on `winner` (with the remaining mass spread over
// the others per `spread`) above which the winner's mixture probability
// strictly exceeds every other competitor's at the given omega. Closed form:
// each rival j with spread share s_j imposes
//   p > [omega (h_j - h_w) + (1 - omega) s_j] / [(1 - omega)(1 + s_j)].
ThresholdReport post_mortem_threshold(std::span<const double> historical, std::size_t winner,
                                      double omega, SpreadRule spread = SpreadRule::kUniform);

}  // namespace clrmix
