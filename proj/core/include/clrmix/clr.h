#pragma once

// Stratified data model and single-winner conditional logistic likelihood.
//
// Within a stratum of n competitors with exactly one winner, conditioning on
// the number of events turns the logistic model into a softmax over the
// linear predictors x_i . beta. Stratum-level intercepts cancel, so the
// design matrix never carries a constant column.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace clrmix {

struct Competitor {
  std::string id;
  std::string label;
  std::vector<double> features;
};

// One round of a competition. Immutable once constructed.
class Stratum {
 public:
  // Throws ValidationError when there are fewer than two competitors, ids
  // repeat, or winner is out of range; FeatureShapeError on ragged or
  // non-finite features.
  Stratum(std::string key, std::vector<Competitor> competitors,
          std::optional<std::size_t> winner = std::nullopt);

  const std::string& key() const noexcept { return key_; }
  std::span<const Competitor> competitors() const noexcept { return competitors_; }
  const Competitor& competitor(std::size_t i) const { return competitors_.at(i); }
  std::size_t size() const noexcept { return competitors_.size(); }
  std::size_t predictor_count() const noexcept {
    return static_cast<std::size_t>(design_.cols());
  }
  std::optional<std::size_t> winner() const noexcept { return winner_; }
  bool is_historical() const noexcept { return winner_.has_value(); }

  // n_k x p matrix of predictors, row i = competitor i.
  const Eigen::MatrixXd& design() const noexcept { return design_; }

  std::optional<std::size_t> index_of(std::string_view competitor_id) const;
  std::vector<std::string> ids() const;

 private:
  std::string key_;
  std::vector<Competitor> competitors_;
  std::optional<std::size_t> winner_;
  Eigen::MatrixXd design_;
};

// Historical strata (winners known) plus at most one prospective stratum.
class Dataset {
 public:
  Dataset(std::vector<std::string> predictor_names, std::vector<Stratum> historical,
          std::optional<Stratum> prospective = std::nullopt);

  std::span<const std::string> predictor_names() const noexcept { return predictor_names_; }
  std::size_t predictor_count() const noexcept { return predictor_names_.size(); }
  std::span<const Stratum> historical() const noexcept { return historical_; }
  const std::optional<Stratum>& prospective() const noexcept { return prospective_; }

  std::optional<std::size_t> predictor_index(std::string_view name) const;

  // Throws UsageError unless at least one historical stratum is present.
  void require_fittable() const;

 private:
  std::vector<std::string> predictor_names_;
  std::vector<Stratum> historical_;
  std::optional<Stratum> prospective_;
};

inline constexpr double kDefaultPriorSd = 10.0;

// beta in log-odds units per predictor; prior_sd is the standard deviation of
// the isotropic Gaussian prior beta ~ N(0, prior_sd^2 I).
struct Coefficients {
  Eigen::VectorXd beta;
  double prior_sd = kDefaultPriorSd;
};

// Throws ConfigError unless prior_sd is positive and finite.
void validate_prior_sd(double prior_sd);

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

// log softmax(x_i . beta). Internal representation for every probability.
Eigen::VectorXd stratum_log_probabilities(const Stratum& stratum, const Eigen::VectorXd& beta);

// softmax(x_i . beta) over the roster; entries in (0, 1), sum 1.
Eigen::VectorXd stratum_win_probabilities(const Stratum& stratum, const Eigen::VectorXd& beta);

// x_winner . beta - log sum_i exp(x_i . beta). Throws UsageError on a
// prospective stratum.
double stratum_log_likelihood(const Stratum& stratum, const Eigen::VectorXd& beta);

// Sum of stratum_log_likelihood over historical strata in dataset order. The
// prospective stratum never contributes.
double total_log_likelihood(const Dataset& dataset, const Eigen::VectorXd& beta);

// sum_k [x_winner - sum_i pi_i x_i]
Eigen::VectorXd log_likelihood_gradient(const Dataset& dataset, const Eigen::VectorXd& beta);

// -sum_k Cov_pi(x); negative semi-definite.
Eigen::MatrixXd log_likelihood_hessian(const Dataset& dataset, const Eigen::VectorXd& beta);

}  // namespace clrmix
