#include "clrmix/clr.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "clrmix/errors.h"

namespace clrmix {

Stratum::Stratum(std::string key, std::vector<Competitor> competitors,
                 std::optional<std::size_t> winner)
    : key_(std::move(key)), competitors_(std::move(competitors)), winner_(winner) {
  const std::size_t n = competitors_.size();
  if (n < 2) {
    throw ValidationError("stratum '" + key_ + "' has " + std::to_string(n) +
                          " competitor(s); at least 2 are required");
  }
  if (winner_ && *winner_ >= n) {
    throw ValidationError("stratum '" + key_ + "': winner index out of range");
  }

  const std::size_t p = competitors_.front().features.size();
  std::unordered_set<std::string_view> seen;
  design_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const Competitor& c = competitors_[i];
    if (!seen.insert(c.id).second) {
      throw ValidationError("stratum '" + key_ + "': duplicate competitor id '" + c.id + "'");
    }
    if (c.features.size() != p) {
      throw FeatureShapeError("stratum '" + key_ + "': competitor '" + c.id + "' has " +
                              std::to_string(c.features.size()) + " predictors, expected " +
                              std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(c.features[j])) {
        throw FeatureShapeError("stratum '" + key_ + "': competitor '" + c.id +
                                "' has a non-finite predictor");
      }
      design_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.features[j];
    }
  }
}

std::optional<std::size_t> Stratum::index_of(std::string_view competitor_id) const {
  for (std::size_t i = 0; i < competitors_.size(); ++i) {
    if (competitors_[i].id == competitor_id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Stratum::ids() const {
  std::vector<std::string> out;
  out.reserve(competitors_.size());
  for (const auto& c : competitors_) out.push_back(c.id);
  return out;
}

Dataset::Dataset(std::vector<std::string> predictor_names, std::vector<Stratum> historical,
                 std::optional<Stratum> prospective)
    : predictor_names_(std::move(predictor_names)),
      historical_(std::move(historical)),
      prospective_(std::move(prospective)) {
  if (predictor_names_.empty()) {
    throw FeatureShapeError("dataset needs at least one predictor");
  }
  const std::size_t p = predictor_names_.size();
  for (const Stratum& s : historical_) {
    if (!s.is_historical()) {
      throw UsageError("stratum '" + s.key() + "' has no winner but was listed as historical");
    }
    if (s.predictor_count() != p) {
      throw FeatureShapeError("stratum '" + s.key() + "' has " +
                              std::to_string(s.predictor_count()) + " predictors, dataset has " +
                              std::to_string(p));
    }
  }
  if (prospective_) {
    if (prospective_->is_historical()) {
      throw UsageError("prospective stratum '" + prospective_->key() + "' must not have a winner");
    }
    if (prospective_->predictor_count() != p) {
      throw FeatureShapeError("prospective stratum has " +
                              std::to_string(prospective_->predictor_count()) +
                              " predictors, dataset has " + std::to_string(p));
    }
  }
}

std::optional<std::size_t> Dataset::predictor_index(std::string_view name) const {
  auto it = std::find(predictor_names_.begin(), predictor_names_.end(), name);
  if (it == predictor_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - predictor_names_.begin());
}

void Dataset::require_fittable() const {
  if (historical_.empty()) {
    throw UsageError("dataset has no historical strata to fit");
  }
}

void validate_prior_sd(double prior_sd) {
  if (!(prior_sd > 0.0) || !std::isfinite(prior_sd)) {
    throw ConfigError("prior standard deviation must be positive and finite", "sigma");
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((values.array() - m).exp().sum());
}

namespace {

void check_shape(const Stratum& stratum, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != stratum.predictor_count()) {
    throw FeatureShapeError("coefficient vector has " + std::to_string(beta.size()) +
                            " entries but stratum '" + stratum.key() + "' has " +
                            std::to_string(stratum.predictor_count()) + " predictors");
  }
}

}  // namespace

Eigen::VectorXd stratum_log_probabilities(const Stratum& stratum, const Eigen::VectorXd& beta) {
  check_shape(stratum, beta);
  Eigen::VectorXd eta = stratum.design() * beta;
  const double lse = log_sum_exp(eta);
  eta.array() -= lse;
  return eta;
}

Eigen::VectorXd stratum_win_probabilities(const Stratum& stratum, const Eigen::VectorXd& beta) {
  Eigen::VectorXd p = stratum_log_probabilities(stratum, beta).array().exp();
  // exp of log-softmax can drift from 1 by a few ulps; renormalize.
  p /= p.sum();
  return p;
}

double stratum_log_likelihood(const Stratum& stratum, const Eigen::VectorXd& beta) {
  if (!stratum.is_historical()) {
    throw UsageError("stratum '" + stratum.key() + "' has no observed winner");
  }
  check_shape(stratum, beta);
  const Eigen::VectorXd eta = stratum.design() * beta;
  return eta(static_cast<Eigen::Index>(*stratum.winner())) - log_sum_exp(eta);
}

double total_log_likelihood(const Dataset& dataset, const Eigen::VectorXd& beta) {
  double total = 0.0;
  for (const Stratum& s : dataset.historical()) total += stratum_log_likelihood(s, beta);
  return total;
}

Eigen::VectorXd log_likelihood_gradient(const Dataset& dataset, const Eigen::VectorXd& beta) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dataset.predictor_count()));
  for (const Stratum& s : dataset.historical()) {
    const Eigen::VectorXd pi = stratum_win_probabilities(s, beta);
    grad += s.design().row(static_cast<Eigen::Index>(*s.winner())).transpose();
    grad -= s.design().transpose() * pi;
  }
  return grad;
}

Eigen::MatrixXd log_likelihood_hessian(const Dataset& dataset, const Eigen::VectorXd& beta) {
  const auto p = static_cast<Eigen::Index>(dataset.predictor_count());
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p, p);
  for (const Stratum& s : dataset.historical()) {
    const Eigen::VectorXd pi = stratum_win_probabilities(s, beta);
    const Eigen::VectorXd mean = s.design().transpose() * pi;
    const Eigen::MatrixXd centered = s.design().rowwise() - mean.transpose();
    hess -= centered.transpose() * pi.asDiagonal() * centered;
  }
  return hess;
}

}  // namespace clrmix
