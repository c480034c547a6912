#pragma once

// Posterior inference for beta under beta ~ N(0, sigma^2 I): a Newton-type
// MAP fit for fast plug-in predictions, and a random-walk Metropolis sampler
// for credible intervals.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clrmix/clr.h"
#include "clrmix/subjective.h"

namespace clrmix {

// total_log_likelihood - |beta|^2 / (2 sigma^2), additive constants dropped.
double log_posterior(const Dataset& dataset, const Coefficients& coefficients);

Eigen::VectorXd log_posterior_gradient(const Dataset& dataset, const Coefficients& coefficients);

struct MapOptions {
  double prior_sd = kDefaultPriorSd;
  double tolerance = 1e-8;  // on the Euclidean norm of the gradient
  int max_iter = 500;
};

struct MapResult {
  Eigen::VectorXd beta_hat;
  double log_posterior = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Damped Newton ascent with backtracking on the log posterior. The prior makes
// the Hessian strictly negative definite, so every step is an ascent
// direction. Never throws on non-convergence; check MapResult::converged.
MapResult fit_map(const Dataset& dataset, const MapOptions& options = {});

struct SamplerConfig {
  int iterations = 50'000;
  int burn_in = 5'000;
  int thin = 5;
  double step_size = 0.5;  // initial proposal standard deviation
  bool tune_step = true;   // adapt step_size during burn-in only
  double target_acceptance_low = 0.20;
  double target_acceptance_high = 0.40;
};

// Throws ConfigError unless iterations > burn_in >= 0, thin >= 1 and
// step_size > 0.
void validate(const SamplerConfig& config);

struct PosteriorSample {
  Eigen::MatrixXd draws;         // S x p retained draws
  double acceptance_rate = 0.0;  // over post-burn-in iterations
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 1;
  int iterations = 0;
  double step_size = 0.0;  // proposal scale after tuning
};

// Spherical Gaussian random-walk Metropolis started at the MAP estimate.
// Bit-reproducible for a given seed on a given standard library.
PosteriorSample sample_posterior(const Dataset& dataset, double prior_sd,
                                 const SamplerConfig& config, std::uint64_t seed);

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

// For each retained draw, forms the omega-mixture of the draw's prospective
// probabilities with the elicited priors; reports the mean and equal-tail
// quantiles per competitor.
std::vector<IntervalEstimate> predictive_intervals(const PosteriorSample& sample,
                                                   const Stratum& prospective,
                                                   const SubjectiveSpec& subjective,
                                                   double level = 0.95);

// Linear-interpolation sample quantile (R type 7). values need not be sorted.
double quantile(std::vector<double> values, double prob);

// Draws CSV: header row of predictor names, then one row per draw.
void write_draws_csv(std::ostream& out, const Eigen::MatrixXd& draws,
                     std::span<const std::string> predictor_names);
Eigen::MatrixXd read_draws_csv(std::istream& in, std::span<const std::string> predictor_names);

}  // namespace clrmix
