#include "clrmix/inference.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "clrmix/errors.h"
#include "csv.h"

namespace clrmix {

double log_posterior(const Dataset& dataset, const Coefficients& coefficients) {
  validate_prior_sd(coefficients.prior_sd);
  const double var = coefficients.prior_sd * coefficients.prior_sd;
  return total_log_likelihood(dataset, coefficients.beta) -
         coefficients.beta.squaredNorm() / (2.0 * var);
}

Eigen::VectorXd log_posterior_gradient(const Dataset& dataset, const Coefficients& coefficients) {
  validate_prior_sd(coefficients.prior_sd);
  const double var = coefficients.prior_sd * coefficients.prior_sd;
  return log_likelihood_gradient(dataset, coefficients.beta) - coefficients.beta / var;
}

MapResult fit_map(const Dataset& dataset, const MapOptions& options) {
  dataset.require_fittable();
  validate_prior_sd(options.prior_sd);
  if (!(options.tolerance > 0.0)) throw ConfigError("tolerance must be positive", "tol");
  if (options.max_iter < 0) throw ConfigError("max_iter must be non-negative", "max-iter");

  const auto p = static_cast<Eigen::Index>(dataset.predictor_count());
  const double precision = 1.0 / (options.prior_sd * options.prior_sd);
  Coefficients current{Eigen::VectorXd::Zero(p), options.prior_sd};

  MapResult result;
  double lp = log_posterior(dataset, current);
  Eigen::VectorXd grad = log_posterior_gradient(dataset, current);
  int iter = 0;
  while (iter < options.max_iter && grad.norm() > options.tolerance) {
    Eigen::MatrixXd neg_hessian = -log_likelihood_hessian(dataset, current.beta);
    neg_hessian.diagonal().array() += precision;
    const Eigen::VectorXd direction = neg_hessian.llt().solve(grad);

    // Armijo backtracking; a full Newton step is accepted near the mode.
    const double slope = grad.dot(direction);
    double t = 1.0;
    Coefficients trial = current;
    double trial_lp = lp;
    for (int halvings = 0; halvings < 60; ++halvings) {
      trial.beta = current.beta + t * direction;
      trial_lp = log_posterior(dataset, trial);
      if (trial_lp >= lp + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(trial_lp >= lp)) break;  // no ascent possible at machine precision
    current = std::move(trial);
    lp = trial_lp;
    grad = log_posterior_gradient(dataset, current);
    ++iter;
  }

  result.beta_hat = current.beta;
  result.log_posterior = lp;
  result.gradient_norm = grad.norm();
  result.converged = result.gradient_norm <= options.tolerance;
  result.iterations = iter;
  return result;
}

void validate(const SamplerConfig& config) {
  if (config.burn_in < 0) throw ConfigError("burn-in must be non-negative", "burn-in");
  if (config.iterations <= config.burn_in) {
    throw ConfigError("iterations must exceed burn-in", "iterations");
  }
  if (config.thin < 1) throw ConfigError("thin must be at least 1", "thin");
  if (!(config.step_size > 0.0) || !std::isfinite(config.step_size)) {
    throw ConfigError("step size must be positive", "step-size");
  }
  if (!(config.target_acceptance_low > 0.0 &&
        config.target_acceptance_low < config.target_acceptance_high &&
        config.target_acceptance_high < 1.0)) {
    throw ConfigError("acceptance target band must satisfy 0 < low < high < 1", "target");
  }
}

PosteriorSample sample_posterior(const Dataset& dataset, double prior_sd,
                                 const SamplerConfig& config, std::uint64_t seed) {
  validate(config);
  validate_prior_sd(prior_sd);
  dataset.require_fittable();

  const auto p = static_cast<Eigen::Index>(dataset.predictor_count());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  MapOptions start_options;
  start_options.prior_sd = prior_sd;
  Coefficients current{fit_map(dataset, start_options).beta_hat, prior_sd};
  double current_lp = log_posterior(dataset, current);

  const int kept = (config.iterations - config.burn_in + config.thin - 1) / config.thin;
  PosteriorSample out;
  out.draws.resize(kept, p);
  out.seed = seed;
  out.burn_in = config.burn_in;
  out.thin = config.thin;
  out.iterations = config.iterations;

  constexpr int kTuneWindow = 100;
  double step = config.step_size;
  int window_accepts = 0;
  long long post_burn_accepts = 0;
  Eigen::Index row = 0;
  Coefficients proposal{Eigen::VectorXd(p), prior_sd};

  for (int it = 0; it < config.iterations; ++it) {
    for (Eigen::Index j = 0; j < p; ++j) proposal.beta(j) = current.beta(j) + step * normal(rng);
    const double proposal_lp = log_posterior(dataset, proposal);
    const bool accept = std::log(uniform(rng)) < proposal_lp - current_lp;
    if (accept) {
      current.beta = proposal.beta;
      current_lp = proposal_lp;
    }

    if (it < config.burn_in) {
      window_accepts += accept ? 1 : 0;
      if (config.tune_step && (it + 1) % kTuneWindow == 0) {
        const double rate = static_cast<double>(window_accepts) / kTuneWindow;
        if (rate < config.target_acceptance_low) step *= 0.8;
        else if (rate > config.target_acceptance_high) step *= 1.25;
        window_accepts = 0;
      }
      continue;
    }
    post_burn_accepts += accept ? 1 : 0;
    if ((it - config.burn_in) % config.thin == 0) out.draws.row(row++) = current.beta.transpose();
  }

  out.acceptance_rate = static_cast<double>(post_burn_accepts) /
                        static_cast<double>(config.iterations - config.burn_in);
  out.step_size = step;
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<IntervalEstimate> predictive_intervals(const PosteriorSample& sample,
                                                   const Stratum& prospective,
                                                   const SubjectiveSpec& subjective,
                                                   double level) {
  if (sample.draws.rows() == 0) throw UsageError("posterior sample has no draws");
  if (subjective.size() != prospective.size()) {
    throw ValidationError("priors have " + std::to_string(subjective.size()) +
                              " entries but the roster has " +
                              std::to_string(prospective.size()),
                          "priors");
  }
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie in (0, 1)", "level");

  const std::size_t n = prospective.size();
  const auto draws = static_cast<std::size_t>(sample.draws.rows());
  const double omega = subjective.omega();
  const auto priors = subjective.priors();

  std::vector<std::vector<double>> per_competitor(n, std::vector<double>(draws));
  Eigen::VectorXd hist_total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < draws; ++s) {
    const Eigen::VectorXd beta = sample.draws.row(static_cast<Eigen::Index>(s)).transpose();
    const Eigen::VectorXd hist = stratum_win_probabilities(prospective, beta);
    hist_total += hist;
    for (std::size_t i = 0; i < n; ++i) {
      per_competitor[i][s] = omega * hist(static_cast<Eigen::Index>(i)) + (1.0 - omega) * priors[i];
    }
  }

  const double tail = (1.0 - level) / 2.0;
  std::vector<IntervalEstimate> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    IntervalEstimate& e = out[i];
    e.level = level;
    // mean of the per-draw mixtures, exact at omega = 0
    e.point = omega * hist_total(static_cast<Eigen::Index>(i)) / static_cast<double>(draws) +
              (1.0 - omega) * priors[i];
    e.lower = quantile(per_competitor[i], tail);
    e.upper = quantile(per_competitor[i], 1.0 - tail);
    e.lower = std::clamp(std::min(e.lower, e.point), 0.0, 1.0);
    e.upper = std::clamp(std::max(e.upper, e.point), 0.0, 1.0);
  }
  return out;
}

void write_draws_csv(std::ostream& out, const Eigen::MatrixXd& draws,
                     std::span<const std::string> predictor_names) {
  if (static_cast<std::size_t>(draws.cols()) != predictor_names.size()) {
    throw FeatureShapeError("draw width does not match predictor names");
  }
  std::vector<std::string> fields(predictor_names.begin(), predictor_names.end());
  out << csv::format_row(fields) << '\n';
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
      fields[static_cast<std::size_t>(c)] = csv::format_double(draws(r, c));
    }
    out << csv::format_row(fields) << '\n';
  }
}

Eigen::MatrixXd read_draws_csv(std::istream& in, std::span<const std::string> predictor_names) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::vector<csv::Row> rows = csv::parse(buffer.str());
  if (rows.empty()) throw ParseError("draws file is empty", 1, 0);
  const auto& header = rows.front().fields;
  if (!std::equal(header.begin(), header.end(), predictor_names.begin(), predictor_names.end())) {
    throw ParseError("draws header does not match the model's predictor names", 1, 0);
  }
  const auto p = static_cast<Eigen::Index>(predictor_names.size());
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(rows.size() - 1), p);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != predictor_names.size()) {
      throw ParseError("expected " + std::to_string(p) + " columns", row.line, 0);
    }
    for (std::size_t c = 0; c < row.fields.size(); ++c) {
      draws(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          csv::parse_double(row.fields[c], row.line, c + 1);
    }
  }
  return draws;
}

}  // namespace clrmix
