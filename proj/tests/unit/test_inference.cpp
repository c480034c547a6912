#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "clrmix/dataset.h"
#include "clrmix/errors.h"
#include "clrmix/inference.h"
#include "clrmix/simulate.h"
#include "helpers.h"

using namespace clrmix;
using namespace clrmix::testing;

namespace {

Dataset flat_dataset() {
  std::vector<Stratum> strata;
  for (int k = 0; k < 30; ++k) {
    const double a = k % 3, b = (k % 5) - 2.0;
    strata.push_back(make_stratum("f" + std::to_string(k), {{a, b}, {a, b}, {a, b}}, k % 3));
  }
  return Dataset({"a", "b"}, std::move(strata));
}

const Dataset& oscars() {
  static const Dataset d = read_dataset_file(data_path("oscars_best_picture.csv"));
  return d;
}

const PosteriorSample& oscars_chain() {
  static const PosteriorSample s = sample_posterior(oscars(), kDefaultPriorSd, SamplerConfig{}, 2019);
  return s;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("log posterior is the likelihood minus the ridge penalty") {
  const Dataset d({"x"}, {make_stratum("h", {{0}, {1}, {2}}, 2)});
  CHECK(log_posterior(d, {vec({0.0}), 10}) == total_log_likelihood(d, vec({0.0})));
  CHECK(log_posterior(d, {vec({1.0}), 10}) == doctest::Approx(-0.4076059 - 1.0 / 200).epsilon(1e-6));
  const double gap = log_posterior(d, {vec({1.0}), 1e8}) - total_log_likelihood(d, vec({1.0}));
  CHECK(std::abs(gap) < 1e-15);
  CHECK_THROWS_AS(log_posterior(d, {vec({1.0}), 0.0}), ConfigError);
}

TEST_CASE("posterior gradient matches central differences") {
  std::mt19937_64 rng(21);
  const Dataset d = random_dataset(rng, 12, 3);
  const Eigen::VectorXd beta = vec({0.3, -1.1, 0.8});
  const Eigen::VectorXd g = log_posterior_gradient(d, {beta, 2.0});
  for (Eigen::Index j = 0; j < 3; ++j) {
    Eigen::VectorXd up = beta, down = beta;
    up(j) += 1e-5;
    down(j) -= 1e-5;
    const double fd = (log_posterior(d, {up, 2.0}) - log_posterior(d, {down, 2.0})) / 2e-5;
    CHECK(fd == doctest::Approx(g(j)).epsilon(1e-6));
  }
}

TEST_CASE("flat likelihood fits to zero") {
  const MapResult r = fit_map(flat_dataset());
  CHECK(r.converged);
  CHECK(r.beta_hat.norm() < 1e-12);
}

TEST_CASE("MAP is a converged local maximum") {
  std::mt19937_64 rng(22);
  const Dataset d = random_dataset(rng, 40, 3);
  const MapResult r = fit_map(d);
  REQUIRE(r.converged);
  CHECK(r.gradient_norm <= 1e-8);
  CHECK(log_posterior_gradient(d, {r.beta_hat, kDefaultPriorSd}).norm() <= 1e-8);
  CHECK(r.log_posterior >= log_posterior(d, {Eigen::VectorXd::Zero(3), kDefaultPriorSd}));
  std::normal_distribution<double> normal(0.0, 0.1);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd nudged = r.beta_hat;
    for (Eigen::Index j = 0; j < 3; ++j) nudged(j) += normal(rng);
    CHECK(r.log_posterior >= log_posterior(d, {nudged, kDefaultPriorSd}));
  }
}

TEST_CASE("MAP is invariant to stratum order") {
  std::mt19937_64 rng(23);
  const Dataset d = random_dataset(rng, 30, 2);
  std::vector<Stratum> reversed(d.historical().rbegin(), d.historical().rend());
  const Dataset r({"x1", "x2"}, std::move(reversed));
  CHECK((fit_map(d).beta_hat - fit_map(r).beta_hat).norm() <= 1e-8);
}

TEST_CASE("smaller prior sd shrinks the estimate") {
  double previous = INFINITY;
  for (double sigma : {100.0, 10.0, 3.0, 1.0, 0.5, 0.1, 0.01}) {
    MapOptions options;
    options.prior_sd = sigma;
    const MapResult r = fit_map(oscars(), options);
    REQUIRE(r.converged);
    CHECK(r.beta_hat.norm() <= previous + 1e-12);
    previous = r.beta_hat.norm();
  }
}

TEST_CASE("iteration cap surfaces non-convergence") {
  MapOptions options;
  options.max_iter = 1;
  const MapResult r = fit_map(oscars(), options);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  options.max_iter = 0;
  CHECK_FALSE(fit_map(oscars(), options).converged);
  options.tolerance = 0;
  CHECK_THROWS_AS(fit_map(oscars(), options), ConfigError);
}

TEST_CASE("quasi-separated data still converges under the prior") {
  // The first predictor marks every winner.
  std::vector<Stratum> strata;
  for (int k = 0; k < 10; ++k) {
    strata.push_back(make_stratum("s" + std::to_string(k), {{1, 0.1 * k}, {0, 1}, {0, -1}}, 0));
  }
  const MapResult r = fit_map(Dataset({"a", "b"}, std::move(strata)));
  CHECK(r.converged);
  CHECK(r.beta_hat(0) > 5);
  CHECK(std::isfinite(r.beta_hat(0)));
}

TEST_CASE("synthetic recovery") {
  const Dataset d = simulate_dataset(SimulationConfig{});
  const MapResult r = fit_map(d);
  REQUIRE(r.converged);
  const Eigen::VectorXd truth = vec({1.5, 0.8, 2.0});
  CHECK((r.beta_hat - truth).cwiseAbs().maxCoeff() <= 0.15);
}

TEST_CASE("sampler configuration is validated") {
  const Dataset d = flat_dataset();
  SamplerConfig c;
  c.step_size = 0;
  CHECK_THROWS_AS(sample_posterior(d, 1.0, c, 1), ConfigError);
  c = {};
  c.burn_in = c.iterations;
  CHECK_THROWS_AS(sample_posterior(d, 1.0, c, 1), ConfigError);
  c = {};
  c.thin = 0;
  CHECK_THROWS_AS(sample_posterior(d, 1.0, c, 1), ConfigError);
  c = {};
  c.burn_in = -1;
  CHECK_THROWS_AS(sample_posterior(d, 1.0, c, 1), ConfigError);
}

TEST_CASE("sampler keeps the expected draws and is reproducible") {
  SamplerConfig c;
  c.iterations = 2'000;
  c.burn_in = 500;
  c.thin = 7;
  const PosteriorSample a = sample_posterior(oscars(), 10, c, 77);
  const PosteriorSample b = sample_posterior(oscars(), 10, c, 77);
  const PosteriorSample other = sample_posterior(oscars(), 10, c, 78);
  CHECK(a.draws.rows() == (1'500 + 6) / 7);
  CHECK(a.draws.cols() == 3);
  CHECK(a.draws == b.draws);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.draws != other.draws);
  CHECK(a.acceptance_rate >= 0.0);
  CHECK(a.acceptance_rate <= 1.0);
}

TEST_CASE("flat likelihood: the chain recovers the prior") {
  SamplerConfig c;
  c.iterations = 60'000;
  c.burn_in = 5'000;
  c.thin = 1;
  const PosteriorSample s = sample_posterior(flat_dataset(), 1.0, c, 5);
  const Eigen::Index n = s.draws.rows();
  constexpr Eigen::Index kBatches = 50;
  const Eigen::Index batch = n / kBatches;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const Eigen::VectorXd col = s.draws.col(j);
    const double mean = col.mean();
    Eigen::VectorXd batch_means(kBatches);
    for (Eigen::Index b = 0; b < kBatches; ++b) batch_means(b) = col.segment(b * batch, batch).mean();
    const double se = std::sqrt((batch_means.array() - batch_means.mean()).square().sum() /
                                (kBatches - 1) / kBatches);
    CHECK(std::abs(mean) <= 3 * se);
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1));
    CHECK(sd == doctest::Approx(1.0).epsilon(0.1));
  }
  CHECK(s.acceptance_rate > 0.15);
  CHECK(s.acceptance_rate < 0.5);
}

TEST_CASE("quantile is R type 7") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4);
  CHECK(quantile({7}, 0.3) == 7);
  CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
  CHECK_THROWS_AS(quantile({1, 2}, 1.5), ValidationError);
}

TEST_CASE("predictive intervals") {
  const Stratum& roster = *oscars().prospective();
  const PosteriorSample& chain = oscars_chain();

  SUBCASE("omega = 0 collapses to the prior") {
    const std::vector<double> prior = favorite_priors(8, 4, 0.8);
    const auto est = predictive_intervals(chain, roster, SubjectiveSpec(prior, 0.0));
    for (std::size_t i = 0; i < est.size(); ++i) {
      CHECK(est[i].point == doctest::Approx(prior[i]).epsilon(1e-15));
      CHECK(est[i].lower == doctest::Approx(prior[i]).epsilon(1e-15));
      CHECK(est[i].upper == doctest::Approx(prior[i]).epsilon(1e-15));
    }
  }

  SUBCASE("points are normalized and ordered within their intervals") {
    for (double omega : {1.0, 0.5, 0.2}) {
      const auto est = predictive_intervals(chain, roster, SubjectiveSpec(uniform_priors(8), omega));
      double total = 0;
      for (const auto& e : est) {
        total += e.point;
        CHECK(0.0 <= e.lower);
        CHECK(e.lower <= e.point);
        CHECK(e.point <= e.upper);
        CHECK(e.upper <= 1.0);
        CHECK(e.level == 0.95);
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }

  SUBCASE("intervals bracket the MAP plug-in mixture") {
    const MapResult map = fit_map(oscars());
    const Eigen::VectorXd hist = stratum_win_probabilities(roster, map.beta_hat);
    for (double omega : {1.0, 0.5, 0.2}) {
      const SubjectiveSpec spec(favorite_priors(8, 4, 0.8), omega);
      const auto est = predictive_intervals(chain, roster, spec);
      for (std::size_t i = 0; i < est.size(); ++i) {
        const double plug = omega * hist(static_cast<Eigen::Index>(i)) + (1 - omega) * spec.priors()[i];
        CHECK(est[i].lower <= plug);
        CHECK(plug <= est[i].upper);
      }
    }
  }

  SUBCASE("shape errors") {
    CHECK_THROWS_AS(predictive_intervals(chain, roster, SubjectiveSpec(uniform_priors(7), 0.5)),
                    ValidationError);
    PosteriorSample empty;
    CHECK_THROWS_AS(predictive_intervals(empty, roster, SubjectiveSpec(uniform_priors(8), 0.5)),
                    UsageError);
  }
}

TEST_CASE("draws CSV round-trips exactly") {
  const std::vector<std::string> names = {"a", "b", "c"};
  Eigen::MatrixXd draws(3, 3);
  draws << 0.1, -2.5e-17, 3.0, 1.0 / 3.0, 2.0 / 7.0, -1e300, 0, 5, 6;
  std::stringstream buffer;
  write_draws_csv(buffer, draws, names);
  CHECK(read_draws_csv(buffer, names) == draws);

  std::stringstream again(buffer.str());
  const std::vector<std::string> wrong = {"a", "b", "d"};
  CHECK_THROWS_AS(read_draws_csv(again, wrong), ParseError);
  CHECK_THROWS_AS(write_draws_csv(buffer, draws, std::vector<std::string>{"a"}), FeatureShapeError);
}

}  // TEST_SUITE
