#include "clrmix/reference_likelihood.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "clrmix/errors.h"

namespace clrmix {

namespace {

double configuration_weight(const Stratum& stratum, const std::vector<int>& y,
                            const Eigen::VectorXd& beta) {
  double exponent = 0.0;
  for (std::size_t j = 0; j < stratum.predictor_count(); ++j) {
    double sufficient = 0.0;
    for (std::size_t i = 0; i < stratum.size(); ++i) {
      sufficient += y[i] * stratum.competitor(i).features[j];
    }
    exponent += sufficient * beta(static_cast<Eigen::Index>(j));
  }
  return std::exp(exponent);
}

}  // namespace

double brute_force_stratum_log_likelihood(const Stratum& stratum, const Eigen::VectorXd& beta) {
  const std::size_t n = stratum.size();
  if (n > kReferenceEnumerationLimit) {
    throw UsageError("reference enumeration refuses strata with more than " +
                     std::to_string(kReferenceEnumerationLimit) + " competitors");
  }
  if (!stratum.is_historical()) {
    throw UsageError("stratum '" + stratum.key() + "' has no observed winner");
  }
  if (static_cast<std::size_t>(beta.size()) != stratum.predictor_count()) {
    throw FeatureShapeError("coefficient vector does not match stratum predictors");
  }

  std::vector<int> observed(n, 0);
  observed[*stratum.winner()] = 1;
  const double numerator = configuration_weight(stratum, observed, beta);

  double denominator = 0.0;
  std::vector<int> y(n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    int events = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>((mask >> i) & 1u);
      events += y[i];
    }
    if (events != 1) continue;
    denominator += configuration_weight(stratum, y, beta);
  }
  return std::log(numerator / denominator);
}

}  // namespace clrmix
