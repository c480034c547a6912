#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "clrmix/clr.h"

namespace clrmix {

inline constexpr std::size_t kReferenceEnumerationLimit = 12;

// Literal evaluation of the single-winner conditional likelihood: walks every
// binary outcome vector y* of length n, keeps those with exactly one event,
// and sums exp(sum_j (sum_i y*_i x_ij) beta_j) with no stabilisation. Exists
// to cross-check stratum_log_likelihood; refuses strata above
// kReferenceEnumerationLimit competitors (UsageError).
double brute_force_stratum_log_likelihood(const Stratum& stratum, const Eigen::VectorXd& beta);

}  // namespace clrmix
