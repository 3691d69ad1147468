// policy.cpp

// Copyright 2026 The CBA Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cba/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cba {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz
// iteration (Numerical Recipes style). Converges for x < (s+1)/(s+a+2).
double beta_continued_fraction(double s, double a, double x, double eps) {
  constexpr int kMaxIter = 500;
  constexpr double kTiny = 1e-300;

  const double qab = s + a;
  const double qap = s + 1.0;
  const double qam = s - 1.0;

  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double coef = m * (a - m) * x / ((qam + m2) * (s + m2));
    d = 1.0 + coef * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + coef / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    coef = -(s + m) * (qab + m) * x / ((s + m2) * (qap + m2));
    d = 1.0 + coef * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + coef / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) return h;
  }
  throw std::runtime_error(
      "regularized_incomplete_beta: continued fraction did not converge");
}

double ibf_lower(double x, double s, double a, double eps) {
  // front = x^s (1-x)^a / (s B(s,a))
  const double log_front = s * std::log(x) + a * std::log1p(-x) -
                           (std::lgamma(s) + std::lgamma(a) -
                            std::lgamma(s + a));
  return std::exp(log_front) * beta_continued_fraction(s, a, x, eps) / s;
}

}  // namespace

std::string to_string(PolicyMode mode) {
  return mode == PolicyMode::kMinMax ? "minmax" : "rank";
}

PolicyMode policy_mode_from_string(const std::string& name) {
  if (name == "minmax") return PolicyMode::kMinMax;
  if (name == "rank") return PolicyMode::kRank;
  throw std::invalid_argument("unknown policy mode '" + name +
                              "' (expected minmax or rank)");
}

void PolicyConfig::validate() const {
  if (!(s > 0.0) || !(a > 0.0))
    throw std::invalid_argument("PolicyConfig: shape parameters must be > 0");
  if (!(ibf_tolerance > 0.0) || ibf_tolerance > 1e-6)
    throw std::invalid_argument(
        "PolicyConfig: ibf_tolerance must be in (0, 1e-6]");
}

double regularized_incomplete_beta(double x, double s, double a, double tol) {
  if (!(s > 0.0) || !(a > 0.0))
    throw std::domain_error(
        "regularized_incomplete_beta: shapes must be > 0");
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::domain_error(
        "regularized_incomplete_beta: x must be in [0, 1]");
  if (!(tol > 0.0))
    throw std::domain_error("regularized_incomplete_beta: tol must be > 0");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double eps = std::max(std::min(tol, 1e-14), 4.0 *
                              std::numeric_limits<double>::epsilon());
  if (x < (s + 1.0) / (s + a + 2.0)) {
    return ibf_lower(x, s, a, eps);
  }
  return 1.0 - ibf_lower(1.0 - x, a, s, eps);
}

std::vector<double> minmax_normalize(const std::vector<double>& losses) {
  if (losses.empty())
    throw std::invalid_argument("minmax_normalize: empty batch");
  for (double l : losses) {
    if (!std::isfinite(l))
      throw std::domain_error("minmax_normalize: non-finite loss in batch");
  }
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(losses.size());
  if (lo == hi) {
    // Degenerate batch: assign the neutral mid-scale complexity.
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < losses.size(); ++i)
    out[i] = (losses[i] - lo) / span;
  return out;
}

std::vector<double> rank_normalize(const std::vector<double>& losses) {
  if (losses.empty())
    throw std::invalid_argument("rank_normalize: empty batch");
  for (double l : losses) {
    if (std::isnan(l))
      throw std::domain_error("rank_normalize: NaN loss in batch");
  }
  const std::size_t n = losses.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // stable_sort on values gives ascending ranks with ties broken by index.
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) {
                     return losses[i] < losses[j];
                   });
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r)
    out[idx[r]] = static_cast<double>(r + 1) / static_cast<double>(n);
  return out;
}

double da_factor(double x, const PolicyConfig& cfg) {
  cfg.validate();
  return 1.0 - regularized_incomplete_beta(x, cfg.s, cfg.a, cfg.ibf_tolerance);
}

double interctc_factor(const std::vector<double>& normalized,
                       const PolicyConfig& cfg) {
  if (normalized.empty())
    throw std::domain_error("interctc_factor: empty batch");
  double sum = 0.0;
  for (double x : normalized) sum += da_factor(x, cfg);
  return sum / static_cast<double>(normalized.size());
}

BatchComplexity compute_batch_complexity(const std::vector<double>& raw_losses,
                                         const PolicyConfig& cfg) {
  cfg.validate();
  BatchComplexity bc;
  bc.raw_losses = raw_losses;
  bc.normalized = cfg.mode == PolicyMode::kMinMax
                      ? minmax_normalize(raw_losses)
                      : rank_normalize(raw_losses);
  bc.da_factors.resize(bc.normalized.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < bc.normalized.size(); ++i) {
    bc.da_factors[i] = da_factor(bc.normalized[i], cfg);
    sum += bc.da_factors[i];
  }
  bc.reg_factor = sum / static_cast<double>(bc.da_factors.size());
  return bc;
}

}  // namespace cba
