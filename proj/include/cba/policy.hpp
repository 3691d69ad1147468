// cba/policy.hpp

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

#ifndef CBA_POLICY_HPP_
#define CBA_POLICY_HPP_

#include <string>
#include <vector>

namespace cba {

enum class PolicyMode { kMinMax, kRank };

std::string to_string(PolicyMode mode);
PolicyMode policy_mode_from_string(const std::string& name);

// Shape parameters of the incomplete-beta squashing nonlinearity plus the
// within-batch normalization mode.
struct PolicyConfig {
  double s = 0.5;
  double a = 5.0;
  PolicyMode mode = PolicyMode::kMinMax;
  double ibf_tolerance = 1e-12;

  // Throws std::invalid_argument on violated invariants
  // (s, a > 0; ibf_tolerance in (0, 1e-6]).
  void validate() const;
};

// Regularized incomplete beta function I_x(s, a), the Beta(s, a) CDF.
// Evaluated with the continued-fraction expansion driven by the modified
// Lentz iteration; for x > (s+1)/(s+a+2) the symmetric form
// 1 - I_{1-x}(a, s) is used so the fraction converges uniformly.
// Absolute error is within `tol`. Throws std::domain_error for x outside
// [0, 1] or non-positive shapes.
double regularized_incomplete_beta(double x, double s, double a,
                                   double tol = 1e-12);

// x_i = (L_i - L_min) / (L_max - L_min). A degenerate batch
// (L_max == L_min, including B == 1) maps every sample to 0.5. Non-finite
// losses throw std::domain_error: they indicate upstream divergence and must
// not silently steer augmentation.
std::vector<double> minmax_normalize(const std::vector<double>& losses);

// rank_i / B with 1-based ascending ranks; ties broken by ascending input
// index. NaN losses throw std::domain_error.
std::vector<double> rank_normalize(const std::vector<double>& losses);

// f_DA = 1 - I_x(s, a): the hardest sample in the batch (x = 1) gets no
// augmentation, the easiest (x = 0) the most.
double da_factor(double x, const PolicyConfig& cfg);

// f_CTC = mean over the batch of (1 - I_{x_i}(s, a)).
double interctc_factor(const std::vector<double>& normalized,
                       const PolicyConfig& cfg);

// One batch worth of policy decisions.
struct BatchComplexity {
  std::vector<double> raw_losses;
  std::vector<double> normalized;  // x_i in [0, 1]
  std::vector<double> da_factors;  // f_DA per sample
  double reg_factor = 1.0;         // f_CTC
};

// Normalizes per the configured mode, then fills f_DA per sample and the
// batch f_CTC.
BatchComplexity compute_batch_complexity(const std::vector<double>& raw_losses,
                                         const PolicyConfig& cfg);

}  // namespace cba

#endif  // CBA_POLICY_HPP_
