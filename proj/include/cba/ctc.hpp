// cba/ctc.hpp

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

#ifndef CBA_CTC_HPP_
#define CBA_CTC_HPP_

#include <span>
#include <vector>

#include "cba/types.hpp"

namespace cba {

// Log-space stand-in for -infinity. Any log value at or below this sentinel
// is treated as "probability zero"; the same sentinel convention applies to
// serialized metrics.
constexpr double kLogZero = -1e30;

// T x (V+1) per-frame log-probabilities. Column 0 is the blank token,
// columns 1..V the vocabulary.
struct LogProbLattice {
  Matrix values;
  int vocab_size = 0;

  static constexpr int kBlank = 0;

  int frames() const { return static_cast<int>(values.rows()); }

  // Checks shape and that each row log-sum-exps to 0 within `tol`.
  void validate(double tol = 1e-6) const;
};

struct LabelSequence {
  std::vector<int> tokens;  // each in [1, V], never blank

  bool operator==(const LabelSequence&) const = default;
};

// Number of adjacent equal pairs in y; a feasible alignment needs
// T >= |y| + that count (each repeat needs a separating blank).
int count_adjacent_repeats(const LabelSequence& labels);
bool ctc_feasible(int frames, const LabelSequence& labels);

struct CtcResult {
  double loss = 0.0;  // -log P(y | x)
  Matrix grad;        // d loss / d log-probabilities, T x (V+1)
};

// CTC negative log-likelihood over the blank-interleaved state sequence,
// forward-backward in log space, with the analytic gradient w.r.t. the
// lattice entries (each treated as a free variable). Throws InfeasibleError
// when no length-T alignment can produce `labels`, std::invalid_argument on
// out-of-range tokens.
CtcResult ctc_loss(const LogProbLattice& lattice, const LabelSequence& labels);

// Loss only (forward recursion); bitwise equal to ctc_loss(...).loss.
double ctc_loss_value(const LogProbLattice& lattice,
                      const LabelSequence& labels);

// Oracle: enumerates every length-T alignment, keeps those that collapse to
// `labels` (remove repeats, then blanks), and sums their probabilities.
// Guarded to (V+1)^T <= 10^7.
double ctc_brute_force(const LogProbLattice& lattice,
                       const LabelSequence& labels);

// Best-path decoding: per-frame argmax (ties to the lowest token index),
// collapse adjacent repeats, drop blanks.
LabelSequence greedy_decode(const LogProbLattice& lattice);

// Levenshtein distance with unit costs.
int edit_distance(const LabelSequence& hyp, const LabelSequence& ref);

// Sum of edit distances over sum of reference lengths. Throws
// std::invalid_argument when sizes differ or the reference corpus is empty.
double token_error_rate(std::span<const LabelSequence> hyps,
                        std::span<const LabelSequence> refs);

}  // namespace cba

#endif  // CBA_CTC_HPP_
