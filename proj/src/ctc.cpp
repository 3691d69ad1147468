// ctc.cpp

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

#include "cba/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cba/errors.hpp"

namespace cba {

namespace {

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

void check_labels(const LogProbLattice& lattice, const LabelSequence& labels) {
  if (lattice.values.cols() != lattice.vocab_size + 1)
    throw std::invalid_argument("ctc: lattice has " +
                                std::to_string(lattice.values.cols()) +
                                " columns, expected vocab_size + 1");
  if (lattice.frames() < 1)
    throw std::invalid_argument("ctc: lattice has no frames");
  for (int tok : labels.tokens) {
    if (tok < 1 || tok > lattice.vocab_size)
      throw std::invalid_argument("ctc: label token " + std::to_string(tok) +
                                  " outside [1, " +
                                  std::to_string(lattice.vocab_size) + "]");
  }
  if (!ctc_feasible(lattice.frames(), labels))
    throw InfeasibleError(
        "ctc: label sequence of length " +
        std::to_string(labels.tokens.size()) + " with " +
        std::to_string(count_adjacent_repeats(labels)) +
        " adjacent repeats is infeasible for T = " +
        std::to_string(lattice.frames()));
}

// Blank-interleaved extended labels: blank, y_1, blank, y_2, ..., blank.
std::vector<int> extend_labels(const LabelSequence& labels) {
  std::vector<int> ext(2 * labels.tokens.size() + 1, LogProbLattice::kBlank);
  for (std::size_t i = 0; i < labels.tokens.size(); ++i)
    ext[2 * i + 1] = labels.tokens[i];
  return ext;
}

// Forward recursion. alpha(t, j) includes the emission at frame t.
Matrix ctc_alpha(const Matrix& lp, const std::vector<int>& ext) {
  const int frames = static_cast<int>(lp.rows());
  const int states = static_cast<int>(ext.size());
  Matrix alpha = Matrix::Constant(frames, states, kLogZero);
  alpha(0, 0) = lp(0, ext[0]);
  if (states > 1) alpha(0, 1) = lp(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int j = 0; j < states; ++j) {
      double acc = alpha(t - 1, j);
      if (j >= 1) acc = log_add(acc, alpha(t - 1, j - 1));
      if (j >= 2 && ext[j] != LogProbLattice::kBlank && ext[j] != ext[j - 2])
        acc = log_add(acc, alpha(t - 1, j - 2));
      alpha(t, j) = acc <= kLogZero ? kLogZero : acc + lp(t, ext[j]);
    }
  }
  return alpha;
}

double log_prob_from_alpha(const Matrix& alpha) {
  const int frames = static_cast<int>(alpha.rows());
  const int states = static_cast<int>(alpha.cols());
  double lp = alpha(frames - 1, states - 1);
  if (states >= 2) lp = log_add(lp, alpha(frames - 1, states - 2));
  return lp;
}

}  // namespace

void LogProbLattice::validate(double tol) const {
  if (vocab_size < 1)
    throw std::invalid_argument("LogProbLattice: vocab_size must be >= 1");
  if (values.cols() != vocab_size + 1)
    throw std::invalid_argument("LogProbLattice: expected vocab_size + 1 = " +
                                std::to_string(vocab_size + 1) + " columns");
  for (int t = 0; t < values.rows(); ++t) {
    const double m = values.row(t).maxCoeff();
    const double lse =
        m + std::log((values.row(t).array() - m).exp().sum());
    if (std::fabs(lse) > tol)
      throw std::invalid_argument(
          "LogProbLattice: row " + std::to_string(t) +
          " log-sum-exps to " + std::to_string(lse) + ", not 0");
  }
}

int count_adjacent_repeats(const LabelSequence& labels) {
  int repeats = 0;
  for (std::size_t i = 1; i < labels.tokens.size(); ++i)
    if (labels.tokens[i] == labels.tokens[i - 1]) ++repeats;
  return repeats;
}

bool ctc_feasible(int frames, const LabelSequence& labels) {
  return frames >= static_cast<int>(labels.tokens.size()) +
                       count_adjacent_repeats(labels);
}

double ctc_loss_value(const LogProbLattice& lattice,
                      const LabelSequence& labels) {
  check_labels(lattice, labels);
  const std::vector<int> ext = extend_labels(labels);
  return -log_prob_from_alpha(ctc_alpha(lattice.values, ext));
}

CtcResult ctc_loss(const LogProbLattice& lattice, const LabelSequence& labels) {
  check_labels(lattice, labels);
  const Matrix& lp = lattice.values;
  const std::vector<int> ext = extend_labels(labels);
  const int frames = lattice.frames();
  const int states = static_cast<int>(ext.size());

  const Matrix alpha = ctc_alpha(lp, ext);
  const double log_p = log_prob_from_alpha(alpha);

  // Backward recursion. beta(t, j) excludes the emission at frame t, so
  // alpha(t, j) + beta(t, j) counts the frame-t emission exactly once.
  Matrix beta = Matrix::Constant(frames, states, kLogZero);
  beta(frames - 1, states - 1) = 0.0;
  if (states >= 2) beta(frames - 1, states - 2) = 0.0;
  for (int t = frames - 2; t >= 0; --t) {
    for (int j = 0; j < states; ++j) {
      double acc = beta(t + 1, j) <= kLogZero
                       ? kLogZero
                       : beta(t + 1, j) + lp(t + 1, ext[j]);
      if (j + 1 < states && beta(t + 1, j + 1) > kLogZero)
        acc = log_add(acc, beta(t + 1, j + 1) + lp(t + 1, ext[j + 1]));
      if (j + 2 < states && ext[j + 2] != LogProbLattice::kBlank &&
          ext[j + 2] != ext[j] && beta(t + 1, j + 2) > kLogZero)
        acc = log_add(acc, beta(t + 1, j + 2) + lp(t + 1, ext[j + 2]));
      beta(t, j) = acc;
    }
  }

  // d loss / d lp(t, k) = -exp(logsumexp_{j: ext[j]=k} (alpha + beta) - log_p)
  CtcResult result;
  result.loss = -log_p;
  result.grad = Matrix::Zero(frames, lp.cols());
  std::vector<double> acc(static_cast<std::size_t>(lp.cols()));
  for (int t = 0; t < frames; ++t) {
    std::fill(acc.begin(), acc.end(), kLogZero);
    for (int j = 0; j < states; ++j) {
      if (alpha(t, j) <= kLogZero || beta(t, j) <= kLogZero) continue;
      const std::size_t k = static_cast<std::size_t>(ext[j]);
      acc[k] = log_add(acc[k], alpha(t, j) + beta(t, j));
    }
    for (int k = 0; k < lp.cols(); ++k) {
      if (acc[static_cast<std::size_t>(k)] > kLogZero)
        result.grad(t, k) =
            -std::exp(acc[static_cast<std::size_t>(k)] - log_p);
    }
  }
  return result;
}

double ctc_brute_force(const LogProbLattice& lattice,
                       const LabelSequence& labels) {
  const Matrix& lp = lattice.values;
  if (lattice.values.cols() != lattice.vocab_size + 1)
    throw std::invalid_argument("ctc_brute_force: bad lattice shape");
  const int frames = lattice.frames();
  const int symbols = lattice.vocab_size + 1;
  double combos = std::pow(static_cast<double>(symbols), frames);
  if (combos > 1e7)
    throw std::invalid_argument(
        "ctc_brute_force: (V+1)^T exceeds the 1e7 size guard");

  std::vector<int> alignment(static_cast<std::size_t>(frames), 0);
  std::vector<int> collapsed;
  collapsed.reserve(static_cast<std::size_t>(frames));
  long double total = 0.0L;
  bool any = false;
  while (true) {
    // Collapse: remove adjacent repeats, then blanks.
    collapsed.clear();
    int prev = -1;
    for (int t = 0; t < frames; ++t) {
      const int sym = alignment[static_cast<std::size_t>(t)];
      if (sym != prev && sym != LogProbLattice::kBlank)
        collapsed.push_back(sym);
      prev = sym;
    }
    if (collapsed == labels.tokens) {
      any = true;
      double log_path = 0.0;
      for (int t = 0; t < frames; ++t)
        log_path += lp(t, alignment[static_cast<std::size_t>(t)]);
      total += std::exp(static_cast<long double>(log_path));
    }
    // Odometer increment over alignments.
    int pos = frames - 1;
    while (pos >= 0 && alignment[static_cast<std::size_t>(pos)] == symbols - 1)
      alignment[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++alignment[static_cast<std::size_t>(pos)];
  }
  if (!any)
    throw InfeasibleError("ctc_brute_force: no compatible alignments");
  return static_cast<double>(-std::log(total));
}

LabelSequence greedy_decode(const LogProbLattice& lattice) {
  const Matrix& lp = lattice.values;
  LabelSequence out;
  int prev = -1;
  for (int t = 0; t < lp.rows(); ++t) {
    int best = 0;
    for (int k = 1; k < lp.cols(); ++k)
      if (lp(t, k) > lp(t, best)) best = k;  // ties keep the lowest index
    if (best != prev && best != LogProbLattice::kBlank)
      out.tokens.push_back(best);
    prev = best;
  }
  return out;
}

int edit_distance(const LabelSequence& hyp, const LabelSequence& ref) {
  const std::vector<int>& h = hyp.tokens;
  const std::vector<int>& r = ref.tokens;
  std::vector<int> prev(r.size() + 1), cur(r.size() + 1);
  for (std::size_t j = 0; j <= r.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= h.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= r.size(); ++j) {
      const int sub = prev[j - 1] + (h[i - 1] == r[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[r.size()];
}

double token_error_rate(std::span<const LabelSequence> hyps,
                        std::span<const LabelSequence> refs) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument(
        "token_error_rate: hypothesis/reference count mismatch");
  if (refs.empty())
    throw std::invalid_argument("token_error_rate: empty reference corpus");
  long long distance = 0, length = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    distance += edit_distance(hyps[i], refs[i]);
    length += static_cast<long long>(refs[i].tokens.size());
  }
  if (length == 0)
    throw std::invalid_argument(
        "token_error_rate: reference corpus has zero total length");
  return static_cast<double>(distance) / static_cast<double>(length);
}

}  // namespace cba
