// cba/types.hpp

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

#ifndef CBA_TYPES_HPP_
#define CBA_TYPES_HPP_

#include <Eigen/Dense>
#include <cmath>

namespace cba {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// T x F spectrogram-like utterance features: rows are frames, columns are
// frequency bins.
using FeatureMatrix = Matrix;

// Half-away-from-zero rounding, platform independent.
inline int round_half_away(double x) {
  return static_cast<int>(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

}  // namespace cba

#endif  // CBA_TYPES_HPP_
