// augment.cpp

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

#include "cba/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace cba {

void AugmentConfig::validate() const {
  if (max_time_masks < 0 || max_freq_masks < 0 || fixed_time_masks < 0 ||
      fixed_freq_masks < 0)
    throw std::invalid_argument("AugmentConfig: mask counts must be >= 0");
  if (max_time_width < 1 || max_freq_width < 1)
    throw std::invalid_argument("AugmentConfig: mask widths must be >= 1");
}

FeatureMatrix time_mask(const FeatureMatrix& feat, int count, int max_width,
                        Rng& rng, double fill) {
  if (count < 0) throw std::invalid_argument("time_mask: count must be >= 0");
  if (max_width < 1)
    throw std::invalid_argument("time_mask: max_width must be >= 1");
  if (feat.rows() < 1)
    throw std::invalid_argument("time_mask: feature matrix has no frames");
  FeatureMatrix out = feat;
  const int frames = static_cast<int>(feat.rows());
  const int width_cap = std::min(max_width, frames);
  for (int i = 0; i < count; ++i) {
    const int w = rng.uniform_int(0, width_cap);
    const int start = rng.uniform_int(0, frames - w);
    if (w > 0) out.middleRows(start, w).setConstant(fill);
  }
  return out;
}

FeatureMatrix freq_mask(const FeatureMatrix& feat, int count, int max_width,
                        Rng& rng, double fill) {
  if (count < 0) throw std::invalid_argument("freq_mask: count must be >= 0");
  if (max_width < 1)
    throw std::invalid_argument("freq_mask: max_width must be >= 1");
  if (feat.cols() < 1)
    throw std::invalid_argument("freq_mask: feature matrix has no bins");
  FeatureMatrix out = feat;
  const int bins = static_cast<int>(feat.cols());
  const int width_cap = std::min(max_width, bins);
  for (int i = 0; i < count; ++i) {
    const int w = rng.uniform_int(0, width_cap);
    const int start = rng.uniform_int(0, bins - w);
    if (w > 0) out.middleCols(start, w).setConstant(fill);
  }
  return out;
}

int adaptive_mask_count(int max_masks, double f_da) {
  return round_half_away(static_cast<double>(max_masks) * f_da);
}

FeatureMatrix adaptive_spec_augment(const FeatureMatrix& feat, double f_da,
                                    const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!(f_da >= 0.0) || !(f_da <= 1.0))
    throw std::domain_error("adaptive_spec_augment: f_da must be in [0, 1]");
  const int n_time = adaptive_mask_count(cfg.max_time_masks, f_da);
  const int n_freq = cfg.adaptive_freq_masks
                         ? adaptive_mask_count(cfg.max_freq_masks, f_da)
                         : cfg.fixed_freq_masks;
  FeatureMatrix out =
      time_mask(feat, n_time, cfg.max_time_width, rng, cfg.fill_value);
  return freq_mask(out, n_freq, cfg.max_freq_width, rng, cfg.fill_value);
}

FeatureMatrix fixed_spec_augment(const FeatureMatrix& feat,
                                 const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  FeatureMatrix out = time_mask(feat, cfg.fixed_time_masks, cfg.max_time_width,
                                rng, cfg.fill_value);
  return freq_mask(out, cfg.fixed_freq_masks, cfg.max_freq_width, rng,
                   cfg.fill_value);
}

}  // namespace cba
