// cba/augment.hpp

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

#ifndef CBA_AUGMENT_HPP_
#define CBA_AUGMENT_HPP_

#include "cba/rng.hpp"
#include "cba/types.hpp"

namespace cba {

struct AugmentConfig {
  int max_time_masks = 4;   // adaptive ceiling, count = round(max * f_DA)
  int max_freq_masks = 2;
  int max_time_width = 10;  // frames
  int max_freq_width = 4;   // bins
  int fixed_time_masks = 2;  // non-adaptive stage-1 counts
  int fixed_freq_masks = 2;
  double fill_value = 0.0;
  // Whether frequency-mask counts scale with f_DA like time masks do, or
  // stay at the fixed stage-1 count during adaptive training.
  bool adaptive_freq_masks = true;

  void validate() const;  // counts >= 0, widths >= 1
};

// Applies `count` independent time masks. Each mask consumes exactly two
// draws: width w = uniform_int(0, min(max_width, T)), then start =
// uniform_int(0, T - w); rows [start, start + w) are set to `fill` across
// all bins. count == 0 is the identity and consumes no draws.
FeatureMatrix time_mask(const FeatureMatrix& feat, int count, int max_width,
                        Rng& rng, double fill = 0.0);

// Same draw discipline with the roles of frames and bins swapped: columns
// [start, start + w) are masked.
FeatureMatrix freq_mask(const FeatureMatrix& feat, int count, int max_width,
                        Rng& rng, double fill = 0.0);

// round(max_masks * f_da), half away from zero.
int adaptive_mask_count(int max_masks, double f_da);

// Policy-scaled masking: round(max_time_masks * f_da) time masks followed by
// round(max_freq_masks * f_da) frequency masks. Throws std::domain_error for
// f_da outside [0, 1].
FeatureMatrix adaptive_spec_augment(const FeatureMatrix& feat, double f_da,
                                    const AugmentConfig& cfg, Rng& rng);

// Non-adaptive stage-1 masking: fixed_time_masks time masks then
// fixed_freq_masks frequency masks.
FeatureMatrix fixed_spec_augment(const FeatureMatrix& feat,
                                 const AugmentConfig& cfg, Rng& rng);

}  // namespace cba

#endif  // CBA_AUGMENT_HPP_
