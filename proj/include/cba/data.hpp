// cba/data.hpp

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

#ifndef CBA_DATA_HPP_
#define CBA_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cba/ctc.hpp"
#include "cba/rng.hpp"
#include "cba/types.hpp"

namespace cba {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CorpusConfig {
  int vocab_size = 8;   // V; each token owns a distinct dominant bin
  int feat_bins = 16;   // F
  IntRange tokens_per_utt = {2, 10};
  IntRange frames_per_token = {3, 8};     // the "speed" difficulty axis
  RealRange noise_sigma = {0.05, 0.6};    // the noise difficulty axis
  int train_count = 500;
  int cv_count = 100;
  int test_count = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SampleMeta {
  double noise_sigma = 0.0;
  // Generation-time only; not serialized (nothing downstream consumes it).
  std::vector<int> frame_counts;
};

struct Sample {
  FeatureMatrix features;
  LabelSequence labels;
  SampleMeta meta;
};

struct Corpus {
  CorpusConfig config;
  std::vector<Sample> train;
  std::vector<Sample> cv;
  std::vector<Sample> test;
};

// Token k's prototype is a unit-height Gaussian bump over the frequency bins
// centered at bin round((k - 0.5) * F / V) with width F / (2V). Each token
// contributes frame_counts[i] identical prototype rows; zero-mean Gaussian
// noise with deviation noise_sigma is added to every cell (row-major draw
// order). Cells are quantized to float32 precision so that serialization is
// lossless.
FeatureMatrix render_utterance(const std::vector<int>& tokens,
                               const std::vector<int>& frame_counts,
                               double noise_sigma, const CorpusConfig& cfg,
                               Rng& rng);

// Draws the train, cv and test splits in that order from one stream seeded
// with cfg.seed. Per utterance, in order: token count, tokens, per-token
// frame counts, noise sigma, then the feature noise; an utterance that fails
// the CTC feasibility re-check is redrawn from the same stream.
Corpus generate_corpus(const CorpusConfig& cfg);

// Dataset file, little-endian:
//   magic "CBAD1", version u8 = 1
//   config echo: u32 V, u32 F, u32 tokens lo/hi, u32 frames lo/hi,
//                f64 noise lo/hi, u32 train/cv/test counts, u64 seed
//   per split (train, cv, test): u32 utterance count, then records of
//     u32 T, u32 F, f32 features (row-major, T*F),
//     u32 label count, i32 labels, f64 noise_sigma
void write_corpus(const std::string& path, const Corpus& corpus);
Corpus read_corpus(const std::string& path);

}  // namespace cba

#endif  // CBA_DATA_HPP_
