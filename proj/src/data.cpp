// data.cpp

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

#include "cba/data.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cba/errors.hpp"
#include "cba/io_util.hpp"

namespace cba {

namespace {

constexpr std::uint8_t kDatasetVersion = 1;

Sample draw_utterance(const CorpusConfig& cfg, Rng& rng) {
  // Redraw rather than clamp on an infeasible draw; with frames_per_token
  // min >= 2 this never triggers, but narrow custom ranges can.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int n_tokens = rng.uniform_int(cfg.tokens_per_utt.lo,
                                         cfg.tokens_per_utt.hi);
    std::vector<int> tokens(static_cast<std::size_t>(n_tokens));
    for (int& t : tokens) t = rng.uniform_int(1, cfg.vocab_size);
    std::vector<int> frame_counts(static_cast<std::size_t>(n_tokens));
    for (int& c : frame_counts)
      c = rng.uniform_int(cfg.frames_per_token.lo, cfg.frames_per_token.hi);
    const double sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);

    LabelSequence labels{tokens};
    const int frames = std::accumulate(frame_counts.begin(),
                                       frame_counts.end(), 0);
    if (!ctc_feasible(frames, labels)) continue;
    Sample s;
    s.features = render_utterance(tokens, frame_counts, sigma, cfg, rng);
    s.labels = std::move(labels);
    s.meta = SampleMeta{sigma, std::move(frame_counts)};
    return s;
  }
  throw std::runtime_error(
      "generate_corpus: could not draw a CTC-feasible utterance in 1000 "
      "attempts; widen frames_per_token");
}

}  // namespace

void CorpusConfig::validate() const {
  if (vocab_size < 1 || feat_bins < 1)
    throw std::invalid_argument("CorpusConfig: dims must be >= 1");
  if (vocab_size > feat_bins)
    throw std::invalid_argument(
        "CorpusConfig: vocab_size must be <= feat_bins (each token needs a "
        "distinct dominant bin)");
  if (tokens_per_utt.lo < 1 || tokens_per_utt.lo > tokens_per_utt.hi)
    throw std::invalid_argument("CorpusConfig: bad tokens_per_utt range");
  if (frames_per_token.lo < 1 || frames_per_token.lo > frames_per_token.hi)
    throw std::invalid_argument("CorpusConfig: bad frames_per_token range");
  if (noise_sigma.lo < 0.0 || noise_sigma.lo > noise_sigma.hi)
    throw std::invalid_argument("CorpusConfig: bad noise_sigma range");
  if (train_count < 0 || cv_count < 0 || test_count < 0)
    throw std::invalid_argument("CorpusConfig: counts must be >= 0");
}

FeatureMatrix render_utterance(const std::vector<int>& tokens,
                               const std::vector<int>& frame_counts,
                               double noise_sigma, const CorpusConfig& cfg,
                               Rng& rng) {
  cfg.validate();
  if (tokens.size() != frame_counts.size())
    throw std::invalid_argument(
        "render_utterance: tokens and frame_counts must align");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("render_utterance: noise_sigma must be >= 0");
  for (int t : tokens)
    if (t < 1 || t > cfg.vocab_size)
      throw std::invalid_argument("render_utterance: token outside [1, V]");
  for (int c : frame_counts)
    if (c < 1)
      throw std::invalid_argument(
          "render_utterance: frame counts must be >= 1");

  const double f = cfg.feat_bins, v = cfg.vocab_size;
  const double bump_width = f / (2.0 * v);
  const int frames = std::accumulate(frame_counts.begin(), frame_counts.end(),
                                     0);
  FeatureMatrix feat(frames, cfg.feat_bins);
  int row = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double center = std::round((tokens[i] - 0.5) * f / v);
    for (int r = 0; r < frame_counts[i]; ++r, ++row) {
      for (int bin = 0; bin < cfg.feat_bins; ++bin) {
        const double d = bin - center;
        feat(row, bin) = std::exp(-d * d / (2.0 * bump_width * bump_width));
      }
    }
  }
  for (int r = 0; r < frames; ++r)
    for (int bin = 0; bin < cfg.feat_bins; ++bin)
      feat(r, bin) = static_cast<double>(static_cast<float>(
          feat(r, bin) + noise_sigma * rng.gaussian()));
  return feat;
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.config = cfg;
  auto fill = [&](std::vector<Sample>& split, int count) {
    split.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) split.push_back(draw_utterance(cfg, rng));
  };
  fill(corpus.train, cfg.train_count);
  fill(corpus.cv, cfg.cv_count);
  fill(corpus.test, cfg.test_count);
  return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  BinaryWriter w(path);
  w.write_bytes("CBAD1", 5);
  w.write_u8(kDatasetVersion);
  const CorpusConfig& c = corpus.config;
  w.write_u32(static_cast<std::uint32_t>(c.vocab_size));
  w.write_u32(static_cast<std::uint32_t>(c.feat_bins));
  w.write_u32(static_cast<std::uint32_t>(c.tokens_per_utt.lo));
  w.write_u32(static_cast<std::uint32_t>(c.tokens_per_utt.hi));
  w.write_u32(static_cast<std::uint32_t>(c.frames_per_token.lo));
  w.write_u32(static_cast<std::uint32_t>(c.frames_per_token.hi));
  w.write_f64(c.noise_sigma.lo);
  w.write_f64(c.noise_sigma.hi);
  w.write_u32(static_cast<std::uint32_t>(c.train_count));
  w.write_u32(static_cast<std::uint32_t>(c.cv_count));
  w.write_u32(static_cast<std::uint32_t>(c.test_count));
  w.write_u64(c.seed);
  for (const std::vector<Sample>* split :
       {&corpus.train, &corpus.cv, &corpus.test}) {
    w.write_u32(static_cast<std::uint32_t>(split->size()));
    for (const Sample& s : *split) {
      const int frames = static_cast<int>(s.features.rows());
      const int bins = static_cast<int>(s.features.cols());
      w.write_u32(static_cast<std::uint32_t>(frames));
      w.write_u32(static_cast<std::uint32_t>(bins));
      for (int r = 0; r < frames; ++r)
        for (int b = 0; b < bins; ++b)
          w.write_f32(static_cast<float>(s.features(r, b)));
      w.write_u32(static_cast<std::uint32_t>(s.labels.tokens.size()));
      for (int tok : s.labels.tokens) w.write_i32(tok);
      w.write_f64(s.meta.noise_sigma);
    }
  }
}

Corpus read_corpus(const std::string& path) {
  BinaryReader r(path);
  char magic[5];
  r.read_bytes(magic, 5);
  if (std::string(magic, 5) != "CBAD1")
    throw FormatError("read_corpus: bad magic in '" + path + "'");
  const std::uint8_t version = r.read_u8();
  if (version != kDatasetVersion)
    throw FormatError("read_corpus: unsupported version " +
                      std::to_string(version));
  Corpus corpus;
  CorpusConfig& c = corpus.config;
  c.vocab_size = static_cast<int>(r.read_u32());
  c.feat_bins = static_cast<int>(r.read_u32());
  c.tokens_per_utt.lo = static_cast<int>(r.read_u32());
  c.tokens_per_utt.hi = static_cast<int>(r.read_u32());
  c.frames_per_token.lo = static_cast<int>(r.read_u32());
  c.frames_per_token.hi = static_cast<int>(r.read_u32());
  c.noise_sigma.lo = r.read_f64();
  c.noise_sigma.hi = r.read_f64();
  c.train_count = static_cast<int>(r.read_u32());
  c.cv_count = static_cast<int>(r.read_u32());
  c.test_count = static_cast<int>(r.read_u32());
  c.seed = r.read_u64();
  for (std::vector<Sample>* split :
       {&corpus.train, &corpus.cv, &corpus.test}) {
    const std::uint32_t count = r.read_u32();
    split->reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      Sample s;
      const std::uint32_t frames = r.read_u32();
      const std::uint32_t bins = r.read_u32();
      if (frames == 0 || bins == 0)
        throw FormatError("read_corpus: empty feature matrix in record");
      s.features = FeatureMatrix(frames, bins);
      for (std::uint32_t row = 0; row < frames; ++row)
        for (std::uint32_t b = 0; b < bins; ++b)
          s.features(row, b) = static_cast<double>(r.read_f32());
      const std::uint32_t n_labels = r.read_u32();
      s.labels.tokens.resize(n_labels);
      for (std::uint32_t l = 0; l < n_labels; ++l)
        s.labels.tokens[l] = r.read_i32();
      s.meta.noise_sigma = r.read_f64();
      split->push_back(std::move(s));
    }
  }
  if (!r.at_eof())
    throw FormatError("read_corpus: trailing bytes after the last record");
  return corpus;
}

}  // namespace cba
