#include <cmath>
#include <fstream>
#include <stdexcept>

#include "doctest.h"

#include "cba/data.hpp"
#include "cba/errors.hpp"
#include "test_util.hpp"

using namespace cba;

namespace {

CorpusConfig small_config() {
  CorpusConfig cfg;
  cfg.train_count = 30;
  cfg.cv_count = 8;
  cfg.test_count = 8;
  cfg.seed = 99;
  return cfg;
}

bool samples_equal(const Sample& a, const Sample& b) {
  return a.features == b.features && a.labels == b.labels &&
         a.meta.noise_sigma == b.meta.noise_sigma;
}

}  // namespace

TEST_CASE("render_utterance without noise repeats prototype rows") {
  CorpusConfig cfg;
  Rng rng(1);
  const FeatureMatrix feat =
      render_utterance({3, 5}, {4, 2}, 0.0, cfg, rng);
  REQUIRE(feat.rows() == 6);
  REQUIRE(feat.cols() == cfg.feat_bins);
  for (int r = 1; r < 4; ++r) CHECK(feat.row(r) == feat.row(0));
  CHECK(feat.row(5) == feat.row(4));
  CHECK(feat.row(0) != feat.row(4));

  // Unit-height bump at the token's dominant bin.
  const int center3 = static_cast<int>(
      std::round((3 - 0.5) * cfg.feat_bins / cfg.vocab_size));
  Eigen::Index argmax = 0;
  feat.row(0).maxCoeff(&argmax);
  CHECK(static_cast<int>(argmax) == center3);
  CHECK(feat(0, center3) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("render_utterance shape and determinism") {
  CorpusConfig cfg;
  Rng a(7), b(7);
  const FeatureMatrix one = render_utterance({2}, {3}, 0.3, cfg, a);
  CHECK(one.rows() == 3);
  const FeatureMatrix two = render_utterance({2}, {3}, 0.3, cfg, b);
  CHECK(one == two);

  Rng c(8);
  CHECK_THROWS_AS(render_utterance({0}, {3}, 0.3, cfg, c),
                  std::invalid_argument);
  CHECK_THROWS_AS(render_utterance({1}, {0}, 0.3, cfg, c),
                  std::invalid_argument);
  CHECK_THROWS_AS(render_utterance({1}, {3}, -0.1, cfg, c),
                  std::invalid_argument);
}

TEST_CASE("generate_corpus honors counts, ranges and feasibility") {
  const CorpusConfig cfg = small_config();
  const Corpus corpus = generate_corpus(cfg);
  CHECK(corpus.train.size() == 30);
  CHECK(corpus.cv.size() == 8);
  CHECK(corpus.test.size() == 8);
  for (const std::vector<Sample>* split :
       {&corpus.train, &corpus.cv, &corpus.test}) {
    for (const Sample& s : *split) {
      CHECK(s.labels.tokens.size() >=
            static_cast<std::size_t>(cfg.tokens_per_utt.lo));
      CHECK(s.labels.tokens.size() <=
            static_cast<std::size_t>(cfg.tokens_per_utt.hi));
      for (int tok : s.labels.tokens) {
        CHECK(tok >= 1);
        CHECK(tok <= cfg.vocab_size);
      }
      CHECK(s.meta.noise_sigma >= cfg.noise_sigma.lo);
      CHECK(s.meta.noise_sigma <= cfg.noise_sigma.hi);
      CHECK(ctc_feasible(static_cast<int>(s.features.rows()), s.labels));
      int frames = 0;
      for (int c : s.meta.frame_counts) frames += c;
      CHECK(frames == static_cast<int>(s.features.rows()));
    }
  }
}

TEST_CASE("generate_corpus is seed-deterministic") {
  const CorpusConfig cfg = small_config();
  const Corpus a = generate_corpus(cfg);
  const Corpus b = generate_corpus(cfg);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i)
    CHECK(samples_equal(a.train[i], b.train[i]));

  CorpusConfig other = cfg;
  other.seed = 100;
  const Corpus c = generate_corpus(other);
  bool any_different = false;
  for (std::size_t i = 0; i < a.train.size(); ++i)
    any_different = any_different || !samples_equal(a.train[i], c.train[i]);
  CHECK(any_different);
}

TEST_CASE("dataset round trip is the identity") {
  const Corpus corpus = generate_corpus(small_config());
  const std::string path = testing::temp_path("corpus");
  write_corpus(path, corpus);
  const Corpus back = read_corpus(path);

  CHECK(back.config.vocab_size == corpus.config.vocab_size);
  CHECK(back.config.seed == corpus.config.seed);
  REQUIRE(back.train.size() == corpus.train.size());
  REQUIRE(back.cv.size() == corpus.cv.size());
  REQUIRE(back.test.size() == corpus.test.size());
  for (std::size_t i = 0; i < corpus.train.size(); ++i)
    CHECK(samples_equal(back.train[i], corpus.train[i]));

  // Re-serializing the read corpus reproduces the file byte for byte.
  const std::string path2 = testing::temp_path("corpus2");
  write_corpus(path2, back);
  CHECK(testing::read_file_bytes(path) == testing::read_file_bytes(path2));
}

TEST_CASE("dataset reader distinguishes magic, version and truncation") {
  const Corpus corpus = generate_corpus(small_config());
  const std::string path = testing::temp_path("corpus_err");
  write_corpus(path, corpus);
  auto bytes = testing::read_file_bytes(path);

  const std::string bad_magic = testing::temp_path("corpus_badmagic");
  {
    auto mutated = bytes;
    mutated[0] = 'Z';
    std::ofstream out(bad_magic, std::ios::binary);
    out.write(mutated.data(), static_cast<std::streamsize>(mutated.size()));
  }
  try {
    read_corpus(bad_magic);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
  }

  const std::string bad_version = testing::temp_path("corpus_badversion");
  {
    auto mutated = bytes;
    mutated[5] = 9;
    std::ofstream out(bad_version, std::ios::binary);
    out.write(mutated.data(), static_cast<std::streamsize>(mutated.size()));
  }
  try {
    read_corpus(bad_version);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("unsupported version") !=
          std::string::npos);
  }

  const std::string cut = testing::temp_path("corpus_cut");
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 37));
  }
  CHECK_THROWS_AS(read_corpus(cut), TruncationError);

  CHECK_THROWS_AS(read_corpus(testing::temp_path("missing")), FormatError);
}

TEST_CASE("custom narrow ranges still generate feasible corpora") {
  CorpusConfig cfg = small_config();
  cfg.frames_per_token = {1, 1};  // repeats force redraws
  cfg.tokens_per_utt = {2, 4};
  cfg.vocab_size = 2;
  const Corpus corpus = generate_corpus(cfg);
  for (const Sample& s : corpus.train)
    CHECK(ctc_feasible(static_cast<int>(s.features.rows()), s.labels));
}

TEST_CASE("CorpusConfig validation") {
  CorpusConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.vocab_size = 20;  // > feat_bins
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CorpusConfig{};
  cfg.tokens_per_utt = {5, 2};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CorpusConfig{};
  cfg.noise_sigma = {-0.1, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
