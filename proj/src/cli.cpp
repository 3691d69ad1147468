// cli.cpp

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

#include "cba/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cba/errors.hpp"
#include "cba/log.hpp"

namespace cba::cli {

namespace {

namespace fs = std::filesystem;

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

std::string checkpoint_name(int epoch) {
  std::ostringstream ss;
  ss << "epoch_" << std::setfill('0') << std::setw(4) << epoch << ".ckpt";
  return ss.str();
}

}  // namespace

RunConfig load_run_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty()
                      ? RunConfig{}
                      : parse_config_file(args.config_path);
  if (args.seed.has_value()) {
    cfg.corpus.seed = *args.seed;
    cfg.train.seed = *args.seed;
    cfg.encoder.init_seed = *args.seed;
  }
  if (args.epochs_stage1.has_value())
    cfg.train.epochs_stage1 = *args.epochs_stage1;
  if (args.epochs_stage2.has_value())
    cfg.train.epochs_stage2 = *args.epochs_stage2;
  if (args.lambda.has_value()) cfg.train.lambda = *args.lambda;
  if (args.policy_mode.has_value())
    cfg.policy.mode = policy_mode_from_string(*args.policy_mode);
  cfg.sync_encoder_dims();
  cfg.validate();
  return cfg;
}

void cmd_gen_data(const CommonArgs& args, const std::string& out_path) {
  const RunConfig cfg = load_run_config(args);
  const Corpus corpus = generate_corpus(cfg.corpus);
  if (const fs::path parent = fs::path(out_path).parent_path();
      !parent.empty())
    fs::create_directories(parent);
  write_corpus(out_path, corpus);
  std::cout << "wrote " << out_path << ": train=" << corpus.train.size()
            << " cv=" << corpus.cv.size() << " test=" << corpus.test.size()
            << "\n";
}

void cmd_train(const CommonArgs& args, const std::string& data_path,
               const std::string& mode_name, const std::string& out_dir) {
  RunConfig cfg = load_run_config(args);
  const TrainMode mode = train_mode_from_string(mode_name);
  const Corpus corpus = read_corpus(data_path);
  cfg.corpus = corpus.config;  // the dataset is the truth for its section
  cfg.sync_encoder_dims();
  cfg.encoder.validate();

  CBA_LOG_INFO("training mode=" << to_string(mode) << " on " << data_path
                                << " (train=" << corpus.train.size()
                                << ", cv=" << corpus.cv.size()
                                << ", test=" << corpus.test.size() << ")");
  const std::vector<StageOptions> phases = plan_for_mode(mode, cfg.train);
  const RunResult run = run_plan(corpus, cfg.encoder, cfg.train, cfg.policy,
                                 cfg.augment, phases);

  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "checkpoints");
  write_metrics_jsonl((fs::path(out_dir) / "metrics.jsonl").string(),
                      run.reports);
  for (const Checkpoint& ckpt : run.checkpoints)
    write_checkpoint(
        (fs::path(out_dir) / "checkpoints" / checkpoint_name(ckpt.epoch))
            .string(),
        cfg.encoder, ckpt);

  const double avg_cv_loss =
      corpus.cv.empty() ? 0.0 : evaluate(run.params, corpus.cv).mean_loss;
  const int last_epoch =
      run.checkpoints.empty() ? 0 : run.checkpoints.back().epoch;
  write_checkpoint((fs::path(out_dir) / "model_avg.ckpt").string(),
                   cfg.encoder,
                   Checkpoint{run.params.flat, last_epoch, avg_cv_loss});

  const nlohmann::json report{{"run_name", cfg.run_name},
                              {"mode", to_string(mode)},
                              {"test_loss", run.test.mean_loss},
                              {"test_ter", run.test.ter},
                              {"avg_cv_loss", avg_cv_loss},
                              {"averaged_k", run.averaged_k},
                              {"epochs", last_epoch},
                              {"config", run_config_to_json(cfg)}};
  write_json_file((fs::path(out_dir) / "report.json").string(), report);
  std::cout << "mode=" << to_string(mode) << " epochs=" << last_epoch
            << " test_loss=" << run.test.mean_loss
            << " test_ter=" << run.test.ter << "\n";
}

void cmd_eval(const std::string& model_path, const std::string& data_path,
              const std::string& report_path) {
  EncoderConfig enc_cfg;
  const Checkpoint ckpt = read_checkpoint(model_path, &enc_cfg);
  const Corpus corpus = read_corpus(data_path);
  if (enc_cfg.input_dim != corpus.config.feat_bins)
    throw MismatchError("checkpoint expects " +
                        std::to_string(enc_cfg.input_dim) +
                        " feature bins but the dataset has " +
                        std::to_string(corpus.config.feat_bins));
  if (enc_cfg.vocab_size != corpus.config.vocab_size)
    throw MismatchError("checkpoint vocabulary size " +
                        std::to_string(enc_cfg.vocab_size) +
                        " does not match the dataset's " +
                        std::to_string(corpus.config.vocab_size));
  if (corpus.test.empty())
    throw std::invalid_argument("cmd_eval: the dataset's test split is empty");
  const Parameters params{enc_cfg, ckpt.params};
  const EvalResult result = evaluate(params, corpus.test);
  std::cout << "test_loss=" << result.mean_loss << " test_ter=" << result.ter
            << "\n";
  if (!report_path.empty()) {
    write_json_file(report_path,
                    nlohmann::json{{"model", model_path},
                                   {"dataset", data_path},
                                   {"test_loss", result.mean_loss},
                                   {"test_ter", result.ter}});
  }
}

void cmd_ablate(const CommonArgs& args, const std::string& data_path,
                const std::string& out_dir) {
  RunConfig cfg = load_run_config(args);
  const Corpus corpus = read_corpus(data_path);
  cfg.corpus = corpus.config;
  cfg.sync_encoder_dims();
  cfg.encoder.validate();

  const std::vector<AblationRow> rows = run_ablation(
      corpus, cfg.encoder, cfg.train, cfg.policy, cfg.augment);

  // Display width in columns, not bytes (row names contain multibyte
  // characters); continuation bytes do not occupy a column.
  const auto columns = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s)
      if ((c & 0xc0) != 0x80) ++n;
    return n;
  };
  std::size_t width = columns("configuration");
  for (const AblationRow& row : rows)
    width = std::max(width, columns(row.name));
  const auto pad = [&](const std::string& s) {
    return s + std::string(width + 2 - columns(s), ' ');
  };
  std::ostringstream table;
  table << pad("configuration") << std::right << std::setw(10) << "test_ter"
        << std::setw(12) << "test_loss" << "\n";
  table << std::string(width + 24, '-') << "\n";
  for (const AblationRow& row : rows) {
    table << pad(row.name) << std::right << std::fixed
          << std::setprecision(4) << std::setw(10) << row.test_ter
          << std::setw(12) << row.test_loss << "\n";
    table.unsetf(std::ios::fixed);
  }

  fs::create_directories(out_dir);
  std::ofstream txt((fs::path(out_dir) / "ablation.txt").string(),
                    std::ios::trunc);
  txt << table.str();
  nlohmann::json j = nlohmann::json::array();
  for (const AblationRow& row : rows)
    j.push_back(nlohmann::json{{"name", row.name},
                               {"test_ter", row.test_ter},
                               {"test_loss", row.test_loss}});
  write_json_file((fs::path(out_dir) / "ablation.json").string(),
                  nlohmann::json{{"rows", j},
                                 {"config", run_config_to_json(cfg)}});
  std::cout << table.str();
}

}  // namespace cba::cli
