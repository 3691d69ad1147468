// cba/cli.hpp

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

#ifndef CBA_CLI_HPP_
#define CBA_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "cba/config.hpp"

namespace cba::cli {

// Flags shared by the subcommands. --seed reseeds the corpus, the training
// streams and the parameter init together.
struct CommonArgs {
  std::string config_path;  // empty = defaults
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs_stage1;
  std::optional<int> epochs_stage2;
  std::optional<double> lambda;
  std::optional<std::string> policy_mode;  // minmax | rank
};

RunConfig load_run_config(const CommonArgs& args);

// Writes a CBAD1 dataset and prints the split sizes.
void cmd_gen_data(const CommonArgs& args, const std::string& out_path);

// Trains in the given mode (baseline, da-only, interctc, cba) and writes
// metrics.jsonl, per-epoch checkpoints, the averaged model and report.json
// under out_dir.
void cmd_train(const CommonArgs& args, const std::string& data_path,
               const std::string& mode, const std::string& out_dir);

// Evaluates a checkpoint on the dataset's test split; prints mean loss and
// TER and writes a JSON report when report_path is non-empty.
void cmd_eval(const std::string& model_path, const std::string& data_path,
              const std::string& report_path);

// Runs the 8-row ablation grid; writes ablation.txt / ablation.json under
// out_dir and prints the table.
void cmd_ablate(const CommonArgs& args, const std::string& data_path,
                const std::string& out_dir);

}  // namespace cba::cli

#endif  // CBA_CLI_HPP_
