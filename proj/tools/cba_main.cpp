// cba_main.cpp

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

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cba/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Complexity-boosted adaptive (CBA) training toolkit"};
  app.require_subcommand(1);

  cba::cli::CommonArgs common;
  auto add_common = [&common](CLI::App* sub, bool with_train_flags) {
    sub->add_option("--config", common.config_path,
                    "sectioned key = value config file");
    sub->add_option("--seed", common.seed,
                    "reseeds corpus, training and parameter init together");
    if (with_train_flags) {
      sub->add_option("--epochs-stage1", common.epochs_stage1,
                      "override [train] epochs_stage1");
      sub->add_option("--epochs-stage2", common.epochs_stage2,
                      "override [train] epochs_stage2");
      sub->add_option("--lambda", common.lambda,
                      "override the InterCTC weight");
      sub->add_option("--policy", common.policy_mode,
                      "normalization policy: minmax or rank")
          ->check(CLI::IsMember({"minmax", "rank"}));
    }
  };

  std::string out_path = "dataset.cbad";
  std::string data_path;
  std::string out_dir = "out";
  std::string mode = "cba";
  std::string model_path;
  std::string report_path;

  CLI::App* gen = app.add_subcommand("gen-data",
                                     "generate a synthetic CBAD1 dataset");
  add_common(gen, false);
  gen->add_option("--out", out_path, "output dataset path");

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train, true);
  train->add_option("--data", data_path, "CBAD1 dataset")->required();
  train->add_option("--mode", mode,
                    "baseline | da-only | interctc | cba")
      ->check(CLI::IsMember({"baseline", "da-only", "interctc", "cba"}));
  train->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval",
                                      "evaluate a checkpoint on a dataset");
  eval->add_option("--model", model_path, "CBAC1 checkpoint")->required();
  eval->add_option("--data", data_path, "CBAD1 dataset")->required();
  eval->add_option("--out", report_path, "JSON report path (optional)");

  CLI::App* ablate = app.add_subcommand("ablate",
                                        "run the 8-row ablation grid");
  add_common(ablate, true);
  ablate->add_option("--data", data_path, "CBAD1 dataset")->required();
  ablate->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cba::cli::cmd_gen_data(common, out_path);
    } else if (train->parsed()) {
      cba::cli::cmd_train(common, data_path, mode, out_dir);
    } else if (eval->parsed()) {
      cba::cli::cmd_eval(model_path, data_path, report_path);
    } else if (ablate->parsed()) {
      cba::cli::cmd_ablate(common, data_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
