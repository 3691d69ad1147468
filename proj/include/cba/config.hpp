// cba/config.hpp

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

#ifndef CBA_CONFIG_HPP_
#define CBA_CONFIG_HPP_

#include <string>

#include "json.hpp"

#include "cba/augment.hpp"
#include "cba/data.hpp"
#include "cba/model.hpp"
#include "cba/policy.hpp"
#include "cba/trainer.hpp"

namespace cba {

// Everything one run needs, parsed from a sectioned key = value file with
// command-line overrides. Unknown sections or keys are errors; every key
// has a documented default (see configs/default.cfg).
struct RunConfig {
  CorpusConfig corpus;
  EncoderConfig encoder;
  TrainConfig train;
  PolicyConfig policy;
  AugmentConfig augment;
  std::string out_dir = "out";
  std::string run_name = "run";

  // The encoder's input_dim / vocab_size always mirror the corpus; call
  // after any mutation of the corpus section.
  void sync_encoder_dims();
  void validate() const;
};

// Parses the sectioned key = value text. Throws ConfigError naming the
// offending section/key on unknown keys or malformed values.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Config echo for output artifacts; from_json(to_json(c)) is equivalent.
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace cba

#endif  // CBA_CONFIG_HPP_
