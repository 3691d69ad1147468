// config.cpp

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

#include "cba/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cba/errors.hpp"

namespace cba {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [p, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + value +
                      "' as an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [p, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || p != value.data() + value.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + value +
                      "' as an unsigned integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value +
                      "' as a real number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + value +
                    "' as a boolean (true/false)");
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("config key '" + key + "': empty list element");
    out.push_back(parse_int(key, item));
  }
  if (out.empty())
    throw ConfigError("config key '" + key + "': empty list");
  return out;
}

void apply_key(RunConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value) {
  const std::string full = "[" + section + "] " + key;
  if (section == "corpus") {
    auto& c = cfg.corpus;
    if (key == "vocab_size") c.vocab_size = parse_int(full, value);
    else if (key == "feat_bins") c.feat_bins = parse_int(full, value);
    else if (key == "tokens_min") c.tokens_per_utt.lo = parse_int(full, value);
    else if (key == "tokens_max") c.tokens_per_utt.hi = parse_int(full, value);
    else if (key == "frames_min")
      c.frames_per_token.lo = parse_int(full, value);
    else if (key == "frames_max")
      c.frames_per_token.hi = parse_int(full, value);
    else if (key == "noise_min") c.noise_sigma.lo = parse_double(full, value);
    else if (key == "noise_max") c.noise_sigma.hi = parse_double(full, value);
    else if (key == "train_count") c.train_count = parse_int(full, value);
    else if (key == "cv_count") c.cv_count = parse_int(full, value);
    else if (key == "test_count") c.test_count = parse_int(full, value);
    else if (key == "seed") c.seed = parse_u64(full, value);
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else if (section == "encoder") {
    auto& e = cfg.encoder;
    if (key == "hidden_dim") e.hidden_dim = parse_int(full, value);
    else if (key == "num_layers") e.num_layers = parse_int(full, value);
    else if (key == "tap_layers") e.tap_layers = parse_int_list(full, value);
    else if (key == "init_seed") e.init_seed = parse_u64(full, value);
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else if (section == "train") {
    auto& t = cfg.train;
    if (key == "lambda") t.lambda = parse_double(full, value);
    else if (key == "epochs_stage1") t.epochs_stage1 = parse_int(full, value);
    else if (key == "epochs_stage2") t.epochs_stage2 = parse_int(full, value);
    else if (key == "batch_size") t.batch_size = parse_int(full, value);
    else if (key == "learning_rate")
      t.learning_rate = parse_double(full, value);
    else if (key == "warmup_steps") t.warmup_steps = parse_int(full, value);
    else if (key == "grad_clip_norm")
      t.grad_clip_norm = parse_double(full, value);
    else if (key == "adam_beta1") t.adam_beta1 = parse_double(full, value);
    else if (key == "adam_beta2") t.adam_beta2 = parse_double(full, value);
    else if (key == "adam_epsilon") t.adam_epsilon = parse_double(full, value);
    else if (key == "average_k") t.average_k = parse_int(full, value);
    else if (key == "seed") t.seed = parse_u64(full, value);
    else if (key == "normalize_loss_by_length")
      t.normalize_loss_by_length = parse_bool(full, value);
    else if (key == "complexity_on_augmented")
      t.complexity_on_augmented = parse_bool(full, value);
    else if (key == "average_stage2_only")
      t.average_stage2_only = parse_bool(full, value);
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else if (section == "policy") {
    auto& p = cfg.policy;
    if (key == "s") p.s = parse_double(full, value);
    else if (key == "a") p.a = parse_double(full, value);
    else if (key == "mode") {
      try {
        p.mode = policy_mode_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key '") + key + "': " +
                          e.what());
      }
    } else if (key == "ibf_tolerance")
      p.ibf_tolerance = parse_double(full, value);
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else if (section == "augment") {
    auto& a = cfg.augment;
    if (key == "max_time_masks") a.max_time_masks = parse_int(full, value);
    else if (key == "max_freq_masks")
      a.max_freq_masks = parse_int(full, value);
    else if (key == "max_time_width")
      a.max_time_width = parse_int(full, value);
    else if (key == "max_freq_width")
      a.max_freq_width = parse_int(full, value);
    else if (key == "fixed_time_masks")
      a.fixed_time_masks = parse_int(full, value);
    else if (key == "fixed_freq_masks")
      a.fixed_freq_masks = parse_int(full, value);
    else if (key == "fill_value") a.fill_value = parse_double(full, value);
    else if (key == "adaptive_freq_masks")
      a.adaptive_freq_masks = parse_bool(full, value);
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else if (section == "run") {
    if (key == "out_dir") cfg.out_dir = value;
    else if (key == "run_name") cfg.run_name = value;
    else throw ConfigError("unknown config key '" + key + "' in section [" +
                           section + "]");
  } else {
    throw ConfigError("unknown config section [" + section + "]");
  }
}

}  // namespace

void RunConfig::sync_encoder_dims() {
  encoder.input_dim = corpus.feat_bins;
  encoder.vocab_size = corpus.vocab_size;
}

void RunConfig::validate() const {
  corpus.validate();
  encoder.validate();
  train.validate();
  policy.validate();
  augment.validate();
  if (encoder.input_dim != corpus.feat_bins ||
      encoder.vocab_size != corpus.vocab_size)
    throw ConfigError("encoder dims out of sync with the corpus section");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip inline comments: a '#' or ';' preceded by whitespace.
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') &&
          (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' appears before any [section]");
    apply_key(cfg, section, key, value);
  }
  cfg.sync_encoder_dims();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"corpus",
       {{"vocab_size", cfg.corpus.vocab_size},
        {"feat_bins", cfg.corpus.feat_bins},
        {"tokens_min", cfg.corpus.tokens_per_utt.lo},
        {"tokens_max", cfg.corpus.tokens_per_utt.hi},
        {"frames_min", cfg.corpus.frames_per_token.lo},
        {"frames_max", cfg.corpus.frames_per_token.hi},
        {"noise_min", cfg.corpus.noise_sigma.lo},
        {"noise_max", cfg.corpus.noise_sigma.hi},
        {"train_count", cfg.corpus.train_count},
        {"cv_count", cfg.corpus.cv_count},
        {"test_count", cfg.corpus.test_count},
        {"seed", cfg.corpus.seed}}},
      {"encoder",
       {{"hidden_dim", cfg.encoder.hidden_dim},
        {"num_layers", cfg.encoder.num_layers},
        {"tap_layers", cfg.encoder.tap_layers},
        {"init_seed", cfg.encoder.init_seed}}},
      {"train",
       {{"lambda", cfg.train.lambda},
        {"epochs_stage1", cfg.train.epochs_stage1},
        {"epochs_stage2", cfg.train.epochs_stage2},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"warmup_steps", cfg.train.warmup_steps},
        {"grad_clip_norm", cfg.train.grad_clip_norm},
        {"adam_beta1", cfg.train.adam_beta1},
        {"adam_beta2", cfg.train.adam_beta2},
        {"adam_epsilon", cfg.train.adam_epsilon},
        {"average_k", cfg.train.average_k},
        {"seed", cfg.train.seed},
        {"normalize_loss_by_length", cfg.train.normalize_loss_by_length},
        {"complexity_on_augmented", cfg.train.complexity_on_augmented},
        {"average_stage2_only", cfg.train.average_stage2_only}}},
      {"policy",
       {{"s", cfg.policy.s},
        {"a", cfg.policy.a},
        {"mode", to_string(cfg.policy.mode)},
        {"ibf_tolerance", cfg.policy.ibf_tolerance}}},
      {"augment",
       {{"max_time_masks", cfg.augment.max_time_masks},
        {"max_freq_masks", cfg.augment.max_freq_masks},
        {"max_time_width", cfg.augment.max_time_width},
        {"max_freq_width", cfg.augment.max_freq_width},
        {"fixed_time_masks", cfg.augment.fixed_time_masks},
        {"fixed_freq_masks", cfg.augment.fixed_freq_masks},
        {"fill_value", cfg.augment.fill_value},
        {"adaptive_freq_masks", cfg.augment.adaptive_freq_masks}}},
      {"run", {{"out_dir", cfg.out_dir}, {"run_name", cfg.run_name}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  const auto& c = j.at("corpus");
  cfg.corpus.vocab_size = c.at("vocab_size").get<int>();
  cfg.corpus.feat_bins = c.at("feat_bins").get<int>();
  cfg.corpus.tokens_per_utt = {c.at("tokens_min").get<int>(),
                               c.at("tokens_max").get<int>()};
  cfg.corpus.frames_per_token = {c.at("frames_min").get<int>(),
                                 c.at("frames_max").get<int>()};
  cfg.corpus.noise_sigma = {c.at("noise_min").get<double>(),
                            c.at("noise_max").get<double>()};
  cfg.corpus.train_count = c.at("train_count").get<int>();
  cfg.corpus.cv_count = c.at("cv_count").get<int>();
  cfg.corpus.test_count = c.at("test_count").get<int>();
  cfg.corpus.seed = c.at("seed").get<std::uint64_t>();
  const auto& e = j.at("encoder");
  cfg.encoder.hidden_dim = e.at("hidden_dim").get<int>();
  cfg.encoder.num_layers = e.at("num_layers").get<int>();
  cfg.encoder.tap_layers = e.at("tap_layers").get<std::vector<int>>();
  cfg.encoder.init_seed = e.at("init_seed").get<std::uint64_t>();
  const auto& t = j.at("train");
  cfg.train.lambda = t.at("lambda").get<double>();
  cfg.train.epochs_stage1 = t.at("epochs_stage1").get<int>();
  cfg.train.epochs_stage2 = t.at("epochs_stage2").get<int>();
  cfg.train.batch_size = t.at("batch_size").get<int>();
  cfg.train.learning_rate = t.at("learning_rate").get<double>();
  cfg.train.warmup_steps = t.at("warmup_steps").get<int>();
  cfg.train.grad_clip_norm = t.at("grad_clip_norm").get<double>();
  cfg.train.adam_beta1 = t.at("adam_beta1").get<double>();
  cfg.train.adam_beta2 = t.at("adam_beta2").get<double>();
  cfg.train.adam_epsilon = t.at("adam_epsilon").get<double>();
  cfg.train.average_k = t.at("average_k").get<int>();
  cfg.train.seed = t.at("seed").get<std::uint64_t>();
  cfg.train.normalize_loss_by_length =
      t.at("normalize_loss_by_length").get<bool>();
  cfg.train.complexity_on_augmented =
      t.at("complexity_on_augmented").get<bool>();
  cfg.train.average_stage2_only = t.at("average_stage2_only").get<bool>();
  const auto& p = j.at("policy");
  cfg.policy.s = p.at("s").get<double>();
  cfg.policy.a = p.at("a").get<double>();
  cfg.policy.mode = policy_mode_from_string(p.at("mode").get<std::string>());
  cfg.policy.ibf_tolerance = p.at("ibf_tolerance").get<double>();
  const auto& a = j.at("augment");
  cfg.augment.max_time_masks = a.at("max_time_masks").get<int>();
  cfg.augment.max_freq_masks = a.at("max_freq_masks").get<int>();
  cfg.augment.max_time_width = a.at("max_time_width").get<int>();
  cfg.augment.max_freq_width = a.at("max_freq_width").get<int>();
  cfg.augment.fixed_time_masks = a.at("fixed_time_masks").get<int>();
  cfg.augment.fixed_freq_masks = a.at("fixed_freq_masks").get<int>();
  cfg.augment.fill_value = a.at("fill_value").get<double>();
  cfg.augment.adaptive_freq_masks = a.at("adaptive_freq_masks").get<bool>();
  cfg.out_dir = j.at("run").at("out_dir").get<std::string>();
  cfg.run_name = j.at("run").at("run_name").get<std::string>();
  cfg.sync_encoder_dims();
  return cfg;
}

}  // namespace cba
