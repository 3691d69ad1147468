// trainer.cpp

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

#include "cba/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "cba/errors.hpp"
#include "cba/log.hpp"

namespace cba {

namespace {

// Stream tags for deriving independent sub-streams from the run seed.
constexpr std::uint64_t kShuffleStream = 0x73687566ULL;     // "shuf"
constexpr std::uint64_t kAugmentStream = 0x61756774ULL;     // "augt"
constexpr std::uint64_t kComplexityStream = 0x636d7078ULL;  // "cmpx"

struct Adam {
  Vector m, v;
  long step = 0;

  explicit Adam(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  void update(Vector& params, Vector& grad, const TrainConfig& cfg) {
    ++step;
    const double norm = grad.norm();
    if (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm)
      grad *= cfg.grad_clip_norm / norm;
    const double warm =
        cfg.warmup_steps > 0
            ? std::min(1.0, static_cast<double>(step) /
                                static_cast<double>(cfg.warmup_steps))
            : 1.0;
    const double lr = cfg.learning_rate * warm;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array().matrix() +
        (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
    const double bias1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bias2 = 1.0 - std::pow(cfg.adam_beta2, step);
    params.array() -= lr * (m.array() / bias1) /
                      ((v.array() / bias2).sqrt() + cfg.adam_epsilon);
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !(lambda <= 1.0))
    throw std::invalid_argument("TrainConfig: lambda must be in [0, 1]");
  if (epochs_stage1 < 0 || epochs_stage2 < 0)
    throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size < 1)
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (warmup_steps < 0)
    throw std::invalid_argument("TrainConfig: warmup_steps must be >= 0");
  if (!(grad_clip_norm >= 0.0))
    throw std::invalid_argument("TrainConfig: grad_clip_norm must be >= 0");
  if (!(adam_beta1 >= 0.0) || adam_beta1 >= 1.0 || !(adam_beta2 >= 0.0) ||
      adam_beta2 >= 1.0 || !(adam_epsilon > 0.0))
    throw std::invalid_argument("TrainConfig: bad Adam hyperparameters");
  if (average_k < 1)
    throw std::invalid_argument("TrainConfig: average_k must be >= 1");
}

std::string to_string(Stage stage) {
  return stage == Stage::kStage1 ? "stage1" : "stage2";
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kDaOnly: return "da-only";
    case TrainMode::kInterCtc: return "interctc";
    case TrainMode::kCba: return "cba";
  }
  throw std::logic_error("unreachable");
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "baseline") return TrainMode::kBaseline;
  if (name == "da-only") return TrainMode::kDaOnly;
  if (name == "interctc") return TrainMode::kInterCtc;
  if (name == "cba") return TrainMode::kCba;
  throw std::invalid_argument(
      "unknown training mode '" + name +
      "' (expected baseline, da-only, interctc or cba)");
}

double inter_ctc_loss(const TapLattices& taps, const LabelSequence& labels) {
  if (taps.intermediate_count() < 1)
    throw std::invalid_argument(
        "inter_ctc_loss: no intermediate taps configured");
  double sum = 0.0;
  for (int i = 0; i < taps.intermediate_count(); ++i)
    sum += ctc_loss_value(taps.lattices[static_cast<std::size_t>(i)], labels);
  return sum / static_cast<double>(taps.intermediate_count());
}

double fused_loss(double l_ctc, double l_inter, double lambda, double f_ctc) {
  if (!std::isfinite(l_ctc) || !std::isfinite(l_inter))
    throw std::invalid_argument("fused_loss: non-finite loss input");
  if (!(lambda >= 0.0) || !(lambda <= 1.0))
    throw std::invalid_argument("fused_loss: lambda must be in [0, 1]");
  if (!(f_ctc >= 0.0) || !(f_ctc <= 1.0))
    throw std::invalid_argument("fused_loss: f_ctc must be in [0, 1]");
  return (1.0 - lambda) * l_ctc + f_ctc * lambda * l_inter;
}

std::vector<double> complexity_pass(const Parameters& params,
                                    std::span<const Sample> batch,
                                    bool normalize_by_length) {
  if (batch.empty())
    throw std::invalid_argument("complexity_pass: empty batch");
  std::vector<double> losses;
  losses.reserve(batch.size());
  for (const Sample& s : batch) {
    const TapLattices taps = forward(params, s.features);
    double loss = ctc_loss_value(taps.final_lattice(), s.labels);
    if (normalize_by_length)
      loss /= std::max<std::size_t>(1, s.labels.tokens.size());
    losses.push_back(loss);
  }
  return losses;
}

StageResult run_stage(Parameters& params, const Corpus& corpus,
                      const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                      const AugmentConfig& augment_cfg,
                      const StageOptions& opts) {
  cfg.validate();
  augment_cfg.validate();
  if (opts.adaptive_da || opts.adaptive_reg) policy_cfg.validate();
  params.config.validate();
  if (opts.epochs < 0)
    throw std::invalid_argument("run_stage: epochs must be >= 0");

  StageResult result;
  if (opts.epochs == 0) return result;

  if (corpus.train.empty())
    throw std::invalid_argument("run_stage: empty training split");
  if (corpus.cv.empty())
    throw std::invalid_argument("run_stage: empty CV split");
  const int n_inter =
      static_cast<int>(params.config.tap_layers.size()) - 1;
  if (opts.lambda > 0.0 && n_inter < 1)
    throw std::invalid_argument(
        "run_stage: lambda > 0 requires at least one intermediate tap");

  const std::size_t n_train = corpus.train.size();
  Adam optimizer(params.flat.size());
  const std::size_t n_taps = params.config.tap_layers.size();

  for (int e = 0; e < opts.epochs; ++e) {
    const int epoch = opts.first_epoch + e;
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(
        cfg.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double sum_total = 0.0, sum_ctc = 0.0, sum_inter = 0.0;
    double sum_f_ctc = 0.0;
    long n_batches = 0;

    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bsz = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.batch_size), n_train - start);

      BatchComplexity bc;
      double f_ctc = 1.0;
      const bool needs_policy = opts.adaptive_da || opts.adaptive_reg;
      if (needs_policy) {
        // Complexity pass on raw features by default; optionally on
        // fixed-SpecAugmented ones from a dedicated stream.
        std::vector<Sample> batch_view;
        batch_view.reserve(bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
          const std::size_t idx = order[start + i];
          Sample view = corpus.train[idx];
          if (cfg.complexity_on_augmented) {
            Rng crng = Rng::derive(cfg.seed,
                                   {kComplexityStream,
                                    static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(idx)});
            view.features =
                fixed_spec_augment(view.features, augment_cfg, crng);
          }
          batch_view.push_back(std::move(view));
        }
        const std::vector<double> losses = complexity_pass(
            params, batch_view, cfg.normalize_loss_by_length);
        bc = compute_batch_complexity(losses, policy_cfg);
        ++result.policy_calls;
        if (opts.adaptive_reg) f_ctc = bc.reg_factor;
      }

      Vector batch_grad = Vector::Zero(params.flat.size());
      double batch_loss = 0.0;
      BatchDiag diag;
      diag.epoch = epoch;
      diag.f_ctc = f_ctc;

      for (std::size_t i = 0; i < bsz; ++i) {
        const std::size_t idx = order[start + i];
        const Sample& sample = corpus.train[idx];
        Rng aug_rng = Rng::derive(cfg.seed,
                                  {kAugmentStream,
                                   static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(idx)});
        FeatureMatrix feat;
        int time_masks;
        if (opts.adaptive_da) {
          feat = adaptive_spec_augment(sample.features, bc.da_factors[i],
                                       augment_cfg, aug_rng);
          time_masks =
              adaptive_mask_count(augment_cfg.max_time_masks,
                                  bc.da_factors[i]);
        } else {
          feat = fixed_spec_augment(sample.features, augment_cfg, aug_rng);
          time_masks = augment_cfg.fixed_time_masks;
        }

        const ForwardTrace trace = forward_trace(params, feat);
        const CtcResult final_res =
            ctc_loss(trace.taps.final_lattice(), sample.labels);

        std::vector<Matrix> seeds(n_taps);
        const double final_coef =
            (1.0 - opts.lambda) / static_cast<double>(bsz);
        if (final_coef != 0.0)
          seeds.back() = final_coef * final_res.grad;

        double l_inter = 0.0;
        const double inter_coef =
            n_inter > 0 ? opts.lambda * f_ctc /
                              (static_cast<double>(bsz) * n_inter)
                        : 0.0;
        if (n_inter > 0) {
          for (int tap = 0; tap < n_inter; ++tap) {
            const auto& lat =
                trace.taps.lattices[static_cast<std::size_t>(tap)];
            if (inter_coef != 0.0) {
              const CtcResult res = ctc_loss(lat, sample.labels);
              l_inter += res.loss;
              seeds[static_cast<std::size_t>(tap)] = inter_coef * res.grad;
            } else {
              l_inter += ctc_loss_value(lat, sample.labels);
            }
          }
          l_inter /= n_inter;
        }

        if (!std::isfinite(final_res.loss) || !std::isfinite(l_inter))
          throw DivergenceError(
              "training diverged: non-finite loss at epoch " +
              std::to_string(epoch) + ", batch " +
              std::to_string(n_batches + 1));
        const double l_total =
            fused_loss(final_res.loss, l_inter, opts.lambda, f_ctc);
        batch_loss += l_total / static_cast<double>(bsz);
        sum_total += l_total;
        sum_ctc += final_res.loss;
        sum_inter += l_inter;

        batch_grad += backward(params, trace, feat, seeds);
        if (needs_policy) {
          diag.complexity_losses.push_back(bc.raw_losses[i]);
          diag.time_mask_counts.push_back(time_masks);
        }
      }

      if (!std::isfinite(batch_loss))
        throw DivergenceError("training diverged: non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(n_batches + 1));
      optimizer.update(params.flat, batch_grad, cfg);
      ++result.steps;
      ++n_batches;
      sum_f_ctc += f_ctc;
      if (needs_policy) result.batch_diags.push_back(std::move(diag));
    }

    EpochReport report;
    report.epoch = epoch;
    report.stage = opts.tag;
    report.train_loss = sum_total / static_cast<double>(n_train);
    report.train_ctc = sum_ctc / static_cast<double>(n_train);
    report.train_interctc = sum_inter / static_cast<double>(n_train);
    if (opts.tag == Stage::kStage2)
      report.mean_f_ctc = sum_f_ctc / static_cast<double>(n_batches);
    const EvalResult cv = evaluate(params, corpus.cv);
    report.cv_loss = cv.mean_loss;
    report.cv_ter = cv.ter;
    result.reports.push_back(report);
    result.checkpoints.push_back(Checkpoint{params.flat, epoch, cv.mean_loss});
    CBA_LOG_DEBUG("epoch " << epoch << " (" << to_string(opts.tag)
                           << ") train_loss=" << report.train_loss
                           << " cv_loss=" << report.cv_loss
                           << " cv_ter=" << report.cv_ter);
  }
  return result;
}

StageResult train_stage1(Parameters& params, const Corpus& corpus,
                         const TrainConfig& cfg,
                         const AugmentConfig& augment_cfg) {
  StageOptions opts;
  opts.adaptive_da = false;
  opts.adaptive_reg = false;
  opts.lambda = cfg.lambda;
  opts.epochs = cfg.epochs_stage1;
  opts.first_epoch = 1;
  opts.tag = Stage::kStage1;
  return run_stage(params, corpus, cfg, PolicyConfig{}, augment_cfg, opts);
}

StageResult train_stage2(Parameters& params, const Corpus& corpus,
                         const TrainConfig& cfg,
                         const PolicyConfig& policy_cfg,
                         const AugmentConfig& augment_cfg) {
  StageOptions opts;
  opts.adaptive_da = true;
  opts.adaptive_reg = true;
  opts.lambda = cfg.lambda;
  opts.epochs = cfg.epochs_stage2;
  opts.first_epoch = cfg.epochs_stage1 + 1;
  opts.tag = Stage::kStage2;
  return run_stage(params, corpus, cfg, policy_cfg, augment_cfg, opts);
}

EvalResult evaluate(const Parameters& params,
                    std::span<const Sample> samples) {
  if (samples.empty())
    throw std::invalid_argument("evaluate: empty sample set");
  double sum_loss = 0.0;
  std::vector<LabelSequence> hyps, refs;
  hyps.reserve(samples.size());
  refs.reserve(samples.size());
  for (const Sample& s : samples) {
    const TapLattices taps = forward(params, s.features);
    sum_loss += ctc_loss_value(taps.final_lattice(), s.labels);
    hyps.push_back(greedy_decode(taps.final_lattice()));
    refs.push_back(s.labels);
  }
  return EvalResult{sum_loss / static_cast<double>(samples.size()),
                    token_error_rate(hyps, refs)};
}

RunResult run_plan(const Corpus& corpus, const EncoderConfig& encoder_cfg,
                   const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                   const AugmentConfig& augment_cfg,
                   std::span<const StageOptions> phases) {
  cfg.validate();
  RunResult run{init_parameters(encoder_cfg), {}, {}, {}, {}, 0, 0};
  std::vector<Checkpoint> stage2_checkpoints;
  int next_epoch = 1;
  for (StageOptions opts : phases) {
    opts.first_epoch = next_epoch;
    next_epoch += opts.epochs;
    StageResult stage = run_stage(run.params, corpus, cfg, policy_cfg,
                                  augment_cfg, opts);
    if (opts.tag == Stage::kStage2)
      stage2_checkpoints.insert(stage2_checkpoints.end(),
                                stage.checkpoints.begin(),
                                stage.checkpoints.end());
    std::move(stage.checkpoints.begin(), stage.checkpoints.end(),
              std::back_inserter(run.checkpoints));
    std::move(stage.reports.begin(), stage.reports.end(),
              std::back_inserter(run.reports));
    std::move(stage.batch_diags.begin(), stage.batch_diags.end(),
              std::back_inserter(run.batch_diags));
    run.policy_calls += stage.policy_calls;
  }
  const std::vector<Checkpoint>& pool =
      cfg.average_stage2_only && !stage2_checkpoints.empty()
          ? stage2_checkpoints
          : run.checkpoints;
  if (!pool.empty()) {
    run.averaged_k = std::min<int>(cfg.average_k,
                                   static_cast<int>(pool.size()));
    run.params = average_checkpoints(pool, cfg.average_k, encoder_cfg);
  }
  run.test = evaluate(run.params, corpus.test);
  return run;
}

RunResult run_cba(const Corpus& corpus, const EncoderConfig& encoder_cfg,
                  const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                  const AugmentConfig& augment_cfg) {
  return run_plan(corpus, encoder_cfg, cfg, policy_cfg, augment_cfg,
                  plan_for_mode(TrainMode::kCba, cfg));
}

std::vector<StageOptions> plan_for_mode(TrainMode mode,
                                        const TrainConfig& cfg) {
  const int total = cfg.epochs_stage1 + cfg.epochs_stage2;
  auto phase = [](bool ada, bool areg, double lam, int epochs, Stage tag) {
    StageOptions o;
    o.adaptive_da = ada;
    o.adaptive_reg = areg;
    o.lambda = lam;
    o.epochs = epochs;
    o.tag = tag;
    return o;
  };
  switch (mode) {
    case TrainMode::kBaseline:
      return {phase(false, false, 0.0, total, Stage::kStage1)};
    case TrainMode::kDaOnly:
      return {phase(false, false, 0.0, cfg.epochs_stage1, Stage::kStage1),
              phase(true, false, 0.0, cfg.epochs_stage2, Stage::kStage2)};
    case TrainMode::kInterCtc:
      return {phase(false, false, cfg.lambda, cfg.epochs_stage1,
                    Stage::kStage1),
              phase(true, false, cfg.lambda, cfg.epochs_stage2,
                    Stage::kStage2)};
    case TrainMode::kCba:
      return {phase(false, false, cfg.lambda, cfg.epochs_stage1,
                    Stage::kStage1),
              phase(true, true, cfg.lambda, cfg.epochs_stage2,
                    Stage::kStage2)};
  }
  throw std::logic_error("unreachable");
}

std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const EncoderConfig& encoder_cfg,
                                      const TrainConfig& cfg,
                                      const PolicyConfig& policy_cfg,
                                      const AugmentConfig& augment_cfg) {
  const int total = cfg.epochs_stage1 + cfg.epochs_stage2;
  auto phase = [](bool ada, bool areg, double lam, int epochs, Stage tag) {
    StageOptions o;
    o.adaptive_da = ada;
    o.adaptive_reg = areg;
    o.lambda = lam;
    o.epochs = epochs;
    o.tag = tag;
    return o;
  };
  const std::vector<std::pair<std::string, std::vector<StageOptions>>> grid =
      {
          {"SpecAug, without policy",
           plan_for_mode(TrainMode::kBaseline, cfg)},
          {"+ MinMax-IBF DA", plan_for_mode(TrainMode::kDaOnly, cfg)},
          {"+ Regularization(R)", plan_for_mode(TrainMode::kInterCtc, cfg)},
          {"+ Adaptive R (AR)", plan_for_mode(TrainMode::kCba, cfg)},
          {"FS ∪ MinMax-IBF DA",
           {phase(true, false, cfg.lambda, total, Stage::kStage2)}},
          {"CT ∪ MinMax-IBF DA", plan_for_mode(TrainMode::kInterCtc,
                                                    cfg)},
          {"FS ∪ MinMax-IBF DA+AR",
           {phase(true, true, cfg.lambda, total, Stage::kStage2)}},
          {"CT ∪ MinMax-IBF DA+AR", plan_for_mode(TrainMode::kCba, cfg)},
      };
  std::vector<AblationRow> rows;
  rows.reserve(grid.size());
  for (const auto& [name, phases] : grid) {
    CBA_LOG_INFO("ablation: running '" << name << "'");
    const RunResult run = run_plan(corpus, encoder_cfg, cfg, policy_cfg,
                                   augment_cfg, phases);
    rows.push_back(
        AblationRow{name, run.test.ter, run.test.mean_loss,
                    run.policy_calls});
  }
  return rows;
}

void write_metrics_jsonl(const std::string& path,
                         std::span<const EpochReport> reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw FormatError("cannot open '" + path + "' for writing");
  for (const EpochReport& r : reports) {
    nlohmann::json j{{"epoch", r.epoch},
                     {"stage", to_string(r.stage)},
                     {"train_loss", r.train_loss},
                     {"train_ctc", r.train_ctc},
                     {"train_interctc", r.train_interctc},
                     {"cv_loss", r.cv_loss},
                     {"cv_ter", r.cv_ter}};
    if (r.mean_f_ctc.has_value()) j["mean_f_ctc"] = *r.mean_f_ctc;
    out << j.dump() << "\n";
  }
}

std::vector<EpochReport> read_metrics_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::vector<EpochReport> reports;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    EpochReport r;
    r.epoch = j.at("epoch").get<int>();
    r.stage = j.at("stage").get<std::string>() == "stage2" ? Stage::kStage2
                                                           : Stage::kStage1;
    r.train_loss = j.at("train_loss").get<double>();
    r.train_ctc = j.at("train_ctc").get<double>();
    r.train_interctc = j.at("train_interctc").get<double>();
    if (j.contains("mean_f_ctc"))
      r.mean_f_ctc = j.at("mean_f_ctc").get<double>();
    r.cv_loss = j.at("cv_loss").get<double>();
    r.cv_ter = j.at("cv_ter").get<double>();
    reports.push_back(r);
  }
  return reports;
}

}  // namespace cba
