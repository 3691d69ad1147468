// cba/trainer.hpp

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

#ifndef CBA_TRAINER_HPP_
#define CBA_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cba/augment.hpp"
#include "cba/data.hpp"
#include "cba/model.hpp"
#include "cba/policy.hpp"

namespace cba {

struct TrainConfig {
  double lambda = 0.3;  // InterCTC weight
  int epochs_stage1 = 20;
  int epochs_stage2 = 20;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int warmup_steps = 100;  // linear warmup, then constant rate
  double grad_clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int average_k = 10;
  std::uint64_t seed = 0;
  // Feed the policy loss / |y| instead of the raw per-utterance loss.
  bool normalize_loss_by_length = false;
  // Run the complexity pass on fixed-SpecAugmented features instead of the
  // raw ones (measures difficulty including mask luck).
  bool complexity_on_augmented = false;
  // Average only stage-2 checkpoints instead of the whole run's.
  bool average_stage2_only = false;

  void validate() const;
};

enum class Stage { kStage1, kStage2 };

std::string to_string(Stage stage);

struct EpochReport {
  int epoch = 0;  // global, 1-based across the whole run
  Stage stage = Stage::kStage1;
  double train_loss = 0.0;      // mean fused loss over the epoch's samples
  double train_ctc = 0.0;       // mean final-layer CTC loss
  double train_interctc = 0.0;  // mean InterCTC loss (0 without taps)
  std::optional<double> mean_f_ctc;  // present iff stage 2
  double cv_loss = 0.0;  // mean final-layer CTC loss on CV, unaugmented
  double cv_ter = 0.0;
};

// Per-batch stage-2 diagnostics, kept so the Table-1 direction contract
// (hardest sample gets the fewest masks) can be asserted after a run.
struct BatchDiag {
  int epoch = 0;
  std::vector<double> complexity_losses;
  std::vector<int> time_mask_counts;
  double f_ctc = 1.0;
};

struct StageResult {
  std::vector<Checkpoint> checkpoints;  // one per epoch
  std::vector<EpochReport> reports;
  std::vector<BatchDiag> batch_diags;   // adaptive phases only
  long steps = 0;                       // optimizer steps taken
  long policy_calls = 0;                // compute_batch_complexity calls
};

struct EvalResult {
  double mean_loss = 0.0;
  double ter = 0.0;
};

// One adaptive/non-adaptive training phase. train_stage1/train_stage2 are
// the two shapes the CBA schedule uses; the ablation grid mixes others.
struct StageOptions {
  bool adaptive_da = false;   // per-sample f_DA drives mask counts
  bool adaptive_reg = false;  // per-batch f_CTC scales the InterCTC term
  double lambda = 0.3;
  int epochs = 0;
  int first_epoch = 1;  // global epoch number of this phase's first epoch
  Stage tag = Stage::kStage1;
};

// L_InterCTC: mean CTC loss over the intermediate (non-final) tap lattices.
// Throws std::invalid_argument when no intermediate tap exists.
double inter_ctc_loss(const TapLattices& taps, const LabelSequence& labels);

// (1 - lambda) * l_ctc + f_ctc * lambda * l_inter. With f_ctc = 1 this is
// the plain weighted sum of sub-model and full-model loss.
double fused_loss(double l_ctc, double l_inter, double lambda, double f_ctc);

// The extra forward pass: final-layer CTC loss per sample on un-augmented
// features, no gradients. Optionally length-normalized (loss / |y|).
std::vector<double> complexity_pass(const Parameters& params,
                                    std::span<const Sample> batch,
                                    bool normalize_by_length = false);

// Shared epoch engine behind the two stages; one Adam state per phase.
StageResult run_stage(Parameters& params, const Corpus& corpus,
                      const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                      const AugmentConfig& augment_cfg,
                      const StageOptions& opts);

// Stage 1: fixed SpecAugment counts, InterCTC regularization, no policy.
StageResult train_stage1(Parameters& params, const Corpus& corpus,
                         const TrainConfig& cfg,
                         const AugmentConfig& augment_cfg);

// Stage 2: per batch, a complexity pass feeds the MinMax-IBF policy; f_DA
// scales each sample's masks and f_CTC scales the InterCTC weight.
StageResult train_stage2(Parameters& params, const Corpus& corpus,
                         const TrainConfig& cfg,
                         const PolicyConfig& policy_cfg,
                         const AugmentConfig& augment_cfg);

// Mean final-layer CTC loss plus greedy-decode token error rate; no
// augmentation.
EvalResult evaluate(const Parameters& params, std::span<const Sample> samples);

struct RunResult {
  Parameters params;  // averaged final model
  std::vector<Checkpoint> checkpoints;
  std::vector<EpochReport> reports;
  std::vector<BatchDiag> batch_diags;
  EvalResult test;
  int averaged_k = 0;
  long policy_calls = 0;
};

// Runs the given phases in order from a fresh init, then averages the
// best-cv checkpoints and evaluates on the test split. With zero epochs the
// random-init model is evaluated as a pipeline smoke.
RunResult run_plan(const Corpus& corpus, const EncoderConfig& encoder_cfg,
                   const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                   const AugmentConfig& augment_cfg,
                   std::span<const StageOptions> phases);

// The CBA schedule: stage 1 for epochs_stage1, stage 2 for epochs_stage2.
RunResult run_cba(const Corpus& corpus, const EncoderConfig& encoder_cfg,
                  const TrainConfig& cfg, const PolicyConfig& policy_cfg,
                  const AugmentConfig& augment_cfg);

enum class TrainMode { kBaseline, kDaOnly, kInterCtc, kCba };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

// Phase schedule for a training mode under the equal-total-epoch contract
// (every mode trains epochs_stage1 + epochs_stage2 epochs).
std::vector<StageOptions> plan_for_mode(TrainMode mode,
                                        const TrainConfig& cfg);

struct AblationRow {
  std::string name;
  double test_ter = 0.0;
  double test_loss = 0.0;
  long policy_calls = 0;
};

// The four Table-4 style rows plus the four from-scratch vs continued
// rows, all at equal total epochs on the same corpus and seed.
std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const EncoderConfig& encoder_cfg,
                                      const TrainConfig& cfg,
                                      const PolicyConfig& policy_cfg,
                                      const AugmentConfig& augment_cfg);

// JSON-lines metrics: one EpochReport object per line, keys fixed
// (cv_loss, cv_ter, epoch, mean_f_ctc [stage 2 only], stage, train_ctc,
// train_interctc, train_loss).
void write_metrics_jsonl(const std::string& path,
                         std::span<const EpochReport> reports);
std::vector<EpochReport> read_metrics_jsonl(const std::string& path);

}  // namespace cba

#endif  // CBA_TRAINER_HPP_
