// cba/model.hpp

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

#ifndef CBA_MODEL_HPP_
#define CBA_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cba/ctc.hpp"
#include "cba/types.hpp"

namespace cba {

struct EncoderConfig {
  int input_dim = 16;   // F
  int hidden_dim = 32;  // H
  int num_layers = 6;   // L
  std::vector<int> tap_layers = {2, 4, 6};  // sorted, must contain L
  int vocab_size = 8;   // V, excluding blank
  std::uint64_t init_seed = 0;

  void validate() const;
};

// Encoder parameters as one flat vector. Layout, in order:
//   W_in   H x F    row-major
//   b_in   H
//   per layer l = 1..L:
//     W_l  H x 3H   row-major
//     b_l  H
//   W_out  (V+1) x H row-major   (output head shared across taps)
//   b_out  V+1
struct Parameters {
  EncoderConfig config;
  Vector flat;

  static Eigen::Index flat_size(const EncoderConfig& cfg);

  Eigen::Index input_offset() const { return 0; }
  Eigen::Index layer_offset(int layer) const;  // layer in [1, L]
  Eigen::Index head_offset() const;
};

// Per-tap log-probability lattices from one forward pass; `lattices[i]`
// comes from hidden layer `tap_layers[i]`. The last entry is always the
// final layer.
struct TapLattices {
  std::vector<int> tap_layers;
  std::vector<LogProbLattice> lattices;

  const LogProbLattice& final_lattice() const { return lattices.back(); }
  int intermediate_count() const {
    return static_cast<int>(lattices.size()) - 1;
  }
};

// Forward activations cached for the backward pass.
struct ForwardTrace {
  TapLattices taps;
  std::vector<Matrix> hidden;  // hidden[l] = h^l, l = 0..L, each T x H
  std::vector<Matrix> mix;     // mix[l-1] = tanh(W_l [...] + b_l), T x H
};

// h^0 = tanh(W_in x_t + b_in);
// h^l_t = h^{l-1}_t + tanh(W_l [h^{l-1}_{t-1}; h^{l-1}_t; h^{l-1}_{t+1}] + b_l)
// with zero vectors at the sequence boundaries; every tap layer emits
// log_softmax(W_out h^tap_t + b_out). Deterministic: no dropout, no
// normalization, so the complexity pass sees exactly the training forward.
TapLattices forward(const Parameters& params, const FeatureMatrix& feat);
ForwardTrace forward_trace(const Parameters& params, const FeatureMatrix& feat);

// Gradient of sum_tap <lattice_grads[tap], lattice_tap> w.r.t. the flat
// parameter vector. `lattice_grads` is keyed by position in the tap set; a
// tap whose gradient matrix is empty (0 x 0) contributes nothing and is
// skipped. Throws std::invalid_argument on a tap-set size mismatch.
Vector backward(const Parameters& params, const FeatureMatrix& feat,
                const std::vector<Matrix>& lattice_grads);
Vector backward(const Parameters& params, const ForwardTrace& trace,
                const FeatureMatrix& feat,
                const std::vector<Matrix>& lattice_grads);

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] drawn in flat-layout
// order from Rng(cfg.init_seed); biases zero (no draws).
Parameters init_parameters(const EncoderConfig& cfg);

struct Checkpoint {
  Vector params;
  int epoch = 0;
  double cv_loss = 0.0;
};

// Element-wise mean of the k checkpoints with lowest cv_loss (ties broken by
// lower epoch). k is clamped to the list length.
Parameters average_checkpoints(const std::vector<Checkpoint>& checkpoints,
                               int k, const EncoderConfig& cfg);

// Checkpoint file, little-endian:
//   magic "CBAC1"
//   u32 F, u32 H, u32 L, u32 V, u32 n_taps, u32 taps[n_taps]
//   i32 epoch, f64 cv_loss
//   u64 param_count, f64 params[param_count]
void write_checkpoint(const std::string& path, const EncoderConfig& cfg,
                      const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path, EncoderConfig* cfg_out);

}  // namespace cba

#endif  // CBA_MODEL_HPP_
