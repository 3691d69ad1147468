// model.cpp

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

#include "cba/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "cba/errors.hpp"
#include "cba/io_util.hpp"
#include "cba/rng.hpp"

namespace cba {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMajorMatrix>;
using ConstMapRM = Eigen::Map<const RowMajorMatrix>;
using MapVec = Eigen::Map<Vector>;
using ConstMapVec = Eigen::Map<const Vector>;

struct Blocks {
  ConstMapRM w_in;
  ConstMapVec b_in;
  std::vector<ConstMapRM> w_mix;
  std::vector<ConstMapVec> b_mix;
  ConstMapRM w_out;
  ConstMapVec b_out;
};

Blocks view(const Parameters& p) {
  const auto& c = p.config;
  const double* base = p.flat.data();
  Blocks b{ConstMapRM(base, c.hidden_dim, c.input_dim),
           ConstMapVec(base + c.hidden_dim * c.input_dim, c.hidden_dim),
           {},
           {},
           ConstMapRM(base + p.head_offset(), c.vocab_size + 1, c.hidden_dim),
           ConstMapVec(base + p.head_offset() +
                           (c.vocab_size + 1) * c.hidden_dim,
                       c.vocab_size + 1)};
  for (int l = 1; l <= c.num_layers; ++l) {
    const double* at = base + p.layer_offset(l);
    b.w_mix.emplace_back(at, c.hidden_dim, 3 * c.hidden_dim);
    b.b_mix.emplace_back(at + 3 * c.hidden_dim * c.hidden_dim, c.hidden_dim);
  }
  return b;
}

// [h_{t-1}; h_t; h_{t+1}] per row, zero-padded at the boundaries.
Matrix neighbor_concat(const Matrix& h) {
  const Eigen::Index frames = h.rows(), dim = h.cols();
  Matrix c = Matrix::Zero(frames, 3 * dim);
  if (frames > 1) {
    c.block(1, 0, frames - 1, dim) = h.topRows(frames - 1);
    c.block(0, 2 * dim, frames - 1, dim) = h.bottomRows(frames - 1);
  }
  c.middleCols(dim, dim) = h;
  return c;
}

LogProbLattice head_lattice(const Blocks& b, const Matrix& hidden,
                            int vocab_size) {
  Matrix logits = hidden * b.w_out.transpose();
  logits.rowwise() += b.b_out.transpose();
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double m = logits.row(t).maxCoeff();
    const double lse = m + std::log((logits.row(t).array() - m).exp().sum());
    logits.row(t).array() -= lse;
  }
  return LogProbLattice{std::move(logits), vocab_size};
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1 || vocab_size < 1)
    throw std::invalid_argument("EncoderConfig: all dims must be >= 1");
  if (tap_layers.empty() ||
      !std::is_sorted(tap_layers.begin(), tap_layers.end()) ||
      std::adjacent_find(tap_layers.begin(), tap_layers.end()) !=
          tap_layers.end())
    throw std::invalid_argument(
        "EncoderConfig: tap_layers must be sorted and unique");
  if (tap_layers.front() < 1 || tap_layers.back() != num_layers)
    throw std::invalid_argument(
        "EncoderConfig: tap_layers must lie in [1, L] and contain L");
}

Eigen::Index Parameters::flat_size(const EncoderConfig& cfg) {
  const Eigen::Index f = cfg.input_dim, h = cfg.hidden_dim,
                     l = cfg.num_layers, v1 = cfg.vocab_size + 1;
  return h * f + h + l * (h * 3 * h + h) + v1 * h + v1;
}

Eigen::Index Parameters::layer_offset(int layer) const {
  const Eigen::Index f = config.input_dim, h = config.hidden_dim;
  return h * f + h + static_cast<Eigen::Index>(layer - 1) * (3 * h * h + h);
}

Eigen::Index Parameters::head_offset() const {
  return layer_offset(config.num_layers + 1);
}

ForwardTrace forward_trace(const Parameters& params,
                           const FeatureMatrix& feat) {
  const auto& cfg = params.config;
  if (feat.cols() != cfg.input_dim)
    throw std::invalid_argument(
        "forward: feature matrix has " + std::to_string(feat.cols()) +
        " bins, encoder expects " + std::to_string(cfg.input_dim));
  if (params.flat.size() != Parameters::flat_size(cfg))
    throw std::invalid_argument("forward: flat parameter size mismatch");

  const Blocks b = view(params);
  ForwardTrace trace;
  trace.hidden.reserve(static_cast<std::size_t>(cfg.num_layers) + 1);
  trace.mix.reserve(static_cast<std::size_t>(cfg.num_layers));

  Matrix h = (feat * b.w_in.transpose()).rowwise() + b.b_in.transpose();
  h = h.array().tanh();
  trace.hidden.push_back(h);

  std::size_t next_tap = 0;
  trace.taps.tap_layers = cfg.tap_layers;
  for (int l = 1; l <= cfg.num_layers; ++l) {
    Matrix z = (neighbor_concat(h) *
                b.w_mix[static_cast<std::size_t>(l - 1)].transpose())
                   .rowwise() +
               b.b_mix[static_cast<std::size_t>(l - 1)].transpose();
    z = z.array().tanh();
    h += z;
    trace.mix.push_back(std::move(z));
    trace.hidden.push_back(h);
    if (next_tap < cfg.tap_layers.size() &&
        cfg.tap_layers[next_tap] == l) {
      trace.taps.lattices.push_back(head_lattice(b, h, cfg.vocab_size));
      ++next_tap;
    }
  }
  return trace;
}

TapLattices forward(const Parameters& params, const FeatureMatrix& feat) {
  return forward_trace(params, feat).taps;
}

Vector backward(const Parameters& params, const ForwardTrace& trace,
                const FeatureMatrix& feat,
                const std::vector<Matrix>& lattice_grads) {
  const auto& cfg = params.config;
  if (lattice_grads.size() != cfg.tap_layers.size())
    throw std::invalid_argument(
        "backward: expected " + std::to_string(cfg.tap_layers.size()) +
        " tap gradients, got " + std::to_string(lattice_grads.size()));

  const Blocks b = view(params);
  const Eigen::Index frames = feat.rows(), hd = cfg.hidden_dim;
  Vector grad = Vector::Zero(params.flat.size());
  MapRM g_w_out(grad.data() + params.head_offset(), cfg.vocab_size + 1, hd);
  MapVec g_b_out(grad.data() + params.head_offset() +
                     (cfg.vocab_size + 1) * hd,
                 cfg.vocab_size + 1);

  // Head backprop per tap; hidden-state gradients are injected at the tap's
  // layer and accumulated while descending the residual chain below.
  std::vector<Matrix> injected(static_cast<std::size_t>(cfg.num_layers) + 1);
  for (std::size_t i = 0; i < lattice_grads.size(); ++i) {
    const Matrix& g_lat = lattice_grads[i];
    if (g_lat.size() == 0) continue;
    const int layer = cfg.tap_layers[i];
    const Matrix& lat = trace.taps.lattices[i].values;
    if (g_lat.rows() != lat.rows() || g_lat.cols() != lat.cols())
      throw std::invalid_argument("backward: tap gradient shape mismatch");
    // log-softmax backprop: dlogits = g - exp(lat) * rowsum(g)
    Matrix dlogits = g_lat;
    const Vector rowsum = g_lat.rowwise().sum();
    dlogits.noalias() -= rowsum.asDiagonal() * lat.array().exp().matrix();
    g_w_out.noalias() +=
        dlogits.transpose() * trace.hidden[static_cast<std::size_t>(layer)];
    g_b_out.noalias() += dlogits.colwise().sum().transpose();
    Matrix dh = dlogits * b.w_out;
    auto& slot = injected[static_cast<std::size_t>(layer)];
    if (slot.size() == 0)
      slot = std::move(dh);
    else
      slot += dh;
  }

  Matrix g = Matrix::Zero(frames, hd);  // gradient w.r.t. h^l while descending
  for (int l = cfg.num_layers; l >= 1; --l) {
    auto& inj = injected[static_cast<std::size_t>(l)];
    if (inj.size() != 0) g += inj;
    const Matrix& z = trace.mix[static_cast<std::size_t>(l - 1)];
    const Matrix dz = g.array() * (1.0 - z.array().square());
    const Matrix concat =
        neighbor_concat(trace.hidden[static_cast<std::size_t>(l - 1)]);
    MapRM g_w(grad.data() + params.layer_offset(l), hd, 3 * hd);
    MapVec g_b(grad.data() + params.layer_offset(l) + 3 * hd * hd, hd);
    g_w.noalias() += dz.transpose() * concat;
    g_b.noalias() += dz.colwise().sum().transpose();
    const Matrix dconcat = dz * b.w_mix[static_cast<std::size_t>(l - 1)];
    // Residual path keeps g; scatter the concat gradient back onto h^{l-1}.
    g += dconcat.middleCols(hd, hd);
    if (frames > 1) {
      g.topRows(frames - 1) += dconcat.block(1, 0, frames - 1, hd);
      g.bottomRows(frames - 1) += dconcat.block(0, 2 * hd, frames - 1, hd);
    }
  }
  const Matrix& h0 = trace.hidden[0];
  const Matrix da = g.array() * (1.0 - h0.array().square());
  MapRM g_w_in(grad.data(), hd, cfg.input_dim);
  MapVec g_b_in(grad.data() + hd * cfg.input_dim, hd);
  g_w_in.noalias() += da.transpose() * feat;
  g_b_in.noalias() += da.colwise().sum().transpose();
  return grad;
}

Vector backward(const Parameters& params, const FeatureMatrix& feat,
                const std::vector<Matrix>& lattice_grads) {
  return backward(params, forward_trace(params, feat), feat, lattice_grads);
}

Parameters init_parameters(const EncoderConfig& cfg) {
  cfg.validate();
  Parameters p{cfg, Vector::Zero(Parameters::flat_size(cfg))};
  Rng rng(cfg.init_seed);
  auto fill_uniform = [&rng](double* at, Eigen::Index n, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < n; ++i)
      at[i] = rng.uniform(-bound, bound);
  };
  const Eigen::Index h = cfg.hidden_dim, f = cfg.input_dim,
                     v1 = cfg.vocab_size + 1;
  fill_uniform(p.flat.data(), h * f, cfg.input_dim);
  for (int l = 1; l <= cfg.num_layers; ++l)
    fill_uniform(p.flat.data() + p.layer_offset(l), 3 * h * h,
                 3 * cfg.hidden_dim);
  fill_uniform(p.flat.data() + p.head_offset(), v1 * h, cfg.hidden_dim);
  return p;
}

Parameters average_checkpoints(const std::vector<Checkpoint>& checkpoints,
                               int k, const EncoderConfig& cfg) {
  if (checkpoints.empty())
    throw std::invalid_argument("average_checkpoints: empty checkpoint list");
  if (k < 1)
    throw std::invalid_argument("average_checkpoints: k must be >= 1");
  for (const Checkpoint& c : checkpoints) {
    if (!std::isfinite(c.cv_loss))
      throw std::invalid_argument(
          "average_checkpoints: non-finite cv_loss at epoch " +
          std::to_string(c.epoch));
    if (c.params.size() != Parameters::flat_size(cfg))
      throw std::invalid_argument(
          "average_checkpoints: parameter size mismatch at epoch " +
          std::to_string(c.epoch));
  }
  const int take = std::min<int>(k, static_cast<int>(checkpoints.size()));
  std::vector<std::size_t> idx(checkpoints.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    if (checkpoints[i].cv_loss != checkpoints[j].cv_loss)
      return checkpoints[i].cv_loss < checkpoints[j].cv_loss;
    return checkpoints[i].epoch < checkpoints[j].epoch;
  });
  // Mean as reference + mean deviation: identical checkpoints average to
  // themselves exactly, and the accumulation stays centered.
  const Vector& ref = checkpoints[idx[0]].params;
  Vector deviation = Vector::Zero(Parameters::flat_size(cfg));
  for (int i = 1; i < take; ++i)
    deviation += checkpoints[idx[static_cast<std::size_t>(i)]].params - ref;
  Parameters out{cfg, ref + deviation / static_cast<double>(take)};
  return out;
}

void write_checkpoint(const std::string& path, const EncoderConfig& cfg,
                      const Checkpoint& ckpt) {
  if (ckpt.params.size() != Parameters::flat_size(cfg))
    throw std::invalid_argument("write_checkpoint: parameter size mismatch");
  BinaryWriter w(path);
  w.write_bytes("CBAC1", 5);
  w.write_u32(static_cast<std::uint32_t>(cfg.input_dim));
  w.write_u32(static_cast<std::uint32_t>(cfg.hidden_dim));
  w.write_u32(static_cast<std::uint32_t>(cfg.num_layers));
  w.write_u32(static_cast<std::uint32_t>(cfg.vocab_size));
  w.write_u32(static_cast<std::uint32_t>(cfg.tap_layers.size()));
  for (int t : cfg.tap_layers) w.write_u32(static_cast<std::uint32_t>(t));
  w.write_i32(ckpt.epoch);
  w.write_f64(ckpt.cv_loss);
  w.write_u64(static_cast<std::uint64_t>(ckpt.params.size()));
  for (Eigen::Index i = 0; i < ckpt.params.size(); ++i)
    w.write_f64(ckpt.params[i]);
}

Checkpoint read_checkpoint(const std::string& path, EncoderConfig* cfg_out) {
  BinaryReader r(path);
  char magic[5];
  r.read_bytes(magic, 5);
  if (std::string(magic, 5) != "CBAC1")
    throw FormatError("read_checkpoint: bad magic in " + path);
  EncoderConfig cfg;
  cfg.input_dim = static_cast<int>(r.read_u32());
  cfg.hidden_dim = static_cast<int>(r.read_u32());
  cfg.num_layers = static_cast<int>(r.read_u32());
  cfg.vocab_size = static_cast<int>(r.read_u32());
  const std::uint32_t n_taps = r.read_u32();
  cfg.tap_layers.clear();
  for (std::uint32_t i = 0; i < n_taps; ++i)
    cfg.tap_layers.push_back(static_cast<int>(r.read_u32()));
  cfg.validate();
  Checkpoint ckpt;
  ckpt.epoch = r.read_i32();
  ckpt.cv_loss = r.read_f64();
  const std::uint64_t count = r.read_u64();
  if (count != static_cast<std::uint64_t>(Parameters::flat_size(cfg)))
    throw FormatError("read_checkpoint: parameter count " +
                      std::to_string(count) +
                      " does not match the config echo");
  ckpt.params = Vector::Zero(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    ckpt.params[static_cast<Eigen::Index>(i)] = r.read_f64();
  if (cfg_out != nullptr) *cfg_out = cfg;
  return ckpt;
}

}  // namespace cba
