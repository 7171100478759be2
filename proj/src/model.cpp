/*
 * Copyright 2026 The dronefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dronefuse/model.hpp"

#include <algorithm>

#include "dronefuse/error.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::model {

using nn::Graph;
using nn::Init;
using nn::Var;
namespace ops = nn::ops;

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::Acoustic:
      return "acoustic";
    case Modality::RangeDoppler:
      return "range_doppler";
  }
  return "?";
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool odd(std::size_t k) { return k % 2 == 1; }

std::size_t block_in(const std::vector<std::size_t>& widths, std::size_t i) {
  return i == 0 ? widths[0] : widths[i - 1];
}

// Dropout sites.
constexpr std::uint64_t kSiteDet = 1, kSiteCls = 2, kSiteFusion = 100;

}  // namespace

// ---------------------------------------------------------------- configs

void Encoder1DConfig::validate() const {
  require(odd(small_kernel) && odd(large_kernel) && odd(downsample_kernel), "encoder1d: kernels must be odd");
  require(downsample_stride >= 1, "encoder1d: downsample_stride must be >= 1");
  require(num_se_blocks >= 1, "encoder1d: num_se_blocks must be >= 1");
  require(widths.size() == num_se_blocks, "encoder1d: need one width per SE block (" +
                                              std::to_string(num_se_blocks) + "), got " +
                                              std::to_string(widths.size()));
  require(std::all_of(widths.begin(), widths.end(), [](std::size_t w) { return w >= 1; }),
          "encoder1d: widths must be >= 1");
  require(embed_dim >= 1, "encoder1d: embed_dim must be >= 1");
}

std::size_t Encoder1DConfig::downsampled_length(std::size_t input_length) const {
  const std::size_t pad = downsample_kernel / 2;
  if (input_length + 2 * pad < downsample_kernel) return 0;
  return (input_length + 2 * pad - downsample_kernel) / downsample_stride + 1;
}

std::size_t Encoder1DConfig::min_input_length() const {
  const std::size_t pad = downsample_kernel / 2;
  const std::size_t need = (large_kernel - 1) * downsample_stride + downsample_kernel;
  return need > 2 * pad ? need - 2 * pad : 1;
}

std::size_t Encoder2DConfig::max_kernel() const {
  std::size_t k = stem_kernel;
  for (auto v : kernels) k = std::max(k, v);
  return k;
}

void Encoder2DConfig::validate() const {
  require(!kernels.empty(), "encoder2d: at least one SE block is required");
  require(odd(stem_kernel) && std::all_of(kernels.begin(), kernels.end(), odd), "encoder2d: kernels must be odd");
  require(widths.size() == kernels.size(), "encoder2d: need exactly one width per kernel entry");
  require(std::all_of(widths.begin(), widths.end(), [](std::size_t w) { return w >= 1; }),
          "encoder2d: widths must be >= 1");
  require(embed_dim >= 1, "encoder2d: embed_dim must be >= 1");
}

void FusionConfig::validate() const {
  require(n_heads >= 1 && n_layers >= 1 && ffn_hidden >= 1, "fusion: n_heads, n_layers, ffn_hidden must be >= 1");
  require(embed_dim % n_heads == 0, "fusion: embed_dim " + std::to_string(embed_dim) +
                                        " not divisible by n_heads " + std::to_string(n_heads));
}

bool ModelConfig::uses(Modality m) const { return std::find(modalities.begin(), modalities.end(), m) != modalities.end(); }

void ModelConfig::validate() const {
  require(!modalities.empty() && modalities.size() <= kNumModalities, "model: 1 or 2 active modalities required");
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    require(static_cast<std::size_t>(modalities[i]) < kNumModalities, "model: unknown modality id");
    for (std::size_t j = 0; j < i; ++j) require(modalities[i] != modalities[j], "model: duplicate modality");
  }
  fusion.validate();
  require(se_reduction >= 1, "model: se_reduction must be >= 1");
  require(head_hidden >= 1, "model: head_hidden must be >= 1");
  require(dropout >= 0.0 && dropout < 1.0, "model: dropout must lie in [0, 1)");
  if (uses(Modality::Acoustic)) {
    acoustic.validate();
    require(acoustic.embed_dim == fusion.embed_dim, "model: acoustic embed_dim must equal fusion embed_dim");
    for (auto w : acoustic.widths) {
      require(w >= se_reduction, "model: SE width " + std::to_string(w) + " < reduction " +
                                     std::to_string(se_reduction));
    }
    if (acoustic_length < acoustic.min_input_length()) {
      throw DimensionError("model: acoustic_length " + std::to_string(acoustic_length) + " below minimum " +
                           std::to_string(acoustic.min_input_length()));
    }
  }
  if (uses(Modality::RangeDoppler)) {
    range_doppler.validate();
    require(range_doppler.embed_dim == fusion.embed_dim, "model: range-Doppler embed_dim must equal fusion embed_dim");
    for (auto w : range_doppler.widths) {
      require(w >= se_reduction, "model: SE width " + std::to_string(w) + " < reduction " +
                                     std::to_string(se_reduction));
    }
    if (rd_height < range_doppler.max_kernel() || rd_width < range_doppler.max_kernel()) {
      throw DimensionError("model: range-Doppler map must be at least " +
                           std::to_string(range_doppler.max_kernel()) + " on each side");
    }
  }
}

void LossConfig::validate() const { require(lambda >= 0.0, "loss: lambda must be >= 0"); }

void Label::validate() const {
  if (y_det > 1 || y_cls >= kClassificationClasses) throw IndexError("label out of range");
  if ((y_det == 0) != (y_cls == kNonDroneClass)) {
    throw ConfigError("label: y_det = 0 must coincide with the non-drone class");
  }
}

// ---------------------------------------------------------------- model

FusionModel::FusionModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  config_.validate();
  const auto& a = config_.acoustic;
  const auto& r = config_.range_doppler;
  const std::size_t d = config_.fusion.embed_dim;
  if (config_.uses(Modality::Acoustic)) {
    add_conv("acoustic.down", 1, a.widths[0], a.downsample_kernel, false);
    for (const char* branch : {"small", "large"}) {
      const std::size_t k = std::string(branch) == "small" ? a.small_kernel : a.large_kernel;
      for (std::size_t i = 0; i < a.num_se_blocks; ++i) {
        add_se_block("acoustic." + std::string(branch) + "." + std::to_string(i), block_in(a.widths, i), a.widths[i],
                     k, false);
      }
    }
    add_linear("acoustic.proj", a.widths.back(), d, true);
  }
  if (config_.uses(Modality::RangeDoppler)) {
    add_conv("rd.stem", 1, r.widths[0], r.stem_kernel, true);
    for (std::size_t i = 0; i < r.num_se_blocks(); ++i) {
      add_se_block("rd." + std::to_string(i), block_in(r.widths, i), r.widths[i], r.kernels[i], true);
    }
    add_linear("rd.proj", r.widths.back(), d, true);
  }
  store_.add("fusion.modality", {kNumModalities, d}, Init::Normal002, d, d, seed_);
  for (std::size_t l = 0; l < config_.fusion.n_layers; ++l) {
    const std::string pre = "fusion." + std::to_string(l) + ".";
    // No key bias.
    for (const char* w : {"q", "k", "v", "o"}) add_linear(pre + "attn." + w, d, d, true, w[0] != 'k');
    store_.add(pre + "ln1.gain", {d}, Init::Ones, d, d, seed_);
    store_.add(pre + "ln1.bias", {d}, Init::Zeros, d, d, seed_);
    add_linear(pre + "ffn.1", d, config_.fusion.ffn_hidden);
    add_linear(pre + "ffn.2", config_.fusion.ffn_hidden, d, true);
    store_.add(pre + "ln2.gain", {d}, Init::Ones, d, d, seed_);
    store_.add(pre + "ln2.bias", {d}, Init::Zeros, d, d, seed_);
  }
  add_head("det", kDetectionClasses);
  add_head("cls", kClassificationClasses);
}

void FusionModel::add_conv(const std::string& name, std::size_t c_in, std::size_t c_out, std::size_t k, bool two_d) {
  nn::Shape shape = two_d ? nn::Shape{c_out, c_in, k, k} : nn::Shape{c_out, c_in, k};
  const std::size_t fan_in = c_in * k * (two_d ? k : 1);
  store_.add(name + ".w", shape, Init::HeUniform, fan_in, c_out, seed_);
  store_.add(name + ".b", {c_out}, Init::Zeros, fan_in, c_out, seed_);
}

void FusionModel::add_linear(const std::string& name, std::size_t d_in, std::size_t d_out, bool xavier,
                             bool bias) {
  store_.add(name + ".w", {d_out, d_in}, xavier ? Init::XavierUniform : Init::HeUniform, d_in, d_out, seed_);
  if (bias) store_.add(name + ".b", {d_out}, Init::Zeros, d_in, d_out, seed_);
}

void FusionModel::add_se_block(const std::string& prefix, std::size_t c_in, std::size_t c_out, std::size_t k,
                               bool two_d) {
  if (c_out < config_.se_reduction) {
    throw ConfigError("se block '" + prefix + "': channels " + std::to_string(c_out) + " < reduction " +
                      std::to_string(config_.se_reduction));
  }
  add_conv(prefix + ".conv1", c_in, c_out, k, two_d);
  add_conv(prefix + ".conv2", c_out, c_out, k, two_d);
  const std::size_t hidden = c_out / config_.se_reduction;
  add_linear(prefix + ".fc1", c_out, hidden);
  add_linear(prefix + ".fc2", hidden, c_out, true);
  if (c_in != c_out) add_conv(prefix + ".proj", c_in, c_out, 1, two_d);
}

void FusionModel::add_head(const std::string& prefix, std::size_t out) {
  add_linear(prefix + ".fc1", config_.fusion.embed_dim, config_.head_hidden);
  add_linear(prefix + ".fc2", config_.head_hidden, out, true);
}

Var FusionModel::p(Graph& g, const std::string& name) const {
  const auto* param = store_.find(name);
  if (!param) throw ConfigError("model: no parameter named '" + name + "'");
  return g.param(*param);
}

Var FusionModel::se_gate(Graph& g, Var u, const std::string& prefix) const {
  Var s = ops::global_avg_pool(g, u);
  s = ops::relu(g, ops::linear(g, s, p(g, prefix + ".fc1.w"), p(g, prefix + ".fc1.b")));
  return ops::sigmoid(g, ops::linear(g, s, p(g, prefix + ".fc2.w"), p(g, prefix + ".fc2.b")));
}

Var FusionModel::se_block(Graph& g, Var x, const std::string& prefix, std::size_t kernel, bool two_d) const {
  auto conv = [&](Var in, const std::string& name, std::size_t k) {
    return two_d ? ops::conv2d(g, in, p(g, name + ".w"), p(g, name + ".b"), 1, k / 2)
                 : ops::conv1d(g, in, p(g, name + ".w"), p(g, name + ".b"), 1, k / 2);
  };
  Var u = conv(ops::relu(g, conv(x, prefix + ".conv1", kernel)), prefix + ".conv2", kernel);
  Var gated = ops::scale_channels(g, u, se_gate(g, u, prefix));
  Var shortcut = store_.find(prefix + ".proj.w") ? conv(x, prefix + ".proj", 1) : x;
  return ops::relu(g, ops::add(g, gated, shortcut));
}

std::array<Var, 2> FusionModel::acoustic_branches(Graph& g, Var wave) const {
  if (!config_.uses(Modality::Acoustic)) throw ConfigError("model: acoustic encoder is not active");
  const auto& a = config_.acoustic;
  const auto& shape = g.shape(wave);
  if (shape.size() != 2 || shape[0] != 1) throw DimensionError("acoustic input must be [1, L], got " + nn::to_string(shape));
  if (shape[1] < a.min_input_length()) {
    throw DimensionError("acoustic input length " + std::to_string(shape[1]) + " below minimum " +
                         std::to_string(a.min_input_length()));
  }
  Var h = ops::relu(g, ops::conv1d(g, wave, p(g, "acoustic.down.w"), p(g, "acoustic.down.b"), a.downsample_stride,
                                   a.downsample_kernel / 2));
  std::array<Var, 2> out{h, h};
  for (std::size_t i = 0; i < a.num_se_blocks; ++i) {
    out[0] = se_block(g, out[0], "acoustic.small." + std::to_string(i), a.small_kernel, false);
    out[1] = se_block(g, out[1], "acoustic.large." + std::to_string(i), a.large_kernel, false);
  }
  return out;
}

Var FusionModel::encode_acoustic(Graph& g, Var wave) const {
  const auto br = acoustic_branches(g, wave);
  Var pooled = ops::global_avg_pool(g, ops::add(g, br[0], br[1]));
  return ops::linear(g, pooled, p(g, "acoustic.proj.w"), p(g, "acoustic.proj.b"));
}

Var FusionModel::encode_range_doppler(Graph& g, Var map) const {
  if (!config_.uses(Modality::RangeDoppler)) throw ConfigError("model: range-Doppler encoder is not active");
  const auto& r = config_.range_doppler;
  const auto& shape = g.shape(map);
  if (shape.size() != 3 || shape[0] != 1) throw DimensionError("range-Doppler input must be [1, H, W], got " + nn::to_string(shape));
  if (shape[1] < r.max_kernel() || shape[2] < r.max_kernel()) {
    throw DimensionError("range-Doppler input " + nn::to_string(shape) + " smaller than kernel " +
                         std::to_string(r.max_kernel()));
  }
  Var h = ops::relu(g, ops::conv2d(g, map, p(g, "rd.stem.w"), p(g, "rd.stem.b"), 1, r.stem_kernel / 2));
  for (std::size_t i = 0; i < r.num_se_blocks(); ++i) h = se_block(g, h, "rd." + std::to_string(i), r.kernels[i], true);
  return ops::linear(g, ops::global_avg_pool(g, h), p(g, "rd.proj.w"), p(g, "rd.proj.b"));
}

Var FusionModel::fuse(Graph& g, std::span<const Var> embeddings, std::span<const Modality> ids,
                      const ForwardOptions& opt) const {
  if (embeddings.empty() || embeddings.size() != ids.size() || embeddings.size() > kNumModalities) {
    throw ConfigError("fuse: need 1.." + std::to_string(kNumModalities) + " embeddings with matching ids");
  }
  Var table = p(g, "fusion.modality");
  std::vector<Var> tokens;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto m = static_cast<std::size_t>(ids[i]);
    if (m >= kNumModalities) throw ConfigError("fuse: unknown modality id " + std::to_string(m));
    tokens.push_back(ops::add(g, embeddings[i], ops::row(g, table, m)));
  }
  Var x = ops::stack_rows(g, tokens);
  const double drop = config_.dropout;
  for (std::size_t l = 0; l < config_.fusion.n_layers; ++l) {
    const std::string pre = "fusion." + std::to_string(l) + ".";
    auto lin = [&](Var in, const std::string& name) {
      const Var b = name == "attn.k" ? Var{} : p(g, pre + name + ".b");
      return ops::linear(g, in, p(g, pre + name + ".w"), b);
    };
    Var att = ops::attention(g, lin(x, "attn.q"), lin(x, "attn.k"), lin(x, "attn.v"), config_.fusion.n_heads);
    att = ops::dropout(g, lin(att, "attn.o"), drop, opt.train, hash_key({opt.dropout_key, kSiteFusion + 2 * l}));
    Var y = ops::layer_norm(g, ops::add(g, x, att), p(g, pre + "ln1.gain"), p(g, pre + "ln1.bias"));
    Var f = lin(ops::relu(g, lin(y, "ffn.1")), "ffn.2");
    f = ops::dropout(g, f, drop, opt.train, hash_key({opt.dropout_key, kSiteFusion + 2 * l + 1}));
    x = ops::layer_norm(g, ops::add(g, y, f), p(g, pre + "ln2.gain"), p(g, pre + "ln2.bias"));
  }
  return ops::mean_rows(g, x);
}

namespace {

Var head(const FusionModel& m, Graph& g, Var fused, const std::string& prefix, std::uint64_t site,
         const ForwardOptions& opt) {
  const auto& s = m.parameters();
  auto P = [&](const std::string& n) { return g.param(*s.find(prefix + n)); };
  Var h = ops::relu(g, ops::linear(g, fused, P(".fc1.w"), P(".fc1.b")));
  h = ops::dropout(g, h, m.config().dropout, opt.train, hash_key({opt.dropout_key, site}));
  return ops::linear(g, h, P(".fc2.w"), P(".fc2.b"));
}

}  // namespace

Var FusionModel::detection_head(Graph& g, Var fused, const ForwardOptions& opt) const {
  return head(*this, g, fused, "det", kSiteDet, opt);
}

Var FusionModel::classification_head(Graph& g, Var fused, const ForwardOptions& opt) const {
  return head(*this, g, fused, "cls", kSiteCls, opt);
}

ForwardVars FusionModel::forward(Graph& g, const SampleInput& in, const ForwardOptions& opt) const {
  std::vector<Var> emb;
  for (Modality m : config_.modalities) {
    if (m == Modality::Acoustic) {
      if (in.acoustic.data.empty()) throw DimensionError("forward: acoustic input missing");
      emb.push_back(encode_acoustic(g, g.constant_ref(in.acoustic)));
    } else {
      if (in.range_doppler.data.empty()) throw DimensionError("forward: range-Doppler input missing");
      emb.push_back(encode_range_doppler(g, g.constant_ref(in.range_doppler)));
    }
  }
  Var fused = fuse(g, emb, config_.modalities, opt);
  return {detection_head(g, fused, opt), classification_head(g, fused, opt)};
}

ModelOutput FusionModel::predict(const SampleInput& in) const {
  Graph g(false);
  const auto f = forward(g, in);
  ModelOutput out;
  std::copy_n(g.value(f.det).data.begin(), kDetectionClasses, out.det_logits.begin());
  std::copy_n(g.value(f.cls).data.begin(), kClassificationClasses, out.cls_logits.begin());
  return out;
}

// ---------------------------------------------------------------- loss

Var joint_loss_term(Graph& g, const ForwardVars& out, const Label& label, const LossConfig& cfg, double weight) {
  label.validate();
  Var loss = ops::cross_entropy(g, out.det, label.y_det);
  if (label.y_det == 1 && cfg.lambda != 0.0) {
    loss = ops::add(g, loss, ops::scale(g, ops::cross_entropy(g, out.cls, label.y_cls), cfg.lambda));
  }
  return weight == 1.0 ? loss : ops::scale(g, loss, weight);
}

Var joint_loss(Graph& g, std::span<const ForwardVars> outs, std::span<const Label> labels, const LossConfig& cfg) {
  cfg.validate();
  if (outs.empty()) throw DomainError("joint_loss: empty batch");
  if (outs.size() != labels.size()) throw DimensionError("joint_loss: outputs/labels length mismatch");
  const double w = 1.0 / static_cast<double>(outs.size());
  Var total = joint_loss_term(g, outs[0], labels[0], cfg, w);
  for (std::size_t i = 1; i < outs.size(); ++i) total = ops::add(g, total, joint_loss_term(g, outs[i], labels[i], cfg, w));
  return total;
}

double joint_loss(std::span<const ModelOutput> outs, std::span<const Label> labels, const LossConfig& cfg) {
  cfg.validate();
  if (outs.empty()) throw DomainError("joint_loss: empty batch");
  if (outs.size() != labels.size()) throw DimensionError("joint_loss: outputs/labels length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    labels[i].validate();
    double l = nn::cross_entropy_value(outs[i].det_logits, labels[i].y_det);
    if (labels[i].y_det == 1 && cfg.lambda != 0.0) l += cfg.lambda * nn::cross_entropy_value(outs[i].cls_logits, labels[i].y_cls);
    total += l;
  }
  return total / static_cast<double>(outs.size());
}

double detection_loss(std::span<const ModelOutput> outs, std::span<const Label> labels) {
  return joint_loss(outs, labels, LossConfig{0.0});
}

// ---------------------------------------------------------------- counts

std::size_t count_parameters(const FusionModel& model) {
  std::size_t n = 0;
  for (const auto& p : model.parameters()) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

std::uint64_t count_mult_adds(const ModelConfig& cfg) {
  cfg.validate();
  std::uint64_t total = 0;
  const std::uint64_t d = cfg.fusion.embed_dim;
  auto se = [&](std::uint64_t c_in, std::uint64_t c_out, std::uint64_t taps, std::uint64_t spatial) {
    const std::uint64_t h = c_out / cfg.se_reduction;
    std::uint64_t n = spatial * c_out * c_in * taps + spatial * c_out * c_out * taps + 2 * h * c_out;
    if (c_in != c_out) n += spatial * c_out * c_in;
    return n;
  };
  if (cfg.uses(Modality::Acoustic)) {
    const auto& a = cfg.acoustic;
    const std::uint64_t len = a.downsampled_length(cfg.acoustic_length);
    total += len * a.widths[0] * a.downsample_kernel;
    for (std::size_t i = 0; i < a.num_se_blocks; ++i) {
      total += se(block_in(a.widths, i), a.widths[i], a.small_kernel, len);
      total += se(block_in(a.widths, i), a.widths[i], a.large_kernel, len);
    }
    total += a.widths.back() * d;
  }
  if (cfg.uses(Modality::RangeDoppler)) {
    const auto& r = cfg.range_doppler;
    const std::uint64_t hw = static_cast<std::uint64_t>(cfg.rd_height) * cfg.rd_width;
    total += hw * r.widths[0] * r.stem_kernel * r.stem_kernel;
    for (std::size_t i = 0; i < r.num_se_blocks(); ++i) total += se(block_in(r.widths, i), r.widths[i], r.kernels[i] * r.kernels[i], hw);
    total += r.widths.back() * d;
  }
  const std::uint64_t t = cfg.modalities.size();
  total += cfg.fusion.n_layers * (4 * t * d * d + 2 * t * t * d + 2 * t * d * cfg.fusion.ffn_hidden);
  total += 2 * cfg.head_hidden * d + cfg.head_hidden * (kDetectionClasses + kClassificationClasses);
  return total;
}

}  // namespace dronefuse::model
