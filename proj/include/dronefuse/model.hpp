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
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dronefuse/nn/graph.hpp"
#include "dronefuse/nn/parameter.hpp"

namespace dronefuse::model {

enum class Modality : std::size_t { Acoustic = 0, RangeDoppler = 1 };
inline constexpr std::size_t kNumModalities = 2;
inline constexpr std::size_t kDetectionClasses = 2;
inline constexpr std::size_t kClassificationClasses = 5;
inline constexpr std::size_t kNonDroneClass = 0;

const char* modality_name(Modality m);

struct Encoder1DConfig {
  std::size_t small_kernel = 7;
  std::size_t large_kernel = 107;
  std::size_t downsample_kernel = 15;
  std::size_t downsample_stride = 8;
  std::size_t num_se_blocks = 5;
  /// One width per SE block; the downsample conv emits widths[0].
  std::vector<std::size_t> widths{16, 32, 64, 64, 128};
  std::size_t embed_dim = 128;

  void validate() const;
  /// Length after the downsample conv.
  std::size_t downsampled_length(std::size_t input_length) const;
  /// Shortest input for which the large branch still fits.
  std::size_t min_input_length() const;
};

struct Encoder2DConfig {
  std::size_t stem_kernel = 3;
  std::vector<std::size_t> kernels{3, 3, 5, 7};
  std::vector<std::size_t> widths{16, 32, 64, 128};
  std::size_t embed_dim = 128;

  std::size_t num_se_blocks() const { return kernels.size(); }
  std::size_t max_kernel() const;
  void validate() const;
};

struct FusionConfig {
  std::size_t n_heads = 8;
  std::size_t n_layers = 1;
  std::size_t embed_dim = 128;
  std::size_t ffn_hidden = 256;

  void validate() const;
};

struct ModelConfig {
  Encoder1DConfig acoustic;
  Encoder2DConfig range_doppler;
  FusionConfig fusion;
  std::size_t se_reduction = 4;
  std::size_t head_hidden = 64;
  double dropout = 0.4;
  std::vector<Modality> modalities{Modality::Acoustic, Modality::RangeDoppler};
  /// Expected input shapes: acoustic [1, acoustic_length], map [1, H, W].
  std::size_t acoustic_length = 16000;
  std::size_t rd_height = 128;
  std::size_t rd_width = 256;

  bool uses(Modality m) const;
  void validate() const;
};

struct LossConfig {
  double lambda = 1.0;
  void validate() const;
};

struct ModelOutput {
  std::array<double, kDetectionClasses> det_logits{};
  std::array<double, kClassificationClasses> cls_logits{};
};

struct Label {
  std::size_t y_det = 0;
  std::size_t y_cls = kNonDroneClass;
  void validate() const;
};

/// One model input. Absent modalities are left empty.
struct SampleInput {
  nn::Tensor acoustic;       // [1, L]
  nn::Tensor range_doppler;  // [1, H, W]
};

struct LabeledSample {
  SampleInput input;
  Label label;
};

struct ForwardOptions {
  bool train = false;
  std::uint64_t dropout_key = 0;
};

struct ForwardVars {
  nn::Var det;
  nn::Var cls;
};

class FusionModel {
 public:
  FusionModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  ForwardVars forward(nn::Graph& g, const SampleInput& in, const ForwardOptions& opt = {}) const;
  /// Eval-mode forward.
  ModelOutput predict(const SampleInput& in) const;

  // Building blocks, exposed for verification.
  nn::Var encode_acoustic(nn::Graph& g, nn::Var wave) const;
  nn::Var encode_range_doppler(nn::Graph& g, nn::Var map) const;
  /// Branch outputs before their element-wise sum: {small, large}.
  std::array<nn::Var, 2> acoustic_branches(nn::Graph& g, nn::Var wave) const;
  nn::Var fuse(nn::Graph& g, std::span<const nn::Var> embeddings, std::span<const Modality> ids,
               const ForwardOptions& opt = {}) const;
  nn::Var detection_head(nn::Graph& g, nn::Var fused, const ForwardOptions& opt = {}) const;
  nn::Var classification_head(nn::Graph& g, nn::Var fused, const ForwardOptions& opt = {}) const;
  /// `prefix` names an SE block registered at construction.
  nn::Var se_block(nn::Graph& g, nn::Var x, const std::string& prefix, std::size_t kernel, bool two_d) const;
  /// Gate of an SE block for input `x` (the squeeze/excitation path only).
  nn::Var se_gate(nn::Graph& g, nn::Var u, const std::string& prefix) const;

 private:
  nn::Var p(nn::Graph& g, const std::string& name) const;
  void add_conv(const std::string& name, std::size_t c_in, std::size_t c_out, std::size_t k, bool two_d);
  void add_linear(const std::string& name, std::size_t d_in, std::size_t d_out, bool xavier = false,
                  bool bias = true);
  void add_se_block(const std::string& prefix, std::size_t c_in, std::size_t c_out, std::size_t k, bool two_d);
  void add_head(const std::string& prefix, std::size_t out);

  ModelConfig config_;
  std::uint64_t seed_;
  nn::ParameterStore store_;
};

/// Graph term (weight * [CE_det + lambda * y_det * CE_cls]). The
/// classification term is not built at all when y_det = 0 or lambda = 0.
nn::Var joint_loss_term(nn::Graph& g, const ForwardVars& out, const Label& label, const LossConfig& cfg,
                        double weight);
/// Mean joint loss over a batch built on one graph.
nn::Var joint_loss(nn::Graph& g, std::span<const ForwardVars> outs, std::span<const Label> labels,
                   const LossConfig& cfg);
/// Value-only form.
double joint_loss(std::span<const ModelOutput> outs, std::span<const Label> labels, const LossConfig& cfg);
double detection_loss(std::span<const ModelOutput> outs, std::span<const Label> labels);

std::size_t count_parameters(const FusionModel& model);
/// Closed-form multiply-add count for one forward pass (conv, linear and
/// attention products), matching what Graph counts.
std::uint64_t count_mult_adds(const ModelConfig& cfg);

}  // namespace dronefuse::model
