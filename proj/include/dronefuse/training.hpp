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
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dronefuse/manifest.hpp"
#include "dronefuse/model.hpp"
#include "dronefuse/radar_dsp.hpp"

namespace dronefuse::training {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double learning_rate = 5e-5;
  double weight_decay = 0.4;
  double dropout = 0.4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::size_t patience = 8;
  double test_fraction = 0.15;
  double validation_fraction = 0.10;
  /// Per-sample gradients computed concurrently; summed in slot order.
  std::size_t gradient_slots = 8;

  void validate() const;
};

/// How manifest records become model inputs.
struct DataConfig {
  radar::RadarConfig radar;
  bool filter_zero_doppler = true;
  bool hann_window = false;
  std::uint32_t sample_rate = 16000;
  std::size_t audio_window = 16000;
};

using Records = std::vector<ManifestRecord>;

/// Per class: n_test = ceil(fraction * n_c) clamped to [1, n_c - 1].
std::pair<Records, Records> stratified_split(const Records& records, double test_fraction, std::uint64_t seed);
/// Appends non-drone records drawn with replacement until the non-drone
/// count equals the drone count.
Records balance_by_upsampling(const Records& records, std::uint64_t seed);

model::LabeledSample load_sample(const DatasetManifest& manifest, const ManifestRecord& record, const DataConfig& cfg);
std::vector<model::LabeledSample> load_samples(const DatasetManifest& manifest, const Records& records,
                                               const DataConfig& cfg);

struct Metrics {
  std::size_t count = 0;
  double detection_accuracy = 0.0;
  double detection_f1 = 0.0;
  /// 5-class, with non-drone predicted whenever detection says "absent".
  double classification_accuracy = 0.0;
  double classification_f1 = 0.0;  // macro over classes with support or predictions
  /// Plain argmax of the classification head over 5 classes.
  double classification_accuracy_ungated = 0.0;
  /// Argmax over the 4 drone logits, true drones only.
  double drone_classification_accuracy = 0.0;
  std::array<std::array<std::size_t, model::kClassificationClasses>, model::kClassificationClasses> confusion{};
  std::array<std::array<std::size_t, 2>, 2> detection_confusion{};
};

std::size_t predicted_class(const model::ModelOutput& out);
Metrics compute_metrics(std::span<const model::ModelOutput> outputs, std::span<const model::Label> labels);
std::vector<model::ModelOutput> predict_all(const model::FusionModel& m, std::span<const model::LabeledSample> samples);
Metrics evaluate(const model::FusionModel& m, std::span<const model::LabeledSample> samples);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_det_acc = 0.0;
  double val_cls_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam training with per-epoch validation and early stopping on the
/// validation joint loss. The model is left holding the best weights.
TrainResult train_loop(model::FusionModel& m, std::span<const model::LabeledSample> train,
                       std::span<const model::LabeledSample> val, const TrainConfig& cfg,
                       const model::LossConfig& loss, const EpochCallback& on_epoch = {});

void write_training_log(const std::filesystem::path& path, const TrainResult& result);
void write_metrics_json(const std::filesystem::path& path, const Metrics& m);

/// Train / validation / test partition of a manifest.
struct Partition {
  Records train, val, test;
};
/// test split, then a validation split of the remainder, then upsampling
/// of the training part only.
Partition partition(const DatasetManifest& manifest, const TrainConfig& cfg);

struct Experiment {
  std::string name;
  std::vector<model::Modality> modalities;
  std::unique_ptr<model::FusionModel> model;
  TrainResult result;
  Metrics test;
};

std::string modality_set_name(std::span<const model::Modality> mods);

/// Fused, acoustic-only and range-Doppler-only models trained with the same
/// seed and configuration.
std::vector<Experiment> ablate_modalities(const model::ModelConfig& base, std::span<const model::LabeledSample> train,
                                          std::span<const model::LabeledSample> val,
                                          std::span<const model::LabeledSample> test, const TrainConfig& cfg,
                                          const model::LossConfig& loss,
                                          const std::function<void(const std::string&, const EpochLog&)>& on_epoch = {});
/// modalities,detection_accuracy,detection_f1,classification_accuracy,classification_f1
void write_ablation_csv(const std::filesystem::path& path, const std::vector<Experiment>& rows);

struct SnrRow {
  std::string snr;  // dB value or "clean"
  std::vector<Metrics> per_model;
};

/// Test inputs get add_noise_at_snr on the acoustic channel (radar
/// untouched), then peak normalization. The noise seed depends on
/// (seed, record index) only, so every SNR reuses one noise direction.
std::vector<SnrRow> snr_sweep(std::span<const model::FusionModel* const> models,
                              std::span<const double> snr_db, std::span<const model::LabeledSample> test,
                              std::uint64_t seed, bool include_clean = true);
/// snr_db, then <name>_detection_accuracy,<name>_classification_accuracy per model.
void write_snr_csv(const std::filesystem::path& path, std::span<const std::string> model_names,
                   const std::vector<SnrRow>& rows);

}  // namespace dronefuse::training
