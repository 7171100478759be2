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
#include "dronefuse/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <numeric>

#include "dronefuse/acoustic.hpp"
#include "dronefuse/error.hpp"
#include "dronefuse/nn/adam.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::training {

using model::Label;
using model::LabeledSample;
using model::ModelOutput;

void TrainConfig::validate() const {
  auto req = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("train config: ") + msg);
  };
  req(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be >= 1");
  req(patience >= 1, "patience must be >= 1");
  req(gradient_slots >= 1, "gradient_slots must be >= 1");
  req(learning_rate > 0.0 && weight_decay >= 0.0, "learning_rate > 0 and weight_decay >= 0 required");
  req(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  req(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0, "invalid Adam constants");
  req(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
  req(validation_fraction > 0.0 && validation_fraction < 1.0, "validation_fraction must lie in (0, 1)");
  req(test_fraction + validation_fraction < 1.0, "test_fraction + validation_fraction must be < 1");
}

// ---------------------------------------------------------------- splits

std::pair<Records, Records> stratified_split(const Records& records, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("stratified_split: fraction must lie in (0, 1)");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].class_label].push_back(i);
  std::vector<bool> in_test(records.size(), false);
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw ConfigError("stratified_split: class " + std::to_string(label) + " has fewer than 2 records");
    }
    const double want = test_fraction * static_cast<double>(idx.size());
    auto n_test = static_cast<std::size_t>(std::ceil(want - 1e-9));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    KeyedStream rng{seed, hash_string("split"), label};
    shuffle_with(idx, rng);
    for (std::size_t k = 0; k < n_test; ++k) in_test[idx[k]] = true;
  }
  std::pair<Records, Records> out;
  for (std::size_t i = 0; i < records.size(); ++i) (in_test[i] ? out.second : out.first).push_back(records[i]);
  return out;
}

Records balance_by_upsampling(const Records& records, std::uint64_t seed) {
  std::vector<std::size_t> non_drone;
  std::size_t drones = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].detection_label == 0) {
      non_drone.push_back(i);
    } else {
      ++drones;
    }
  }
  if (non_drone.empty() || drones == 0) {
    throw ConfigError("balance_by_upsampling: need at least one drone and one non-drone record");
  }
  Records out = records;
  if (non_drone.size() >= drones) return out;
  KeyedStream rng{seed, hash_string("balance")};
  for (std::size_t k = non_drone.size(); k < drones; ++k) out.push_back(records[non_drone[rng.below(non_drone.size())]]);
  return out;
}

Partition partition(const DatasetManifest& manifest, const TrainConfig& cfg) {
  cfg.validate();
  auto [rest, test] = stratified_split(manifest.records, cfg.test_fraction, hash_key({cfg.seed, 1}));
  auto [train, val] = stratified_split(rest, cfg.validation_fraction, hash_key({cfg.seed, 2}));
  return {balance_by_upsampling(train, hash_key({cfg.seed, 3})), std::move(val), std::move(test)};
}

// ---------------------------------------------------------------- loading

namespace {

std::vector<double> acoustic_window(const std::vector<double>& mono, std::size_t offset, std::size_t window,
                                    const std::string& id) {
  if (offset + window > mono.size()) {
    throw SizeError("record '" + id + "': acoustic window [" + std::to_string(offset) + ", " +
                    std::to_string(offset + window) + ") exceeds clip length " + std::to_string(mono.size()));
  }
  return {mono.begin() + static_cast<std::ptrdiff_t>(offset),
          mono.begin() + static_cast<std::ptrdiff_t>(offset + window)};
}

std::vector<double> load_mono(const std::filesystem::path& path, const DataConfig& cfg) {
  if (path.extension() == ".f32") return acoustic::read_segment_f32(path);
  auto clip = acoustic::read_wav(path);
  if (clip.sample_rate != cfg.sample_rate) {
    throw ConfigError("'" + path.string() + "': sample rate " + std::to_string(clip.sample_rate) + " Hz, expected " +
                      std::to_string(cfg.sample_rate));
  }
  clip = acoustic::normalize(acoustic::to_mono(clip));
  return std::move(clip.channels[0]);
}

nn::Tensor map_tensor(const radar::RadarCube& cube, std::size_t frame, const DataConfig& cfg, const std::string& id) {
  if (frame >= cube.frames()) {
    throw IndexError("record '" + id + "': radar frame " + std::to_string(frame) + " of " +
                     std::to_string(cube.frames()));
  }
  auto f = cube.frame(frame);
  if (cfg.filter_zero_doppler) f = radar::zero_doppler_filter(f);
  const auto grid = radar::to_model_input(radar::compute_range_doppler(f, cfg.radar, {cfg.hann_window}));
  return nn::Tensor({1, grid.rows, grid.cols}, grid.data);
}

Label label_of(const ManifestRecord& r) {
  Label l{r.detection_label, r.class_label};
  l.validate();
  return l;
}

}  // namespace

LabeledSample load_sample(const DatasetManifest& manifest, const ManifestRecord& r, const DataConfig& cfg) {
  LabeledSample s;
  s.label = label_of(r);
  const auto mono = load_mono(manifest.resolve(r.acoustic_path), cfg);
  s.input.acoustic = nn::Tensor({1, cfg.audio_window}, acoustic_window(mono, r.acoustic_offset, cfg.audio_window, r.id));
  const auto cube = radar::read_radar_capture(manifest.resolve(r.radar_path), cfg.radar,
                                              radar::SampleLayout::from_tag(r.radar_layout));
  s.input.range_doppler = map_tensor(cube, r.radar_frame, cfg, r.id);
  return s;
}

std::vector<LabeledSample> load_samples(const DatasetManifest& manifest, const Records& records, const DataConfig& cfg) {
  // Records sharing a capture file are loaded together so each file is read once.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].radar_path + "|" + records[i].radar_layout].push_back(i);
  std::vector<const std::vector<std::size_t>*> work;
  for (const auto& [key, idx] : groups) work.push_back(&idx);

  std::vector<LabeledSample> out(records.size());
  std::vector<std::exception_ptr> errors(work.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(work.size()); ++w) {
    try {
      const auto& idx = *work[static_cast<std::size_t>(w)];
      const auto& first = records[idx.front()];
      const auto cube = radar::read_radar_capture(manifest.resolve(first.radar_path), cfg.radar,
                                                  radar::SampleLayout::from_tag(first.radar_layout));
      std::map<std::string, std::vector<double>> clips;
      for (std::size_t i : idx) {
        const auto& r = records[i];
        auto it = clips.find(r.acoustic_path);
        if (it == clips.end()) it = clips.emplace(r.acoustic_path, load_mono(manifest.resolve(r.acoustic_path), cfg)).first;
        out[i].label = label_of(r);
        out[i].input.acoustic =
            nn::Tensor({1, cfg.audio_window}, acoustic_window(it->second, r.acoustic_offset, cfg.audio_window, r.id));
        out[i].input.range_doppler = map_tensor(cube, r.radar_frame, cfg, r.id);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ---------------------------------------------------------------- metrics

std::size_t predicted_class(const ModelOutput& out) {
  if (out.det_logits[1] <= out.det_logits[0]) return model::kNonDroneClass;
  return static_cast<std::size_t>(std::max_element(out.cls_logits.begin(), out.cls_logits.end()) - out.cls_logits.begin());
}

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

Metrics compute_metrics(std::span<const ModelOutput> outputs, std::span<const Label> labels) {
  if (outputs.size() != labels.size()) throw DimensionError("compute_metrics: outputs/labels length mismatch");
  constexpr std::size_t C = model::kClassificationClasses;
  Metrics m;
  m.count = outputs.size();
  std::size_t det_ok = 0, cls_ok = 0, ungated_ok = 0, drone_ok = 0, drones = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& o = outputs[i];
    const Label& l = labels[i];
    l.validate();
    const std::size_t det = o.det_logits[1] > o.det_logits[0] ? 1 : 0;
    ++m.detection_confusion[l.y_det][det];
    det_ok += det == l.y_det;
    const std::size_t cls = predicted_class(o);
    ++m.confusion[l.y_cls][cls];
    cls_ok += cls == l.y_cls;
    const auto ungated = static_cast<std::size_t>(std::max_element(o.cls_logits.begin(), o.cls_logits.end()) -
                                                  o.cls_logits.begin());
    ungated_ok += ungated == l.y_cls;
    if (l.y_det == 1) {
      ++drones;
      const auto drone = static_cast<std::size_t>(std::max_element(o.cls_logits.begin() + 1, o.cls_logits.end()) -
                                                  o.cls_logits.begin());
      drone_ok += drone == l.y_cls;
    }
  }
  m.detection_accuracy = ratio(det_ok, m.count);
  m.detection_f1 = f1(m.detection_confusion[1][1], m.detection_confusion[0][1], m.detection_confusion[1][0]);
  m.classification_accuracy = ratio(cls_ok, m.count);
  m.classification_accuracy_ungated = ratio(ungated_ok, m.count);
  m.drone_classification_accuracy = ratio(drone_ok, drones);
  double f1_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t tp = m.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t k = 0; k < C; ++k) {
      if (k == c) continue;
      fp += m.confusion[k][c];
      fn += m.confusion[c][k];
    }
    if (tp + fp + fn == 0) continue;
    f1_sum += f1(tp, fp, fn);
    ++present;
  }
  m.classification_f1 = present ? f1_sum / static_cast<double>(present) : 0.0;
  return m;
}

std::vector<ModelOutput> predict_all(const model::FusionModel& m, std::span<const LabeledSample> samples) {
  std::vector<ModelOutput> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = m.predict(samples[k].input);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

std::vector<Label> labels_of(std::span<const LabeledSample> s) {
  std::vector<Label> l;
  l.reserve(s.size());
  for (const auto& x : s) l.push_back(x.label);
  return l;
}

}  // namespace

Metrics evaluate(const model::FusionModel& m, std::span<const LabeledSample> samples) {
  if (samples.empty()) throw DomainError("evaluate: empty record set");
  const auto outs = predict_all(m, samples);
  return compute_metrics(outs, labels_of(samples));
}

// ---------------------------------------------------------------- training

TrainResult train_loop(model::FusionModel& m, std::span<const LabeledSample> train, std::span<const LabeledSample> val,
                       const TrainConfig& cfg, const model::LossConfig& loss, const EpochCallback& on_epoch) {
  cfg.validate();
  loss.validate();
  if (train.empty() || val.empty()) throw ConfigError("train_loop: train and validation sets must be nonempty");
  auto& store = m.parameters();
  nn::Adam adam(store, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay});
  const std::size_t slots = cfg.gradient_slots;
  std::vector<nn::GradBuffer> slot_grads(slots, nn::GradBuffer(store));
  std::vector<double> slot_loss(slots, 0.0);
  std::vector<std::exception_ptr> slot_error(slots);
  nn::GradBuffer batch(store);
  const std::vector<Label> val_labels = labels_of(val);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best = store.snapshot();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    KeyedStream shuffle_rng{cfg.seed, hash_string("shuffle"), epoch};
    shuffle_with(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size, ++batch_index) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(b1 - b0);
      batch.zero();
      for (std::size_t w0 = b0; w0 < b1; w0 += slots) {
        const auto active = static_cast<std::ptrdiff_t>(std::min(b1, w0 + slots) - w0);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < active; ++s) {
          const auto k = static_cast<std::size_t>(s);
          try {
            const auto& sample = train[order[w0 + k]];
            slot_grads[k].zero();
            nn::Graph g;
            const model::ForwardOptions opt{true, hash_key({cfg.seed, epoch, batch_index, w0 + k - b0})};
            const auto f = m.forward(g, sample.input, opt);
            const nn::Var l = model::joint_loss_term(g, f, sample.label, loss, 1.0);
            slot_loss[k] = g.value(l)[0];
            g.backward(l, weight);
            g.accumulate_param_grads(slot_grads[k]);
          } catch (...) {
            slot_error[k] = std::current_exception();
          }
        }
        for (std::size_t k = 0; k < static_cast<std::size_t>(active); ++k) {
          if (slot_error[k]) {
            auto e = std::exchange(slot_error[k], nullptr);
            try {
              std::rethrow_exception(e);
            } catch (const DivergenceError& d) {
              throw DivergenceError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) + ": " +
                                    d.what());
            }
          }
          batch.add(slot_grads[k]);
          loss_sum += slot_loss[k];
        }
      }
      if (!batch.all_finite() || !std::isfinite(loss_sum)) {
        throw DivergenceError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) +
                              ": non-finite loss or gradient");
      }
      adam.step(store, batch);
    }

    const auto outs = predict_all(m, val);
    const Metrics vm = compute_metrics(outs, val_labels);
    EpochLog log{epoch, loss_sum / static_cast<double>(train.size()), model::joint_loss(outs, val_labels, loss),
                 vm.detection_accuracy, vm.classification_accuracy};
    if (!std::isfinite(log.val_loss)) throw DivergenceError("epoch " + std::to_string(epoch) + ": non-finite validation loss");
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.val_loss < result.best_val_loss) {
      result.best_val_loss = log.val_loss;
      result.best_epoch = epoch;
      best = store.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  store.restore(best);
  return result;
}

void write_training_log(const std::filesystem::path& path, const TrainResult& result) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write training log '" + path.string() + "'");
  std::fprintf(f, "epoch,train_loss,val_loss,val_det_acc,val_cls_acc\n");
  for (const auto& e : result.log) {
    std::fprintf(f, "%zu,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss, e.val_det_acc, e.val_cls_acc);
  }
  std::fclose(f);
}

void write_metrics_json(const std::filesystem::path& path, const Metrics& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["detection_accuracy"] = m.detection_accuracy;
  j["detection_f1"] = m.detection_f1;
  j["classification_accuracy"] = m.classification_accuracy;
  j["classification_f1"] = m.classification_f1;
  j["classification_accuracy_ungated"] = m.classification_accuracy_ungated;
  j["drone_classification_accuracy"] = m.drone_classification_accuracy;
  j["confusion"] = m.confusion;
  j["detection_confusion"] = m.detection_confusion;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- experiments

std::string modality_set_name(std::span<const model::Modality> mods) {
  std::string s;
  for (auto m : mods) {
    if (!s.empty()) s += "+";
    s += model::modality_name(m);
  }
  return s;
}

std::vector<Experiment> ablate_modalities(const model::ModelConfig& base, std::span<const LabeledSample> train,
                                          std::span<const LabeledSample> val, std::span<const LabeledSample> test,
                                          const TrainConfig& cfg, const model::LossConfig& loss,
                                          const std::function<void(const std::string&, const EpochLog&)>& on_epoch) {
  using model::Modality;
  const std::vector<std::vector<Modality>> sets{
      {Modality::Acoustic, Modality::RangeDoppler}, {Modality::Acoustic}, {Modality::RangeDoppler}};
  std::vector<Experiment> out;
  for (const auto& mods : sets) {
    Experiment e;
    e.modalities = mods;
    e.name = modality_set_name(mods);
    auto mc = base;
    mc.modalities = mods;
    mc.dropout = cfg.dropout;
    e.model = std::make_unique<model::FusionModel>(mc, cfg.seed);
    EpochCallback cb;
    if (on_epoch) cb = [&](const EpochLog& l) { on_epoch(e.name, l); };
    e.result = train_loop(*e.model, train, val, cfg, loss, cb);
    e.test = evaluate(*e.model, test);
    out.push_back(std::move(e));
  }
  return out;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<Experiment>& rows) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "modalities,detection_accuracy,detection_f1,classification_accuracy,classification_f1\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s,%.9g,%.9g,%.9g,%.9g\n", r.name.c_str(), r.test.detection_accuracy, r.test.detection_f1,
                 r.test.classification_accuracy, r.test.classification_f1);
  }
  std::fclose(f);
}

std::vector<SnrRow> snr_sweep(std::span<const model::FusionModel* const> models, std::span<const double> snr_db,
                              std::span<const LabeledSample> test, std::uint64_t seed, bool include_clean) {
  if (snr_db.empty() && !include_clean) throw ConfigError("snr_sweep: empty SNR list");
  if (test.empty()) throw DomainError("snr_sweep: empty test set");
  std::vector<SnrRow> rows;
  for (double snr : snr_db) {
    std::vector<LabeledSample> noisy(test.begin(), test.end());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(noisy.size()); ++i) {
      auto& x = noisy[static_cast<std::size_t>(i)].input.acoustic.data;
      x = acoustic::add_noise_at_snr(x, snr, hash_key({seed, hash_string("snr"), static_cast<std::uint64_t>(i)}));
      acoustic::normalize_inplace(x);
    }
    SnrRow row;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr);
    row.snr = buf;
    for (const auto* m : models) row.per_model.push_back(evaluate(*m, noisy));
    rows.push_back(std::move(row));
  }
  if (include_clean) {
    SnrRow row;
    row.snr = "clean";
    for (const auto* m : models) row.per_model.push_back(evaluate(*m, test));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_snr_csv(const std::filesystem::path& path, std::span<const std::string> model_names,
                   const std::vector<SnrRow>& rows) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "snr_db");
  for (const auto& n : model_names) std::fprintf(f, ",%s_detection_accuracy,%s_classification_accuracy", n.c_str(), n.c_str());
  std::fprintf(f, "\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s", r.snr.c_str());
    for (const auto& m : r.per_model) std::fprintf(f, ",%.9g,%.9g", m.detection_accuracy, m.classification_accuracy);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace dronefuse::training
