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
// dronefuse command-line front end.
//
// Exit codes:
//   0  success
//   1  unexpected failure
//   2  usage error
//   3  parse error (malformed capture, manifest, checkpoint or WAV)
//   4  numeric divergence during training
//   5  I/O error
//   6  configuration error
//   7  gradient check failed
//   8  data error (shape, index or domain violation)
//
// Errors go to stderr as one line: "dronefuse: error kind=<kind> code=<n>: <message>".

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dronefuse/config.hpp"
#include "dronefuse/error.hpp"
#include "dronefuse/gradcheck_suite.hpp"
#include "dronefuse/manifest.hpp"
#include "dronefuse/nn/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace dronefuse;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParse = 3,
  kDivergence = 4,
  kIo = 5,
  kConfig = 6,
  kGradcheck = 7,
  kData = 8,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<const char*, int> classify(Error::Kind k) {
  switch (k) {
    case Error::Kind::Parse: return {"parse", kParse};
    case Error::Kind::Divergence: return {"divergence", kDivergence};
    case Error::Kind::Io: return {"io", kIo};
    case Error::Kind::Config: return {"config", kConfig};
    case Error::Kind::Spec: return {"config", kConfig};
    case Error::Kind::Size: return {"size", kData};
    case Error::Kind::Domain: return {"domain", kData};
    case Error::Kind::Dimension: return {"dimension", kData};
    case Error::Kind::Index: return {"index", kData};
  }
  return {"internal", kFailure};
}

int report(const char* kind, int code, std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  std::fprintf(stderr, "dronefuse: error kind=%s code=%d: %s\n", kind, code, msg.c_str());
  return code;
}

// Options shared by every subcommand.
struct Common {
  std::string preset = "paper";
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "Built-in starting configuration (paper, toy)")->capture_default_str();
  app->add_option("--config", c.config_files, "key = value file applied over the preset (repeatable)");
  app->add_option("--set", c.overrides, "key=value override applied last (repeatable)");
  app->add_option("--seed", c.seed, "Root seed for every random stream (default 0)");
  app->add_option("--threads", c.threads, "Worker thread cap; 0 keeps the OpenMP default")->capture_default_str();
  app->add_flag("--quiet", c.quiet, "Do not log the resolved configuration");
}

// Precedence: preset < dataset.cfg < --config files < --set < --seed.
PipelineConfig resolve(const Common& c, const std::vector<fs::path>& base_layers = {}) {
  PipelineConfig cfg = preset(c.preset);
  for (const auto& p : base_layers) {
    if (fs::exists(p)) apply_kv_file(cfg, p);
  }
  for (const auto& f : c.config_files) apply_kv_file(cfg, f);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.train.seed = *c.seed;
  cfg.validate();
  if (c.threads > 0) omp_set_num_threads(c.threads);
  if (!c.quiet) {
    std::istringstream lines(to_kv(cfg));
    for (std::string line; std::getline(lines, line);) std::fprintf(stderr, "config: %s\n", line.c_str());
  }
  return cfg;
}

// A dataset argument is either a directory holding manifest.jsonl or the
// manifest itself; dataset.cfg beside it is the base configuration layer.
struct DatasetPath {
  fs::path manifest;
  fs::path config;
};

DatasetPath dataset_path(const fs::path& p) {
  DatasetPath d;
  d.manifest = fs::is_directory(p) ? p / "manifest.jsonl" : p;
  d.config = d.manifest.parent_path() / "dataset.cfg";
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

// Keys describing how a dataset was produced and must be read back.
std::string dataset_keys(const PipelineConfig& cfg) {
  std::istringstream lines(to_kv(cfg));
  std::string out = "# written by dronefuse synth\n";
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("radar.", 0) == 0 || line.rfind("audio.", 0) == 0 || line.rfind("synth.", 0) == 0 ||
        line.rfind("seed ", 0) == 0) {
      out += line + "\n";
    }
  }
  return out;
}

fs::path config_beside(const fs::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".cfg");
  return p;
}

void save_model(const model::FusionModel& m, const PipelineConfig& cfg, const fs::path& checkpoint) {
  nn::save_checkpoint(m.parameters(), checkpoint);
  PipelineConfig c = cfg;
  c.model.modalities = m.config().modalities;
  write_text(config_beside(checkpoint), to_kv(c));
}

struct LoadedModel {
  PipelineConfig cfg;
  std::unique_ptr<model::FusionModel> model;
};

LoadedModel load_model(const fs::path& checkpoint) {
  const auto cfg_path = config_beside(checkpoint);
  if (!fs::exists(cfg_path)) throw IoError("model configuration '" + cfg_path.string() + "' not found");
  LoadedModel lm;
  lm.cfg = preset("paper");
  apply_kv_file(lm.cfg, cfg_path);
  lm.cfg.validate();
  lm.model = std::make_unique<model::FusionModel>(lm.cfg.resolved_model(), lm.cfg.train.seed);
  nn::load_checkpoint(lm.model->parameters(), checkpoint);
  return lm;
}

void print_metrics(const std::string& name, const training::Metrics& m) {
  std::printf("%s: n=%zu detection_accuracy=%.6f detection_f1=%.6f classification_accuracy=%.6f "
              "classification_f1=%.6f classification_accuracy_ungated=%.6f drone_classification_accuracy=%.6f\n",
              name.c_str(), m.count, m.detection_accuracy, m.detection_f1, m.classification_accuracy,
              m.classification_f1, m.classification_accuracy_ungated, m.drone_classification_accuracy);
}

void log_epoch(const std::string& name, const training::EpochLog& l) {
  std::fprintf(stderr, "%s epoch %zu: train_loss=%.6f val_loss=%.6f val_det_acc=%.4f val_cls_acc=%.4f\n",
               name.c_str(), l.epoch, l.train_loss, l.val_loss, l.val_det_acc, l.val_cls_acc);
}

// ---------------------------------------------------------------- rd-map

struct RdMapArgs {
  Common common;
  std::string capture;
  std::size_t frame = 0;
  bool filter = false;
  bool cfar = false;
  bool hann = false;
  std::string out = ".";
  double dynamic_range = 80.0;
};

int cmd_rd_map(const RdMapArgs& a) {
  const auto cfg = resolve(a.common);
  const auto cube = radar::read_radar_capture(a.capture, cfg.radar, radar::SampleLayout::from_tag(cfg.radar_layout));
  if (a.frame >= cube.frames()) {
    throw IndexError("rd-map: frame " + std::to_string(a.frame) + " out of range (capture has " +
                     std::to_string(cube.frames()) + ")");
  }
  auto frame = cube.frame(a.frame);
  if (a.filter) frame = radar::zero_doppler_filter(frame);
  const auto map = radar::compute_range_doppler(frame, cfg.radar, {a.hann || cfg.hann_window});
  const fs::path out(a.out);
  fs::create_directories(out);
  radar::write_map_csv(out / "rd_map.csv", map);
  radar::write_heatmap_pgm(out / "rd_map.pgm", map, a.dynamic_range);
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.magnitudes.size(); ++i) {
    if (map.magnitudes[i] > map.magnitudes[best]) best = i;
  }
  std::printf("map %zux%zu peak doppler_bin=%zu range_bin=%zu magnitude=%.6g\n", map.doppler_bins, map.range_bins,
              best / map.range_bins, best % map.range_bins, map.magnitudes[best]);
  if (a.cfar) {
    const auto det = radar::cfar_2d(map, cfg.cfar);
    radar::write_detections_csv(out / "detections.csv", det, map);
    std::printf("cfar detections=%zu\n", det.size());
  }
  return kOk;
}

// ----------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::optional<std::size_t> n;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  auto cfg = resolve(a.common);
  if (a.n) cfg.synth.n_per_class = *a.n;
  if (cfg.synth.n_per_class == 0) throw UsageError("synth: --n must be at least 1");
  const fs::path out(a.out);
  const auto manifest = synth::gen_dataset(cfg.library(), cfg.synth.n_per_class, out, cfg.train.seed, cfg.gen_options());
  write_text(out / "dataset.cfg", dataset_keys(cfg));
  std::printf("%s records=%zu\n", (out / "manifest.jsonl").string().c_str(), manifest.records.size());
  return kOk;
}

// ----------------------------------------------------------------- train

struct TrainFlags {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double learning_rate = 5e-5;
  double weight_decay = 0.4;
  double dropout = 0.4;
  double test_fraction = 0.15;
  double lambda = 1.0;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_batch = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_wd = nullptr;
  CLI::Option* o_dropout = nullptr;
  CLI::Option* o_test = nullptr;
  CLI::Option* o_lambda = nullptr;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  f.o_epochs = app->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  f.o_batch = app->add_option("--batch-size", f.batch_size, "Mini-batch size")->capture_default_str();
  f.o_lr = app->add_option("--lr", f.learning_rate, "Adam learning rate")->capture_default_str();
  f.o_wd = app->add_option("--weight-decay", f.weight_decay, "Decoupled weight decay")->capture_default_str();
  f.o_dropout = app->add_option("--dropout", f.dropout, "Dropout probability")->capture_default_str();
  f.o_test = app->add_option("--test-fraction", f.test_fraction, "Held-out test fraction")->capture_default_str();
  f.o_lambda = app->add_option("--lambda", f.lambda, "Classification loss weight")->capture_default_str();
}

// Flags only override the configuration when given explicitly.
void apply_train_flags(const TrainFlags& f, PipelineConfig& cfg) {
  if (f.o_epochs->count()) cfg.train.epochs = f.epochs;
  if (f.o_batch->count()) cfg.train.batch_size = f.batch_size;
  if (f.o_lr->count()) cfg.train.learning_rate = f.learning_rate;
  if (f.o_wd->count()) cfg.train.weight_decay = f.weight_decay;
  if (f.o_dropout->count()) cfg.train.dropout = f.dropout;
  if (f.o_test->count()) cfg.train.test_fraction = f.test_fraction;
  if (f.o_lambda->count()) cfg.loss.lambda = f.lambda;
  cfg.validate();
}

struct Splits {
  std::vector<model::LabeledSample> train, val, test;
};

Splits load_splits(const DatasetManifest& manifest, const PipelineConfig& cfg, bool need_train = true) {
  const auto part = training::partition(manifest, cfg.train);
  Splits s;
  const auto dc = cfg.data();
  if (need_train) {
    s.train = training::load_samples(manifest, part.train, dc);
    s.val = training::load_samples(manifest, part.val, dc);
  }
  s.test = training::load_samples(manifest, part.test, dc);
  return s;
}

struct TrainArgs {
  Common common;
  TrainFlags flags;
  std::string dataset;
  std::string out;
  std::vector<std::string> modalities;
};

std::vector<model::Modality> parse_modalities(const std::vector<std::string>& names) {
  std::vector<model::Modality> out;
  for (const auto& n : names) {
    if (n == "acoustic") {
      out.push_back(model::Modality::Acoustic);
    } else if (n == "range_doppler") {
      out.push_back(model::Modality::RangeDoppler);
    } else {
      throw UsageError("unknown modality '" + n + "' (acoustic, range_doppler)");
    }
  }
  return out;
}

int cmd_train(TrainArgs& a) {
  const auto ds = dataset_path(a.dataset);
  auto cfg = resolve(a.common, {ds.config});
  apply_train_flags(a.flags, cfg);
  if (!a.modalities.empty()) cfg.model.modalities = parse_modalities(a.modalities);
  cfg.validate();
  const auto manifest = load_manifest(ds.manifest);
  const auto data = load_splits(manifest, cfg);
  std::fprintf(stderr, "train=%zu val=%zu test=%zu\n", data.train.size(), data.val.size(), data.test.size());
  model::FusionModel m(cfg.resolved_model(), cfg.train.seed);
  const auto name = training::modality_set_name(m.config().modalities);
  const auto result = training::train_loop(m, data.train, data.val, cfg.train, cfg.loss,
                                           [&](const training::EpochLog& l) { log_epoch(name, l); });
  const fs::path out(a.out);
  fs::create_directories(out);
  save_model(m, cfg, out / "model.json");
  training::write_training_log(out / "training_log.csv", result);
  const auto metrics = training::evaluate(m, data.test);
  training::write_metrics_json(out / "metrics.json", metrics);
  std::printf("best_epoch=%zu best_val_loss=%.6f stopped_early=%s\n", result.best_epoch, result.best_val_loss,
              result.stopped_early ? "true" : "false");
  print_metrics("test", metrics);
  return kOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string dataset;
  std::string out;
  bool all_records = false;
};

int cmd_eval(const EvalArgs& a) {
  auto lm = load_model(a.checkpoint);
  if (a.common.threads > 0) omp_set_num_threads(a.common.threads);
  const auto manifest = load_manifest(dataset_path(a.dataset).manifest);
  std::vector<model::LabeledSample> samples;
  if (a.all_records) {
    samples = training::load_samples(manifest, manifest.records, lm.cfg.data());
  } else {
    samples = load_splits(manifest, lm.cfg, false).test;
  }
  const auto metrics = training::evaluate(*lm.model, samples);
  if (!a.out.empty()) training::write_metrics_json(a.out, metrics);
  print_metrics(a.all_records ? "all" : "test", metrics);
  return kOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  Common common;
  TrainFlags flags;
  std::string dataset;
  std::string out;
};

int cmd_ablate(AblateArgs& a) {
  const auto ds = dataset_path(a.dataset);
  auto cfg = resolve(a.common, {ds.config});
  apply_train_flags(a.flags, cfg);
  const auto manifest = load_manifest(ds.manifest);
  const auto data = load_splits(manifest, cfg);
  auto exps = training::ablate_modalities(cfg.resolved_model(), data.train, data.val, data.test, cfg.train, cfg.loss,
                                          log_epoch);
  const fs::path out(a.out);
  fs::create_directories(out);
  for (const auto& e : exps) {
    save_model(*e.model, cfg, out / (e.name + ".json"));
    training::write_training_log(out / (e.name + "_training_log.csv"), e.result);
    print_metrics(e.name, e.test);
  }
  training::write_ablation_csv(out / "ablation.csv", exps);
  std::printf("%s\n", (out / "ablation.csv").string().c_str());
  return kOk;
}

// ----------------------------------------------------------- noise-sweep

struct SweepArgs {
  Common common;
  std::vector<std::string> checkpoints;
  std::string dataset;
  std::string out = "snr_sweep.csv";
  std::vector<double> snr;
};

int cmd_noise_sweep(const SweepArgs& a) {
  if (a.common.threads > 0) omp_set_num_threads(a.common.threads);
  std::vector<LoadedModel> models;
  for (const auto& c : a.checkpoints) models.push_back(load_model(c));
  const auto& ref = models.front().cfg;
  for (const auto& m : models) {
    if (m.cfg.data().audio_window != ref.data().audio_window || m.cfg.radar.chirps_per_frame != ref.radar.chirps_per_frame ||
        m.cfg.radar.samples_per_chirp != ref.radar.samples_per_chirp) {
      throw ConfigError("noise-sweep: checkpoints were trained on different input shapes");
    }
  }
  const auto manifest = load_manifest(dataset_path(a.dataset).manifest);
  const auto test = load_splits(manifest, ref, false).test;
  std::vector<const model::FusionModel*> ptrs;
  std::vector<std::string> names;
  for (const auto& m : models) {
    ptrs.push_back(m.model.get());
    names.push_back(training::modality_set_name(m.model->config().modalities));
  }
  const auto snr = a.snr.empty() ? ref.snr_list : a.snr;
  const std::uint64_t seed = a.common.seed.value_or(ref.train.seed);
  const auto rows = training::snr_sweep(ptrs, snr, test, seed);
  training::write_snr_csv(a.out, names, rows);
  for (const auto& r : rows) {
    std::printf("snr=%s", r.snr.c_str());
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::printf(" %s_det=%.6f %s_cls=%.6f", names[i].c_str(), r.per_model[i].detection_accuracy, names[i].c_str(),
                  r.per_model[i].classification_accuracy);
    }
    std::printf("\n");
  }
  return kOk;
}

// ------------------------------------------------------------- gradcheck

int cmd_gradcheck(const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
  bool ok = true;
  for (const auto& check : run_gradcheck_suite(c.seed.value_or(0))) {
    std::printf("%-20s max_rel_err=%.3e tol=%.0e coords=%zu worst=%s %s\n", check.name.c_str(),
                check.result.max_relative_error, check.tolerance, check.result.coordinates,
                check.result.worst.c_str(), check.passed() ? "pass" : "FAIL");
    ok = ok && check.passed();
  }
  std::printf(ok ? "all layers pass\n" : "gradient check FAILED\n");
  return ok ? kOk : kGradcheck;
}

// ------------------------------------------------------------------ info

struct InfoArgs {
  Common common;
  std::string checkpoint;
};

int cmd_info(const InfoArgs& a) {
  PipelineConfig cfg;
  std::unique_ptr<model::FusionModel> m;
  if (!a.checkpoint.empty()) {
    auto lm = load_model(a.checkpoint);
    cfg = lm.cfg;
    m = std::move(lm.model);
  } else {
    cfg = resolve(a.common);
    m = std::make_unique<model::FusionModel>(cfg.resolved_model(), cfg.train.seed);
  }
  const auto mc = m->config();
  std::printf("modalities=%s\n", training::modality_set_name(mc.modalities).c_str());
  std::printf("acoustic_input=[1,%zu] range_doppler_input=[1,%zu,%zu]\n", mc.acoustic_length, mc.rd_height,
              mc.rd_width);
  std::printf("parameters=%zu\n", model::count_parameters(*m));
  std::printf("mult_adds=%llu\n", static_cast<unsigned long long>(model::count_mult_adds(mc)));
  std::printf("tensors=%zu\n", m->parameters().size());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dronefuse: radar and acoustic drone detection and classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dronefuse 0.1.0");

  RdMapArgs rd;
  auto* s_rd = app.add_subcommand("rd-map", "Range-Doppler map (CSV + PGM heatmap) of one capture frame");
  add_common(s_rd, rd.common);
  s_rd->add_option("capture", rd.capture, "Raw radar capture file")->required();
  s_rd->add_option("--frame", rd.frame, "Frame index")->capture_default_str();
  s_rd->add_flag("--filter-zero-doppler", rd.filter, "Subtract the slow-time mean before the Doppler FFT");
  s_rd->add_flag("--cfar", rd.cfar, "Run 2-D CA-CFAR and write detections.csv");
  s_rd->add_flag("--hann", rd.hann, "Hann window both FFT axes");
  s_rd->add_option("--dynamic-range", rd.dynamic_range, "Heatmap dynamic range in dB")->capture_default_str();
  s_rd->add_option("-o,--out", rd.out, "Output directory")->capture_default_str();

  SynthArgs sy;
  auto* s_sy = app.add_subcommand("synth", "Generate a synthetic five-class dataset");
  add_common(s_sy, sy.common);
  s_sy->add_option("--n", sy.n, "Samples per class (default: synth.n_per_class)");
  s_sy->add_option("-o,--out", sy.out, "Output directory")->required();

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train a model on a dataset");
  add_common(s_tr, tr.common);
  add_train_flags(s_tr, tr.flags);
  s_tr->add_option("dataset", tr.dataset, "Dataset directory or manifest.jsonl")->required();
  s_tr->add_option("--modalities", tr.modalities, "Subset of: acoustic range_doppler");
  s_tr->add_option("-o,--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split of a dataset");
  add_common(s_ev, ev.common);
  s_ev->add_option("checkpoint", ev.checkpoint, "Checkpoint manifest (.json)")->required();
  s_ev->add_option("dataset", ev.dataset, "Dataset directory or manifest.jsonl")->required();
  s_ev->add_flag("--all", ev.all_records, "Evaluate every record instead of the test split");
  s_ev->add_option("-o,--out", ev.out, "Metrics JSON path");

  AblateArgs ab;
  auto* s_ab = app.add_subcommand("ablate", "Train fused, acoustic-only and range-Doppler-only models");
  add_common(s_ab, ab.common);
  add_train_flags(s_ab, ab.flags);
  s_ab->add_option("dataset", ab.dataset, "Dataset directory or manifest.jsonl")->required();
  s_ab->add_option("-o,--out", ab.out, "Output directory")->required();

  SweepArgs sw;
  auto* s_sw = app.add_subcommand("noise-sweep", "Evaluate clean-trained checkpoints at several acoustic SNRs");
  add_common(s_sw, sw.common);
  s_sw->add_option("dataset", sw.dataset, "Dataset directory or manifest.jsonl")->required();
  s_sw->add_option("--checkpoint", sw.checkpoints, "Checkpoint manifest (repeatable)")->required();
  s_sw->add_option("--snr", sw.snr, "SNR levels in dB (default: eval.snr_list = 6 12 18 24)");
  s_sw->add_option("-o,--out", sw.out, "CSV path")->capture_default_str();

  Common gc;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the composed model");
  add_common(s_gc, gc);

  InfoArgs in;
  auto* s_in = app.add_subcommand("info", "Parameter and multiply-add counts");
  add_common(s_in, in.common);
  s_in->add_option("checkpoint", in.checkpoint, "Checkpoint manifest; omitted: the configured model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kUsage;
  }

  try {
    if (*s_rd) return cmd_rd_map(rd);
    if (*s_sy) return cmd_synth(sy);
    if (*s_tr) return cmd_train(tr);
    if (*s_ev) return cmd_eval(ev);
    if (*s_ab) return cmd_ablate(ab);
    if (*s_sw) return cmd_noise_sweep(sw);
    if (*s_gc) return cmd_gradcheck(gc);
    if (*s_in) return cmd_info(in);
  } catch (const UsageError& e) {
    return report("usage", kUsage, e.what());
  } catch (const Error& e) {
    const auto [kind, code] = classify(e.kind());
    return report(kind, code, e.what());
  } catch (const fs::filesystem_error& e) {
    return report("io", kIo, e.what());
  } catch (const std::exception& e) {
    return report("internal", kFailure, e.what());
  }
  return kFailure;
}
