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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <numeric>
#include <omp.h>
#include <set>

#include "dronefuse/error.hpp"
#include "dronefuse/synthgen.hpp"
#include "dronefuse/training.hpp"
#include "test_util.hpp"

using namespace dronefuse;
using namespace dronefuse::training;
using model::Label;
using model::LabeledSample;
using model::ModelOutput;

namespace {

Records make_records(const std::vector<std::size_t>& per_class) {
  Records r;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      ManifestRecord m;
      m.id = "c" + std::to_string(c) + "_" + std::to_string(i);
      m.class_label = c;
      m.detection_label = c == 0 ? 0 : 1;
      r.push_back(m);
    }
  }
  return r;
}

std::map<std::size_t, std::size_t> class_counts(const Records& r) {
  std::map<std::size_t, std::size_t> m;
  for (const auto& x : r) ++m[x.class_label];
  return m;
}

std::set<std::string> ids(const Records& r) {
  std::set<std::string> s;
  for (const auto& x : r) s.insert(x.id);
  return s;
}

model::ModelConfig tiny_model() {
  model::ModelConfig c;
  c.acoustic = {3, 5, 5, 2, 2, {4, 4}, 8};
  c.range_doppler.stem_kernel = 3;
  c.range_doppler.kernels = {3, 3};
  c.range_doppler.widths = {4, 4};
  c.range_doppler.embed_dim = 8;
  c.fusion = {2, 1, 8, 12};
  c.se_reduction = 2;
  c.head_hidden = 8;
  c.dropout = 0.1;
  c.acoustic_length = 32;
  c.rd_height = 6;
  c.rd_width = 8;
  return c;
}

// Class c: a tone of c+1 cycles per window and a bright map cell at (c, c+1).
std::vector<LabeledSample> toy_samples(std::size_t per_class, std::uint64_t seed) {
  KeyedStream rng(seed);
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < 5; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledSample s;
      s.label = {c == 0 ? 0u : 1u, c};
      s.input.acoustic = nn::Tensor({1, 32});
      const double ph = rng.uniform(0, 6.28);
      for (std::size_t t = 0; t < 32; ++t) {
        s.input.acoustic[t] = std::sin(2 * std::numbers::pi * (c + 1) * t / 32.0 + ph) + 0.2 * rng.normal();
      }
      s.input.range_doppler = nn::Tensor({1, 6, 8});
      for (double& v : s.input.range_doppler.data) v = 0.2 * rng.uniform();
      s.input.range_doppler[c * 8 + c + 1] = 1.0;
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrainConfig quick_train() {
  TrainConfig t;
  t.epochs = 6;
  t.batch_size = 8;
  t.learning_rate = 3e-3;
  t.weight_decay = 0.0;
  t.patience = 6;
  t.seed = 5;
  return t;
}

ModelOutput output(std::size_t det, std::size_t top, std::size_t second) {
  ModelOutput o;
  o.det_logits = {det ? 0.0 : 1.0, det ? 1.0 : 0.0};
  o.cls_logits = {};
  o.cls_logits[second] = 0.5;
  o.cls_logits[top] = 1.0;
  return o;
}

}  // namespace

TEST_SUITE("splits") {
  TEST_CASE("5 x 100 at 0.15 puts 15 per class in test") {
    const auto r = make_records({100, 100, 100, 100, 100});
    const auto [train, test] = stratified_split(r, 0.15, 1);
    for (const auto& [c, n] : class_counts(test)) CHECK(n == 15);
    CHECK(train.size() == 425);
  }
  TEST_CASE("paper-scale counts") {
    const auto r = make_records({2432, 2048, 2048, 2048, 2048});
    const auto [train, test] = stratified_split(r, 0.15, 2);
    CHECK(std::abs(static_cast<long>(test.size()) - 1598) <= 3);
    CHECK(test.size() == 365 + 4 * 308);
  }
  TEST_CASE("disjoint, exhaustive, proportional, seeded") {
    KeyedStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> counts;
      for (int c = 0; c < 5; ++c) counts.push_back(2 + rng.below(60));
      const auto r = make_records(counts);
      const double frac = rng.uniform(0.05, 0.5);
      const auto [train, test] = stratified_split(r, frac, trial);
      auto a = ids(train), b = ids(test);
      CHECK(a.size() + b.size() == r.size());
      std::set<std::string> all = a;
      all.insert(b.begin(), b.end());
      CHECK(all == ids(r));
      const auto tc = class_counts(test);
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(std::abs(static_cast<double>(tc.at(c)) - frac * counts[c]) <= 1.0);
        CHECK(tc.at(c) >= 1);
        CHECK(tc.at(c) <= counts[c] - 1);
      }
      CHECK(ids(stratified_split(r, frac, trial).second) == b);
    }
    const auto r = make_records({50, 50});
    CHECK(ids(stratified_split(r, 0.2, 1).second) != ids(stratified_split(r, 0.2, 2).second));
    CHECK_THROWS_AS(stratified_split(make_records({5, 1}), 0.2, 0), ConfigError);
    CHECK_THROWS_AS(stratified_split(r, 1.0, 0), ConfigError);
  }
}

TEST_SUITE("upsampling") {
  TEST_CASE("paper counts: 2432 non-drone become 8192") {
    const auto r = make_records({2432, 2048, 2048, 2048, 2048});
    const auto b = balance_by_upsampling(r, 1);
    const auto c = class_counts(b);
    CHECK(c.at(0) == 8192);
    for (std::size_t k = 1; k < 5; ++k) CHECK(c.at(k) == 2048);
    // Every original record is kept and drone records are untouched.
    CHECK(std::equal(r.begin(), r.end(), b.begin(), [](const auto& x, const auto& y) { return x.id == y.id; }));
    CHECK(balance_by_upsampling(r, 1).size() == b.size());
  }
  TEST_CASE("balanced input returned unchanged; single record repeated") {
    const auto r = make_records({8, 2, 2, 2, 2});
    CHECK(ids(balance_by_upsampling(r, 0)) == ids(r));
    CHECK(balance_by_upsampling(r, 0).size() == r.size());
    const auto one = balance_by_upsampling(make_records({1, 10}), 0);
    CHECK(class_counts(one).at(0) == 10);
    for (const auto& x : one) {
      if (x.class_label == 0) CHECK(x.id == "c0_0");
    }
    CHECK_THROWS_AS(balance_by_upsampling(make_records({0, 3}), 0), ConfigError);
    CHECK_THROWS_AS(balance_by_upsampling(make_records({3}), 0), ConfigError);
  }
  TEST_CASE("partition upsamples the training part only") {
    DatasetManifest m;
    m.records = make_records({30, 20, 20, 20, 20});
    TrainConfig cfg;
    cfg.seed = 4;
    const auto p = partition(m, cfg);
    const auto tc = class_counts(p.test);
    CHECK(tc.at(0) == 5);  // ceil(0.15 * 30)
    CHECK(tc.at(1) == 3);
    const auto trc = class_counts(p.train);
    CHECK(trc.at(0) == trc.at(1) + trc.at(2) + trc.at(3) + trc.at(4));
    for (const auto& id : ids(p.test)) {
      CHECK(ids(p.train).count(id) == 0);
      CHECK(ids(p.val).count(id) == 0);
    }
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("hand-built ten record confusion") {
    // truth (det, cls), prediction (det, top cls, runner-up)
    const std::vector<Label> labels{{0, 0}, {0, 0}, {0, 0}, {1, 1}, {1, 1}, {1, 2}, {1, 2}, {1, 3}, {1, 4}, {1, 4}};
    const std::vector<ModelOutput> outs{output(0, 3, 1), output(1, 2, 1), output(0, 0, 1), output(1, 1, 2),
                                        output(0, 1, 2), output(1, 2, 1), output(1, 3, 2), output(1, 3, 1),
                                        output(1, 0, 4), output(1, 4, 1)};
    const auto m = compute_metrics(outs, labels);
    CHECK(m.count == 10);
    CHECK(m.detection_accuracy == doctest::Approx(0.8));
    CHECK(m.detection_confusion[0][0] == 2);
    CHECK(m.detection_confusion[0][1] == 1);
    CHECK(m.detection_confusion[1][0] == 1);
    CHECK(m.detection_confusion[1][1] == 6);
    CHECK(m.detection_f1 == doctest::Approx(12.0 / 14.0));
    CHECK(m.classification_accuracy == doctest::Approx(0.6));
    CHECK(m.classification_accuracy_ungated == doctest::Approx(0.6));
    CHECK(m.drone_classification_accuracy == doctest::Approx(6.0 / 7.0));
    CHECK(m.classification_f1 == doctest::Approx((4.0 / 7.0 + 3 * (2.0 / 3.0) + 0.5) / 5.0));
    CHECK(m.confusion[4][0] == 1);
    CHECK(m.confusion[0][2] == 1);
    // Order does not matter.
    std::vector<std::size_t> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    KeyedStream rng(1);
    shuffle_with(perm, rng);
    std::vector<Label> pl;
    std::vector<ModelOutput> po;
    for (auto i : perm) {
      pl.push_back(labels[i]);
      po.push_back(outs[i]);
    }
    const auto q = compute_metrics(po, pl);
    CHECK(q.detection_f1 == m.detection_f1);
    CHECK(q.classification_f1 == m.classification_f1);
    CHECK(q.confusion == m.confusion);
  }
  TEST_CASE("all correct and always-drone") {
    std::vector<Label> labels;
    std::vector<ModelOutput> right, always;
    for (std::size_t c = 0; c < 5; ++c) {
      for (int k = 0; k < (c == 0 ? 4 : 1); ++k) {
        labels.push_back({c == 0 ? 0u : 1u, c});
        right.push_back(output(c != 0, c, (c + 1) % 5));
        always.push_back(output(1, 1, 2));
      }
    }
    const auto a = compute_metrics(right, labels);
    CHECK(a.detection_accuracy == 1.0);
    CHECK(a.detection_f1 == 1.0);
    CHECK(a.classification_accuracy == 1.0);
    CHECK(a.classification_f1 == 1.0);
    CHECK(compute_metrics(always, labels).detection_accuracy == 0.5);
  }
}

TEST_SUITE("training loop") {
  TEST_CASE("learns a separable toy problem; best checkpoint is restored") {
    const auto train = toy_samples(10, 1), val = toy_samples(3, 2);
    model::FusionModel m(tiny_model(), 7);
    const auto before = evaluate(m, val);
    auto cfg = quick_train();
    cfg.epochs = 25;
    cfg.patience = 25;
    std::size_t calls = 0;
    const auto r = train_loop(m, train, val, cfg, {}, [&](const EpochLog&) { ++calls; });
    CHECK(calls == r.log.size());
    CHECK(r.log.size() == 25);
    CHECK_FALSE(r.stopped_early);
    for (const auto& e : r.log) CHECK(r.best_val_loss <= e.val_loss);
    CHECK(r.log[r.best_epoch - 1].val_loss == r.best_val_loss);
    const auto outs = predict_all(m, val);
    std::vector<Label> labels;
    for (const auto& s : val) labels.push_back(s.label);
    CHECK(model::joint_loss(outs, labels, {}) == doctest::Approx(r.best_val_loss).epsilon(1e-12));
    const auto after = evaluate(m, val);
    MESSAGE("toy val det " << before.detection_accuracy << " -> " << after.detection_accuracy << ", cls "
                           << before.classification_accuracy << " -> " << after.classification_accuracy);
    CHECK(after.detection_accuracy >= 0.9);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
  }
  TEST_CASE("early stopping respects patience") {
    const auto train = toy_samples(4, 3), val = toy_samples(2, 4);
    model::FusionModel m(tiny_model(), 8);
    auto cfg = quick_train();
    cfg.learning_rate = 0.3;  // far too large: validation loss stalls quickly
    cfg.epochs = 40;
    cfg.patience = 2;
    const auto r = train_loop(m, train, val, cfg, {});
    if (r.stopped_early) {
      CHECK(r.log.size() == r.best_epoch + cfg.patience);
    }
    for (const auto& e : r.log) CHECK(r.best_val_loss <= e.val_loss);
  }
  TEST_CASE("bitwise reproducible and independent of thread count") {
    const auto train = toy_samples(4, 5), val = toy_samples(2, 6);
    auto run = [&](int threads, std::size_t slots) {
      omp_set_num_threads(threads);
      model::FusionModel m(tiny_model(), 9);
      auto cfg = quick_train();
      cfg.epochs = 3;
      cfg.gradient_slots = slots;
      const auto r = train_loop(m, train, val, cfg, {});
      std::vector<double> flat;
      for (const auto& p : m.parameters()) flat.insert(flat.end(), p.value.data.begin(), p.value.data.end());
      flat.push_back(r.log.back().train_loss);
      flat.push_back(r.log.back().val_loss);
      return flat;
    };
    const auto a = run(1, 4), b = run(4, 4);
    omp_set_num_threads(omp_get_num_procs());
    CHECK(a == b);
    CHECK(run(2, 4) == a);
  }
  TEST_CASE("NaN input aborts with the epoch and batch") {
    auto train = toy_samples(2, 7);
    const auto val = toy_samples(1, 8);
    train[3].input.acoustic[5] = std::numeric_limits<double>::quiet_NaN();
    model::FusionModel m(tiny_model(), 10);
    try {
      train_loop(m, train, val, quick_train(), {});
      FAIL("no divergence reported");
    } catch (const DivergenceError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("epoch 1") != std::string::npos);
      CHECK(msg.find("batch") != std::string::npos);
    }
  }
  TEST_CASE("config contract") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.patience = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.test_fraction = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    model::FusionModel m(tiny_model(), 0);
    CHECK_THROWS_AS(train_loop(m, {}, toy_samples(1, 0), {}, {}), ConfigError);
    CHECK_THROWS_AS(evaluate(m, {}), DomainError);
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("ablation table: three rows, identical seeds reproduce it") {
    const auto train = toy_samples(4, 11), val = toy_samples(2, 12), test = toy_samples(2, 13);
    auto cfg = quick_train();
    cfg.epochs = 2;
    const auto a = ablate_modalities(tiny_model(), train, val, test, cfg, {});
    const auto b = ablate_modalities(tiny_model(), train, val, test, cfg, {});
    REQUIRE(a.size() == 3);
    CHECK(a[0].name == "acoustic+range_doppler");
    CHECK(a[1].name == "acoustic");
    CHECK(a[2].name == "range_doppler");
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i].test.detection_accuracy == b[i].test.detection_accuracy);
      CHECK(a[i].test.classification_f1 == b[i].test.classification_f1);
      CHECK(a[i].result.best_val_loss == b[i].result.best_val_loss);
    }
    CHECK(a[1].model->parameters().find("rd.stem.w") == nullptr);
    testutil::TempDir dir("ablate");
    write_ablation_csv(dir / "a.csv", a);
    std::ifstream in(dir / "a.csv");
    std::vector<std::string> lines;
    for (std::string s; std::getline(in, s);) lines.push_back(s);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "modalities,detection_accuracy,detection_f1,classification_accuracy,classification_f1");
    CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 4);
  }
  TEST_CASE("SNR sweep: clean row equals evaluate, radar untouched, default list") {
    const auto test = toy_samples(3, 14);
    model::FusionModel fused(tiny_model(), 15);
    auto ac = tiny_model();
    ac.modalities = {model::Modality::RangeDoppler};
    model::FusionModel rd(ac, 15);
    const model::FusionModel* models[2] = {&fused, &rd};
    const std::vector<double> snrs{6, 12, 18, 24};
    const auto rows = snr_sweep(models, snrs, test, 3);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].snr == "6");
    CHECK(rows[4].snr == "clean");
    CHECK(rows[4].per_model[0].classification_f1 == evaluate(fused, test).classification_f1);
    for (const auto& r : rows) CHECK(r.per_model[1].confusion == rows[4].per_model[1].confusion);
    CHECK(snr_sweep(models, snrs, test, 3)[0].per_model[0].confusion == rows[0].per_model[0].confusion);
    testutil::TempDir dir("snr");
    const std::vector<std::string> names{"fused", "rd"};
    write_snr_csv(dir / "s.csv", names, rows);
    std::ifstream in(dir / "s.csv");
    std::string head;
    std::getline(in, head);
    CHECK(head == "snr_db,fused_detection_accuracy,fused_classification_accuracy,rd_detection_accuracy,rd_classification_accuracy");
    CHECK_THROWS_AS(snr_sweep(models, {}, test, 0, false), ConfigError);
  }
  TEST_CASE("records load from generated files") {
    testutil::TempDir dir("load");
    synth::GenOptions opt;
    opt.radar = testutil::small_radar();
    opt.clip_samples = 64;
    const auto man = synth::gen_dataset(synth::ClassLibrary::default_library(), 2, dir.path(), 1, opt);
    DataConfig dc;
    dc.radar = opt.radar;
    dc.audio_window = 32;
    const auto s = load_samples(man, man.records, dc);
    REQUIRE(s.size() == 10);
    CHECK(s[0].input.acoustic.shape == nn::Shape{1, 32});
    CHECK(s[0].input.range_doppler.shape == nn::Shape{1, 16, 32});
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].label.y_cls == man.records[i].class_label);
      const auto one = load_sample(man, man.records[i], dc);
      CHECK(one.input.acoustic.data == s[i].input.acoustic.data);
      CHECK(one.input.range_doppler.data == s[i].input.range_doppler.data);
    }
    auto bad = man.records[0];
    bad.radar_frame = 99;
    CHECK_THROWS_AS(load_sample(man, bad, dc), IndexError);
    bad = man.records[0];
    bad.acoustic_offset = 40;
    CHECK_THROWS_AS(load_sample(man, bad, dc), SizeError);
    dc.sample_rate = 8000;
    CHECK_THROWS_AS(load_sample(man, man.records[0], dc), ConfigError);
  }
}
