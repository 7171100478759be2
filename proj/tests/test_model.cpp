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

#include <algorithm>

#include "dronefuse/error.hpp"
#include "dronefuse/gradcheck_suite.hpp"
#include "dronefuse/model.hpp"
#include "dronefuse/nn/gradcheck.hpp"
#include "dronefuse/rng.hpp"

using namespace dronefuse;
using namespace dronefuse::model;
using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

// Acoustic widths [8, 16], embed 32, small 8 x 12 maps.
ModelConfig toy() {
  ModelConfig c;
  c.acoustic.num_se_blocks = 2;
  c.acoustic.widths = {8, 16};
  c.acoustic.embed_dim = 32;
  c.range_doppler.kernels = {3, 5};
  c.range_doppler.widths = {8, 16};
  c.range_doppler.embed_dim = 32;
  c.fusion = {4, 1, 32, 64};
  c.head_hidden = 16;
  c.dropout = 0.3;
  c.acoustic_length = 1000;
  c.rd_height = 8;
  c.rd_width = 12;
  return c;
}

Tensor random_tensor(nn::Shape s, std::uint64_t key, double scale = 1.0) {
  Tensor t(std::move(s));
  KeyedStream rng(key);
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

SampleInput random_input(const ModelConfig& c, std::uint64_t key) {
  return {random_tensor({1, c.acoustic_length}, key, 0.3), random_tensor({1, c.rd_height, c.rd_width}, key + 1, 0.5)};
}

void set_all(FusionModel& m, const std::string& prefix, double v) {
  for (auto& p : m.parameters()) {
    if (p.name.rfind(prefix, 0) == 0) std::fill(p.value.data.begin(), p.value.data.end(), v);
  }
}

std::vector<double> values(Graph& g, Var v) { return g.value(v).data; }

std::uint64_t conv_params(std::uint64_t cin, std::uint64_t cout, std::uint64_t taps) { return cout * cin * taps + cout; }
std::uint64_t lin_params(std::uint64_t din, std::uint64_t dout, bool bias = true) { return din * dout + (bias ? dout : 0); }

}  // namespace

TEST_SUITE("counts") {
  TEST_CASE("linear 128 -> 2 with bias has 258 parameters") {
    CHECK(lin_params(128, 2) == 258);
    nn::ParameterStore s;
    s.add("w", {2, 128}, nn::Init::HeUniform, 128, 2, 0);
    s.add("b", {2}, nn::Init::Zeros, 128, 2, 0);
    CHECK(s.element_count() == 258);
  }
  TEST_CASE("toy parameter count matches the per-layer closed form") {
    const auto c = toy();
    const FusionModel m(c, 1);
    std::uint64_t n = conv_params(1, 8, 15);
    for (std::uint64_t k : {7u, 107u}) {
      n += 2 * conv_params(8, 8, k) + lin_params(8, 2) + lin_params(2, 8);
      n += conv_params(8, 16, k) + conv_params(16, 16, k) + lin_params(16, 4) + lin_params(4, 16) + conv_params(8, 16, 1);
    }
    n += lin_params(16, 32);
    n += conv_params(1, 8, 9);
    n += 2 * conv_params(8, 8, 9) + lin_params(8, 2) + lin_params(2, 8);
    n += conv_params(8, 16, 25) + conv_params(16, 16, 25) + lin_params(16, 4) + lin_params(4, 16) + conv_params(8, 16, 1);
    n += lin_params(16, 32);
    n += 2 * 32;                                                  // modality table
    n += 3 * lin_params(32, 32) + lin_params(32, 32, false);      // q, v, o and bias-free k
    n += lin_params(32, 64) + lin_params(64, 32) + 4 * 32;        // ffn and two layer norms
    n += lin_params(32, 16) + lin_params(16, 2) + lin_params(32, 16) + lin_params(16, 5);
    CHECK(count_parameters(m) == n);
    CHECK(n == 81313);
  }
  TEST_CASE("toy mult-add count matches the closed form and the graph tally") {
    const auto c = toy();
    const std::uint64_t len = (1000 + 14 - 15) / 8 + 1, hw = 8 * 12;
    std::uint64_t n = len * 8 * 15;
    for (std::uint64_t k : {7u, 107u}) {
      n += len * (8 * 8 * k * 2) + 2 * 8 * 2;
      n += len * (16 * 8 * k + 16 * 16 * k + 16 * 8) + 2 * 16 * 4;
    }
    n += 16 * 32;
    n += hw * 8 * 9 + hw * (8 * 8 * 9 * 2) + 2 * 8 * 2 + hw * (16 * 8 * 25 + 16 * 16 * 25 + 16 * 8) + 2 * 16 * 4 + 16 * 32;
    n += 4 * 2 * 32 * 32 + 2 * 2 * 2 * 32 + 2 * 2 * 32 * 64;
    n += 2 * 16 * 32 + 16 * 7;
    CHECK(count_mult_adds(c) == n);
    const FusionModel m(c, 2);
    Graph g(false);
    m.forward(g, random_input(c, 3));
    CHECK(g.mult_adds() == n);
  }
  TEST_CASE("paper configuration is reported next to 15 M / 68.5 G") {
    const ModelConfig paper;
    const FusionModel m(paper, 0);
    const auto params = count_parameters(m);
    const auto macs = count_mult_adds(paper);
    MESSAGE("paper-config parameters " << params << " (paper: 15 M), mult-adds " << macs << " (paper: 68.5 G)");
    CHECK(params == 6301131);
    CHECK(macs == 54836914240ull);
  }
}

TEST_SUITE("encoders") {
  TEST_CASE("SE gate: zero excitation gives 0.5, gates strictly inside (0, 1)") {
    const auto c = toy();
    FusionModel m(c, 4);
    Graph g(false);
    const Var u = g.constant(random_tensor({8, 40}, 5, 3.0));
    for (const auto& gv : values(g, m.se_gate(g, u, "acoustic.small.0"))) {
      CHECK(gv > 0.0);
      CHECK(gv < 1.0);
    }
    set_all(m, "acoustic.small.0.fc", 0.0);
    for (double gv : values(g, m.se_gate(g, u, "acoustic.small.0"))) CHECK(gv == 0.5);
  }
  TEST_CASE("saturated gate reduces the block to a plain residual block") {
    const auto c = toy();
    FusionModel m(c, 6);
    set_all(m, "rd.0.fc2.w", 0.0);
    set_all(m, "rd.0.fc2.b", 50.0);  // sigmoid(50) == 1 in double
    Graph g(false);
    const Var x = g.constant(random_tensor({8, 8, 12}, 7));
    const auto xv = values(g, x);
    const auto out = values(g, m.se_block(g, x, "rd.0", 3, true));
    const auto& s = m.parameters();
    Var u = nn::ops::conv2d(g, x, g.param(*s.find("rd.0.conv1.w")), g.param(*s.find("rd.0.conv1.b")), 1, 1);
    u = nn::ops::conv2d(g, nn::ops::relu(g, u), g.param(*s.find("rd.0.conv2.w")), g.param(*s.find("rd.0.conv2.b")), 1, 1);
    const auto uv = values(g, u);
    REQUIRE(out.size() == uv.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == std::max(0.0, uv[i] + xv[i]));
  }
  TEST_CASE("SE block gradients, 1-D and 2-D") {
    const auto c = toy();
    FusionModel m(c, 8);
    for (const auto& [prefix, k, two_d, shape] :
         {std::tuple{std::string("acoustic.small.1"), std::size_t{7}, false, nn::Shape{8, 20}},
          std::tuple{std::string("rd.1"), std::size_t{5}, true, nn::Shape{8, 7, 9}}}) {
      CAPTURE(prefix);
      const auto x = random_tensor(shape, 9);
      const auto w = random_tensor({2 * x.size()}, 10).data;
      nn::GradCheckOptions o;
      o.max_coords_per_tensor = 6;
      const auto r = nn::grad_check(
          [&](Graph& g, std::span<const Var> v) {
            const Var y = m.se_block(g, v[0], prefix, k, two_d);
            return nn::ops::weighted_sum(g, y, std::span(w).first(g.value(y).size()));
          },
          {x}, o);
      CHECK(r.max_relative_error < 1e-4);
      const auto rp = nn::grad_check_parameters(
          m.parameters(),
          [&](Graph& g) {
            const Var y = m.se_block(g, g.constant(x), prefix, k, two_d);
            return nn::ops::weighted_sum(g, y, std::span(w).first(g.value(y).size()));
          },
          o);
      CHECK(rp.max_relative_error < 1e-4);
    }
  }
  TEST_CASE("acoustic encoder shape contract and zero input") {
    const auto c = toy();
    const FusionModel m(c, 11);
    for (std::size_t len : {c.acoustic.min_input_length(), std::size_t{1000}, std::size_t{1601}}) {
      Graph g(false);
      CHECK(g.shape(m.encode_acoustic(g, g.constant(random_tensor({1, len}, len)))) == nn::Shape{32});
    }
    Graph g(false);
    for (double v : values(g, m.encode_acoustic(g, g.constant(Tensor({1, 1000}))))) CHECK(v == 0.0);
    CHECK_THROWS_AS(m.encode_acoustic(g, g.constant(Tensor({1, c.acoustic.min_input_length() - 1}))), DimensionError);
    CHECK_THROWS_AS(m.encode_acoustic(g, g.constant(Tensor({2, 1000}))), DimensionError);
  }
  TEST_CASE("branch swap leaves the summed output unchanged when branches share a shape") {
    auto c = toy();
    c.acoustic.large_kernel = c.acoustic.small_kernel;
    FusionModel m(c, 12);
    const auto wave = random_tensor({1, 1000}, 13);
    Graph g1(false);
    const auto before = values(g1, m.encode_acoustic(g1, g1.constant(wave)));
    auto& s = m.parameters();
    std::size_t swapped = 0;
    for (auto& p : s) {
      if (p.name.rfind("acoustic.small.", 0) != 0) continue;
      auto* q = s.find("acoustic.large." + p.name.substr(15));
      REQUIRE(q != nullptr);
      REQUIRE(q->value.shape == p.value.shape);
      std::swap(p.value.data, q->value.data);
      ++swapped;
    }
    CHECK(swapped > 0);
    Graph g2(false);
    CHECK(values(g2, m.encode_acoustic(g2, g2.constant(wave))) == before);
    // With the default asymmetric kernels the branch weights cannot be exchanged.
    const FusionModel d(toy(), 12);
    CHECK(d.parameters().find("acoustic.small.0.conv1.w")->value.shape !=
          d.parameters().find("acoustic.large.0.conv1.w")->value.shape);
  }
  TEST_CASE("range-Doppler encoder on a 128 x 256 map; zero map; no down-sampling") {
    auto c = toy();
    c.range_doppler.widths = {4, 4};
    c.se_reduction = 2;
    c.rd_height = 128;
    c.rd_width = 256;
    const FusionModel m(c, 14);
    Graph g(false);
    CHECK(g.shape(m.encode_range_doppler(g, g.constant(random_tensor({1, 128, 256}, 15)))) == nn::Shape{32});
    for (double v : values(g, m.encode_range_doppler(g, g.constant(Tensor({1, 128, 256}))))) CHECK(v == 0.0);
    CHECK(g.shape(m.se_block(g, g.constant(random_tensor({4, 128, 256}, 16)), "rd.1", 5, true)) == nn::Shape{4, 128, 256});
    CHECK_THROWS_AS(m.encode_range_doppler(g, g.constant(Tensor({1, 4, 256}))), DimensionError);
  }
}

TEST_SUITE("fusion and heads") {
  TEST_CASE("fuse: one token, two tokens, gradients") {
    const auto c = toy();
    FusionModel m(c, 17);
    const auto e1 = random_tensor({32}, 18), e2 = random_tensor({32}, 19);
    const Modality both[2] = {Modality::Acoustic, Modality::RangeDoppler};
    Graph g(false);
    CHECK(g.shape(m.fuse(g, std::vector{g.constant(e1)}, std::span(both, 1))) == nn::Shape{32});
    // Identical embeddings: the modality table makes the two tokens differ.
    const auto& table = m.parameters().find("fusion.modality")->value.data;
    CHECK_FALSE(std::equal(table.begin(), table.begin() + 32, table.begin() + 32));
    CHECK_THROWS_AS(m.fuse(g, std::vector<Var>{}, std::span(both, 0)), ConfigError);
    const Modality bad[1] = {static_cast<Modality>(7)};
    CHECK_THROWS_AS(m.fuse(g, std::vector{g.constant(e1)}, bad), ConfigError);
    const auto w = random_tensor({32}, 20).data;
    const auto r = nn::grad_check(
        [&](Graph& gg, std::span<const Var> v) {
          return nn::ops::weighted_sum(gg, m.fuse(gg, std::vector{v[0], v[1]}, both), w);
        },
        {e1, e2});
    CHECK(r.max_relative_error < 1e-4);
    nn::GradCheckOptions o;
    o.max_coords_per_tensor = 8;
    const auto rp = nn::grad_check_parameters(
        m.parameters(),
        [&](Graph& gg) { return nn::ops::weighted_sum(gg, m.fuse(gg, std::vector{gg.constant(e1), gg.constant(e2)}, both), w); },
        o);
    CHECK(rp.max_relative_error < 1e-4);
  }
  TEST_CASE("heads: widths, eval determinism, gradients") {
    const auto c = toy();
    FusionModel m(c, 21);
    const auto f = random_tensor({32}, 22);
    Graph g(false);
    const Var fv = g.constant(f);
    CHECK(g.shape(m.detection_head(g, fv)) == nn::Shape{2});
    CHECK(g.shape(m.classification_head(g, fv)) == nn::Shape{5});
    CHECK(values(g, m.classification_head(g, fv)) == values(g, m.classification_head(g, fv)));
    const ForwardOptions train{true, 99};
    CHECK(values(g, m.classification_head(g, fv, train)) != values(g, m.classification_head(g, fv)));
    for (int which = 0; which < 2; ++which) {
      const auto r = nn::grad_check(
          [&](Graph& gg, std::span<const Var> v) {
            const Var y = which ? m.classification_head(gg, v[0], train) : m.detection_head(gg, v[0], train);
            return nn::ops::cross_entropy(gg, y, 1);
          },
          {f});
      CHECK(r.max_relative_error < 1e-4);
    }
  }
  TEST_CASE("forward is a pure function in eval mode") {
    const auto c = toy();
    const FusionModel m(c, 23);
    const auto in = random_input(c, 24);
    const auto a = m.predict(in), b = m.predict(in);
    CHECK(a.det_logits == b.det_logits);
    CHECK(a.cls_logits == b.cls_logits);
    for (double v : a.cls_logits) CHECK(std::isfinite(v));
  }
  TEST_CASE("acoustic-only forward equals the fused model with the radar token removed") {
    auto c = toy();
    const FusionModel fused(c, 25);
    c.modalities = {Modality::Acoustic};
    const FusionModel solo(c, 25);
    const auto in = random_input(c, 26);
    Graph g(false);
    const Modality ids[1] = {Modality::Acoustic};
    const Var f = fused.fuse(g, std::vector{fused.encode_acoustic(g, g.constant(in.acoustic))}, ids);
    const auto det = values(g, fused.detection_head(g, f));
    const auto cls = values(g, fused.classification_head(g, f));
    const auto out = solo.predict(SampleInput{in.acoustic, {}});
    CHECK(std::equal(det.begin(), det.end(), out.det_logits.begin()));
    CHECK(std::equal(cls.begin(), cls.end(), out.cls_logits.begin()));
    // Zeroing the map is not the same thing.
    auto zeroed = in;
    std::fill(zeroed.range_doppler.data.begin(), zeroed.range_doppler.data.end(), 0.0);
    CHECK(fused.predict(zeroed).cls_logits != out.cls_logits);
    CHECK_THROWS_AS(fused.predict(SampleInput{in.acoustic, {}}), DimensionError);
    CHECK(solo.parameters().find("rd.stem.w") == nullptr);
  }
}

TEST_SUITE("joint loss") {
  ModelOutput out(std::array<double, 2> d, std::array<double, 5> c) { return {d, c}; }

  TEST_CASE("perfect predictions give zero loss") {
    const auto o = out({-1000, 1000}, {-1000, -1000, 1000, -1000, -1000});
    const Label l{1, 2};
    CHECK(joint_loss(std::span(&o, 1), std::span(&l, 1), {}) == 0.0);
  }
  TEST_CASE("definition, masking and lambda") {
    KeyedStream rng(30);
    std::vector<ModelOutput> outs(9);
    std::vector<Label> labels(9);
    for (std::size_t i = 0; i < 9; ++i) {
      for (double& v : outs[i].det_logits) v = rng.normal();
      for (double& v : outs[i].cls_logits) v = rng.normal();
      labels[i] = i % 3 == 0 ? Label{0, 0} : Label{1, 1 + rng.below(4)};
    }
    for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
      double ref = 0.0;
      for (std::size_t i = 0; i < 9; ++i) {
        ref += nn::cross_entropy_value(outs[i].det_logits, labels[i].y_det);
        if (labels[i].y_det) ref += lambda * nn::cross_entropy_value(outs[i].cls_logits, labels[i].y_cls);
      }
      CHECK(joint_loss(outs, labels, {lambda}) == doctest::Approx(ref / 9).epsilon(1e-14));
      CHECK(joint_loss(outs, labels, {lambda}) >= 0.0);
    }
    CHECK(joint_loss(outs, labels, {0.0}) == doctest::Approx(detection_loss(outs, labels)));
    // Permutation invariance.
    auto po = outs;
    auto pl = labels;
    std::reverse(po.begin(), po.end());
    std::reverse(pl.begin(), pl.end());
    CHECK(joint_loss(po, pl, {}) == doctest::Approx(joint_loss(outs, labels, {})).epsilon(1e-14));
    // Non-drone samples ignore the classification logits entirely.
    std::vector<ModelOutput> neg{outs[0], outs[3]};
    const std::vector<Label> nl{{0, 0}, {0, 0}};
    const double base = joint_loss(neg, nl, {});
    neg[0].cls_logits = {100, -100, 3, 4, 5};
    CHECK(joint_loss(neg, nl, {}) == base);
    CHECK(base == doctest::Approx(detection_loss(neg, nl)));
    CHECK_THROWS_AS(joint_loss(std::span<const ModelOutput>{}, std::span<const Label>{}, {}), DomainError);
    CHECK_THROWS_AS(joint_loss(outs, labels, {-1.0}), ConfigError);
  }
  TEST_CASE("label consistency") {
    CHECK_THROWS_AS(Label({0, 2}).validate(), ConfigError);
    CHECK_THROWS_AS(Label({1, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(Label({2, 1}).validate(), IndexError);
    CHECK_NOTHROW(Label({1, 4}).validate());
  }
  TEST_CASE("an all non-drone batch gives exactly zero classification-head gradients") {
    const auto c = toy();
    const FusionModel m(c, 31);
    Graph g;
    std::vector<ForwardVars> outs;
    std::vector<Label> labels;
    for (std::uint64_t i = 0; i < 3; ++i) {
      outs.push_back(m.forward(g, random_input(c, 40 + i), {true, i}));
      labels.push_back({0, 0});
    }
    g.backward(joint_loss(g, outs, labels, {2.0}));
    nn::GradBuffer grads(m.parameters());
    g.accumulate_param_grads(grads);
    bool any_other = false;
    for (const auto& p : m.parameters()) {
      const auto& gr = grads[p.index];
      if (p.name.rfind("cls.", 0) == 0) {
        for (double v : gr) CHECK(v == 0.0);
      } else {
        any_other = any_other || std::any_of(gr.begin(), gr.end(), [](double v) { return v != 0.0; });
      }
    }
    CHECK(any_other);
    // Graph and value forms agree.
    std::vector<ModelOutput> vals;
    for (const auto& o : outs) {
      ModelOutput mo;
      std::copy_n(g.value(o.det).data.begin(), 2, mo.det_logits.begin());
      std::copy_n(g.value(o.cls).data.begin(), 5, mo.cls_logits.begin());
      vals.push_back(mo);
    }
    Graph g2;
    std::vector<ForwardVars> outs2;
    for (std::uint64_t i = 0; i < 3; ++i) outs2.push_back(m.forward(g2, random_input(c, 40 + i), {true, i}));
    labels[1] = {1, 3};
    CHECK(g2.value(joint_loss(g2, outs2, labels, {2.0}))[0] == doctest::Approx(joint_loss(vals, labels, {2.0})).epsilon(1e-13));
  }
  TEST_CASE("end-to-end joint-loss gradient through a small fused model") {
    const auto r = end_to_end_gradcheck(0);
    CAPTURE(r.result.worst);
    CHECK(r.result.coordinates > 100);
    CHECK(r.result.max_relative_error < 1e-3);
  }
}

TEST_CASE("config validation") {
  auto c = toy();
  c.fusion.n_heads = 5;
  CHECK_THROWS_AS(FusionModel(c, 0), ConfigError);
  c = toy();
  c.acoustic.widths = {8};
  CHECK_THROWS_AS(FusionModel(c, 0), ConfigError);
  c = toy();
  c.acoustic.small_kernel = 6;
  CHECK_THROWS_AS(FusionModel(c, 0), ConfigError);
  c = toy();
  c.se_reduction = 16;
  CHECK_THROWS_AS(FusionModel(c, 0), ConfigError);
  c = toy();
  c.acoustic_length = 100;
  CHECK_THROWS_AS(FusionModel(c, 0), DimensionError);
  c = toy();
  c.modalities = {Modality::Acoustic, Modality::Acoustic};
  CHECK_THROWS_AS(FusionModel(c, 0), ConfigError);
  c = toy();
  c.rd_width = 4;
  CHECK_THROWS_AS(FusionModel(c, 0), DimensionError);
}
