// Copyright 2026 The vbt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "vbt/error.hpp"
#include "vbt/pse.hpp"

using namespace vbt;

namespace {

const std::string kHash = "testhash";

PseConfig tiny_config() {
  PseConfig cfg;
  cfg.latent_dim = 4;
  cfg.conv_channels = {6, 6};
  cfg.conv_kernel = 3;
  cfg.conv_stride = 2;
  cfg.hidden_size = 6;
  cfg.frame_length = 12;
  cfg.pretrain_epochs = 10;
  cfg.train_epochs = 40;
  cfg.batch_size = 4;
  cfg.seed = 3;
  return cfg;
}

FrameFeatureMap random_map(std::size_t frames, std::uint64_t seed, double shift = 0.0) {
  FrameFeatureMap map;
  map.catalog_hash = kHash;
  map.source_id = "m" + std::to_string(seed);
  map.values = Matrix(frames, 72);
  Rng rng(seed);
  for (double& v : map.values.data()) v = rng.normal(shift, 1.0);
  return map;
}

PatientTimeline make_timeline(const std::string& pid, int visits, std::uint64_t seed,
                              double visit_shift = 0.0) {
  PatientTimeline tl;
  tl.patient_id = pid;
  for (int v = 0; v < visits; ++v) {
    VisitRecord visit;
    visit.patient_id = pid;
    visit.timestamp_days = 10.0 * v;
    visit.frame_map = random_map(10, mix_seed(seed, static_cast<std::uint64_t>(v)),
                                 visit_shift * v);
    tl.visits.push_back(std::move(visit));
  }
  return tl;
}

PseModel fitted_model(const PseConfig& cfg, const std::vector<PatientTimeline>& data) {
  PseModel model = PseModel::init(cfg, kHash);
  std::vector<const FrameFeatureMap*> maps;
  for (const PatientTimeline& tl : data) {
    for (const VisitRecord& v : tl.visits) maps.push_back(&v.frame_map);
  }
  model.frame_std = fit_frame_standardizer(maps, cfg.frame_length);
  return model;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("normalize: map already L rows passes through up to standardization") {
  FrameFeatureMap map = random_map(12, 1);
  Standardizer std_;
  std_.mean.assign(72, 0.0f);
  std_.stddev.assign(72, 1.0f);
  std_.fitted = true;
  const Matrix out = normalize_frame_map(map, 12, std_);
  REQUIRE(out.rows() == 12);
  for (std::size_t r = 0; r < 12; ++r) {
    for (std::size_t c = 0; c < 72; ++c) {
      REQUIRE(out.at(r, c) == doctest::Approx(map.values.at(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalize: constant column standardizes to zero under the variance guard") {
  FrameFeatureMap map = random_map(10, 2);
  for (std::size_t r = 0; r < 10; ++r) map.values.at(r, 5) = 7.0;
  Standardizer std_ = fit_frame_standardizer({&map}, 10);
  const Matrix out = normalize_frame_map(map, 10, std_);
  for (std::size_t r = 0; r < 10; ++r) CHECK(out.at(r, 5) == doctest::Approx(0.0));
}

TEST_CASE("normalize: 2L-row linear ramp matches the interpolation oracle") {
  const int big = 24, small = 12;
  FrameFeatureMap map;
  map.catalog_hash = kHash;
  map.values = Matrix(big, 72);
  for (int r = 0; r < big; ++r) {
    for (int c = 0; c < 72; ++c) {
      map.values.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
          static_cast<double>(r) + 0.1 * c;
    }
  }
  Standardizer std_;
  std_.mean.assign(72, 0.0f);
  std_.stddev.assign(72, 1.0f);
  std_.fitted = true;
  const Matrix out = normalize_frame_map(map, small, std_);
  for (int i = 0; i < small; ++i) {
    // index-interpolation oracle on a ramp: value equals the fractional index
    const double pos = static_cast<double>(i) * (big - 1) / (small - 1);
    for (int c = 0; c < 72; c += 13) {
      REQUIRE(out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) ==
              doctest::Approx(pos + 0.1 * c).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(normalize_frame_map(map, small, Standardizer{}), ValidationError);
}

TEST_CASE("sample_latent: zero sigma returns mu; seeded draws repeat") {
  LatentState ls;
  ls.mu = {0.5, -1.0, 2.0};
  ls.sigma = {0.0, 0.0, 0.0};
  Rng rng(1);
  CHECK(sample_latent(ls, rng) == ls.mu);

  ls.sigma = {1.0, 0.5, 2.0};
  Rng a(42), b(42);
  CHECK(sample_latent(ls, a) == sample_latent(ls, b));
}

TEST_CASE("sample_latent: Monte Carlo mean within 3 sigma/sqrt(n) of mu") {
  LatentState ls;
  ls.mu = {1.0, -2.0};
  ls.sigma = {0.7, 1.3};
  Rng rng(7);
  const int n = 100000;
  std::vector<double> acc(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> z = sample_latent(ls, rng);
    acc[0] += z[0];
    acc[1] += z[1];
  }
  for (int k = 0; k < 2; ++k) {
    const double mean = acc[static_cast<std::size_t>(k)] / n;
    const double bound = 3.0 * ls.sigma[static_cast<std::size_t>(k)] / std::sqrt(n);
    CHECK(std::abs(mean - ls.mu[static_cast<std::size_t>(k)]) < bound);
  }
}

TEST_CASE("pair batch: construction, exact swap mirror, allocation stats") {
  std::vector<std::vector<LatentState>> latents;
  Rng init(3);
  for (int p = 0; p < 6; ++p) {
    std::vector<LatentState> states(2);
    for (int v = 0; v < 2; ++v) {
      states[static_cast<std::size_t>(v)].mu = {init.normal(), init.normal(), init.normal()};
      states[static_cast<std::size_t>(v)].sigma = {1.0, 1.0, 1.0};
    }
    latents.push_back(states);
  }

  Rng rng(11);
  const PairBatch batch = build_pair_batch(latents, 0, 1, rng);
  REQUIRE(batch.x_train.size() == 6);
  for (std::size_t p = 0; p < 6; ++p) {
    const int m = batch.allocation[p];
    CHECK(batch.y_train[p] == m);
    CHECK(batch.y_swap[p] == 1 - m);
    const std::vector<double>& zi = latents[p][0].mu;
    const std::vector<double>& zj = latents[p][1].mu;
    for (std::size_t k = 0; k < 3; ++k) {
      const double expect = m == 0 ? zj[k] - zi[k] : zi[k] - zj[k];
      REQUIRE(batch.x_train[p][k] == expect);
      REQUIRE(batch.x_swap[p][k] == -batch.x_train[p][k]);  // exact mirror
    }
  }

  // allocation map is Bernoulli(0.5) over many draws
  Rng stat_rng(123);
  long ones = 0, total = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const PairBatch b = build_pair_batch(latents, 0, 1, stat_rng);
    for (int m : b.allocation) {
      ones += m;
      ++total;
    }
  }
  const double frac = static_cast<double>(ones) / static_cast<double>(total);
  CHECK(std::abs(frac - 0.5) < 0.02);

  CHECK_THROWS_AS(build_pair_batch(latents, 0, 5, rng), ValidationError);
}

TEST_CASE("encode: single-visit timeline gives one latent state") {
  const PseConfig cfg = tiny_config();
  std::vector<PatientTimeline> data = {make_timeline("p0", 1, 5)};
  const PseModel model = fitted_model(cfg, data);
  const std::vector<LatentState> latents = encode_timeline(data[0], model);
  REQUIRE(latents.size() == 1);
  CHECK(latents[0].mu.size() == 4);
  for (double s : latents[0].sigma) CHECK(s > 0.0);
}

TEST_CASE("encode: duplicate timestamps are rejected") {
  PatientTimeline tl = make_timeline("p0", 2, 6);
  tl.visits[1].timestamp_days = tl.visits[0].timestamp_days;
  const PseModel model = fitted_model(tiny_config(), {make_timeline("q", 2, 7)});
  CHECK_THROWS_AS(encode_timeline(tl, model), ValidationError);
}

TEST_CASE("encode: permuted visit order re-sorts to identical output") {
  const PseConfig cfg = tiny_config();
  PatientTimeline tl = make_timeline("p0", 3, 8);
  const PseModel model = fitted_model(cfg, {tl});
  const std::vector<LatentState> sorted = encode_timeline(tl, model);

  PatientTimeline shuffled = tl;
  std::swap(shuffled.visits[0], shuffled.visits[2]);
  const std::vector<LatentState> resorted = encode_timeline(shuffled, model);
  REQUIRE(sorted.size() == resorted.size());
  for (std::size_t v = 0; v < sorted.size(); ++v) {
    CHECK(sorted[v].mu == resorted[v].mu);
    CHECK(sorted[v].sigma == resorted[v].sigma);
  }
}

TEST_CASE("compare: zeroed classifier weights output exactly 0.5") {
  const PseConfig cfg = tiny_config();
  const PatientTimeline tl = make_timeline("p0", 2, 9);
  PseModel model = fitted_model(cfg, {tl});
  model.params[static_cast<std::size_t>(model.param_index("cls.w"))].data.assign(4, 0.0f);
  model.params[static_cast<std::size_t>(model.param_index("cls.b"))].data.assign(1, 0.0f);
  CHECK(compare_visits(tl, 0, 1, model) == 0.5);
}

TEST_CASE("compare: zero-bias swap antisymmetry holds to 1e-9") {
  PseConfig cfg = tiny_config();
  cfg.bias_mode = BiasMode::kZero;
  const PseModel model = fitted_model(cfg, {make_timeline("p0", 3, 10)});
  const PatientTimeline tl = make_timeline("p1", 3, 11);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double f = compare_visits(tl, i, j, model);
      const double b = compare_visits(tl, j, i, model);
      REQUIRE(std::abs(f + b - 1.0) < 1e-9);
    }
  }
  CHECK_THROWS_AS(compare_visits(tl, 0, 3, model), ValidationError);
}

TEST_CASE("pretrain: constant-map dataset with k2 = 0 overfits below 1e-3") {
  PseConfig cfg = tiny_config();
  cfg.k2 = 0.0;
  cfg.pretrain_epochs = 200;
  cfg.lr = 3e-3;
  FrameFeatureMap constant;
  constant.catalog_hash = kHash;
  constant.values = Matrix(10, 72, 0.0);
  Rng rng(13);
  for (std::size_t c = 0; c < 72; ++c) {
    const double v = rng.normal();
    for (std::size_t r = 0; r < 10; ++r) constant.values.at(r, c) = v;
  }
  PatientTimeline tl;
  tl.patient_id = "p0";
  VisitRecord visit;
  visit.patient_id = "p0";
  visit.timestamp_days = 0.0;
  visit.frame_map = constant;
  tl.visits.push_back(visit);

  PseModel model = PseModel::init(cfg, kHash);
  const TrainCurve curve = pretrain_reconstruction({tl}, model);
  REQUIRE(curve.epoch_losses.size() == 200);
  CHECK(curve.epoch_losses.back() < 1e-3);
}

TEST_CASE("pretrain: k1 = 0 drives the latent toward the prior") {
  PseConfig cfg = tiny_config();
  cfg.k1 = 0.0;
  cfg.k2 = 1.0;
  cfg.pretrain_epochs = 300;
  cfg.lr = 5e-3;
  const PatientTimeline tl = make_timeline("p0", 2, 14);
  PseModel model = PseModel::init(cfg, kHash);
  pretrain_reconstruction({tl}, model);
  const std::vector<LatentState> latents = encode_timeline(tl, model);
  for (const LatentState& ls : latents) {
    for (std::size_t k = 0; k < ls.mu.size(); ++k) {
      CHECK(std::abs(ls.mu[k]) < 0.1);
      CHECK(ls.sigma[k] == doctest::Approx(1.0).epsilon(0.1));
    }
  }
}

TEST_CASE("pretrain: smoothed loss is non-increasing on synthetic data") {
  for (std::uint64_t seed : {1u, 2u}) {
    PseConfig cfg = tiny_config();
    cfg.seed = seed;
    cfg.pretrain_epochs = 40;
    std::vector<PatientTimeline> data;
    for (int p = 0; p < 3; ++p) {
      data.push_back(make_timeline("p" + std::to_string(p), 2, mix_seed(seed, 100 + p)));
    }
    PseModel model = PseModel::init(cfg, kHash);
    const TrainCurve curve = pretrain_reconstruction(data, model);
    for (double loss : curve.epoch_losses) REQUIRE(std::isfinite(loss));
    // window-5 smoothed curve
    std::vector<double> smooth;
    for (std::size_t e = 0; e + 5 <= curve.epoch_losses.size(); ++e) {
      double acc = 0.0;
      for (std::size_t w = 0; w < 5; ++w) acc += curve.epoch_losses[e + w];
      smooth.push_back(acc / 5.0);
    }
    for (std::size_t e = 1; e < smooth.size(); ++e) {
      REQUIRE(smooth[e] <= smooth[e - 1] * 1.02);  // tolerate plateau wiggle
    }
  }
}

TEST_CASE("classifier: linearly separable latent pairs reach >= 0.99 train accuracy") {
  PseConfig cfg = tiny_config();
  cfg.train_epochs = 120;
  cfg.pretrain_epochs = 0;
  // visit 1 shifted consistently: the encoder just needs a direction
  std::vector<PatientTimeline> data;
  for (int p = 0; p < 8; ++p) {
    data.push_back(make_timeline("p" + std::to_string(p), 2, 200 + p, /*visit_shift=*/1.5));
  }
  PseModel model = fitted_model(cfg, data);
  const ClassifierTrainResult res = train_pairwise_classifier(data, model);
  CHECK(res.train_accuracy >= 0.99);
}

TEST_CASE("classifier: overfit-one-patient BCE < 0.1 within 500 epochs") {
  PseConfig cfg = tiny_config();
  cfg.train_epochs = 500;
  cfg.pretrain_epochs = 0;
  cfg.lr = 3e-3;
  std::vector<PatientTimeline> data = {make_timeline("p0", 2, 300, 0.5)};
  PseModel model = fitted_model(cfg, data);
  const ClassifierTrainResult res = train_pairwise_classifier(data, model);
  CHECK(res.epoch_losses.back() < 0.1 * 2.0);  // loss sums the two BCE halves
  CHECK(res.train_accuracy == 1.0);
}

TEST_CASE("training: fixed seed reproduces parameters bitwise") {
  auto run = [] {
    PseConfig cfg = tiny_config();
    cfg.train_epochs = 15;
    cfg.pretrain_epochs = 5;
    std::vector<PatientTimeline> data;
    for (int p = 0; p < 3; ++p) {
      data.push_back(make_timeline("p" + std::to_string(p), 2, 400 + p, 0.7));
    }
    PseModel model = fitted_model(cfg, data);
    pretrain_reconstruction(data, model);
    train_pairwise_classifier(data, model);
    return model;
  };
  const PseModel a = run();
  const PseModel b = run();
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    REQUIRE(a.params[i].data == b.params[i].data);
  }
}

TEST_CASE("checkpoint: round trip is exact, wrong hash refused") {
  PseConfig cfg = tiny_config();
  std::vector<PatientTimeline> data = {make_timeline("p0", 2, 500)};
  PseModel model = fitted_model(cfg, data);
  const std::string path = tmp_path("vbt_ckpt.bin");
  save_checkpoint(model, path);
  const PseModel loaded = load_checkpoint(path, kHash);
  REQUIRE(loaded.param_names == model.param_names);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    REQUIRE(loaded.params[i].data == model.params[i].data);
  }
  CHECK(loaded.frame_std.mean == model.frame_std.mean);
  CHECK(loaded.config.latent_dim == cfg.latent_dim);

  CHECK_THROWS_AS(load_checkpoint(path, "otherhash"), ValidationError);

  // truncated container is rejected
  std::ifstream in(path, std::ios::binary);
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string cut = tmp_path("vbt_ckpt_cut.bin");
  std::ofstream out(cut, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  CHECK_THROWS_AS(load_checkpoint(cut, kHash), ValidationError);
}

TEST_CASE("merge modes: concat extends the latent, global_only replaces it") {
  PseConfig cfg = tiny_config();
  cfg.merge_mode = MergeMode::kConcatGlobal;
  cfg.selected_global_ids = {0, 5, 7};

  PatientTimeline tl = make_timeline("p0", 2, 600);
  for (VisitRecord& v : tl.visits) {
    v.global_vec.values.assign(10, 0.0);
    for (std::size_t k = 0; k < 10; ++k) v.global_vec.values[k] = static_cast<double>(k);
  }
  PseModel model = fitted_model(cfg, {tl});
  model.global_std.mean.assign(3, 0.0f);
  model.global_std.stddev.assign(3, 1.0f);
  model.global_std.fitted = true;

  const std::vector<LatentState> latents = encode_timeline(tl, model);
  REQUIRE(latents[0].mu.size() == 4 + 3);
  CHECK(latents[0].mu[4] == doctest::Approx(0.0));  // standardized id 0
  CHECK(latents[0].mu[5] == doctest::Approx(5.0));
  CHECK(latents[0].sigma[5] == doctest::Approx(1.0));  // merged dims carry sigma 1

  PseConfig go = cfg;
  go.merge_mode = MergeMode::kGlobalOnly;
  PseModel global_model = PseModel::init(go, kHash);
  global_model.global_std = model.global_std;
  const std::vector<LatentState> g_latents = encode_timeline(tl, global_model);
  REQUIRE(g_latents[0].mu.size() == 3);
  CHECK(g_latents[0].mu[1] == doctest::Approx(5.0));
  CHECK_THROWS_AS(pretrain_reconstruction({tl}, global_model), ValidationError);
}
