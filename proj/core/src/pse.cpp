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

#include "vbt/pse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "vbt/error.hpp"

namespace vbt {
namespace {

constexpr char kMagic[8] = {'V', 'B', 'T', 'C', 'K', 'P', 'T', '\x01'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr float kStdGuard = 1e-6f;

int conv_out_len(int t, int kernel, int stride) {
  const int pad = kernel / 2;
  return (t + 2 * pad - kernel) / stride + 1;
}

int encoder_time_len(const PseConfig& cfg) {
  int t = cfg.frame_length;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    t = conv_out_len(t, cfg.conv_kernel, cfg.conv_stride);
    if (t <= 0) throw ValidationError("conv stack collapses the frame axis to nothing");
  }
  return t;
}

Tensor xavier(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
  return t;
}

Matrix resample_rows(const Matrix& src, int length) {
  const std::size_t t = src.rows();
  const std::size_t c = src.cols();
  Matrix out(static_cast<std::size_t>(length), c);
  for (int i = 0; i < length; ++i) {
    double pos = 0.0;
    if (length > 1 && t > 1) {
      pos = static_cast<double>(i) * static_cast<double>(t - 1) / static_cast<double>(length - 1);
    }
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), t - 1);
    const std::size_t hi = std::min(lo + 1, t - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t j = 0; j < c; ++j) {
      out.at(static_cast<std::size_t>(i), j) =
          src.at(lo, j) * (1.0 - frac) + src.at(hi, j) * frac;
    }
  }
  return out;
}

std::vector<float> standardized_globals(const GlobalFeatureVector& vec, const PseModel& model) {
  const auto& ids = model.config.selected_global_ids;
  if (!model.global_std.fitted) throw ValidationError("global standardizer not fitted");
  std::vector<float> out(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::size_t id = static_cast<std::size_t>(ids[k]);
    if (id >= vec.values.size()) throw ValidationError("selected global id out of range");
    out[k] = (static_cast<float>(vec.values[id]) - model.global_std.mean[k]) /
             std::max(model.global_std.stddev[k], kStdGuard);
  }
  return out;
}

}  // namespace

int PseConfig::latent_total_dim() const {
  switch (merge_mode) {
    case MergeMode::kLatentOnly: return latent_dim;
    case MergeMode::kConcatGlobal: return latent_dim + static_cast<int>(selected_global_ids.size());
    case MergeMode::kGlobalOnly: return static_cast<int>(selected_global_ids.size());
  }
  return latent_dim;
}

void sort_and_validate_timeline(PatientTimeline& tl) {
  if (tl.visits.empty()) throw ValidationError("timeline has no visits: " + tl.patient_id);
  std::stable_sort(tl.visits.begin(), tl.visits.end(),
                   [](const VisitRecord& a, const VisitRecord& b) {
                     return a.timestamp_days < b.timestamp_days;
                   });
  for (std::size_t i = 1; i < tl.visits.size(); ++i) {
    if (!(tl.visits[i - 1].timestamp_days < tl.visits[i].timestamp_days)) {
      throw ValidationError("timestamps must be strictly increasing for patient " +
                            tl.patient_id);
    }
  }
}

std::vector<double> sample_latent(const LatentState& ls, Rng& rng, bool deterministic) {
  std::vector<double> z(ls.mu.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = deterministic ? ls.mu[k] : ls.mu[k] + ls.sigma[k] * rng.normal();
  }
  return z;
}

Standardizer fit_frame_standardizer(const std::vector<const FrameFeatureMap*>& maps, int length) {
  if (maps.empty()) throw ValidationError("no frame maps to fit");
  const std::size_t c = maps[0]->values.cols();
  std::vector<double> sum(c, 0.0), sum_sq(c, 0.0);
  double count = 0.0;
  for (const FrameFeatureMap* map : maps) {
    const Matrix resampled = resample_rows(map->values, length);
    for (std::size_t r = 0; r < resampled.rows(); ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const double v = resampled.at(r, j);
        sum[j] += v;
        sum_sq[j] += v * v;
      }
    }
    count += static_cast<double>(resampled.rows());
  }
  Standardizer s;
  s.mean.resize(c);
  s.stddev.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    const double m = sum[j] / count;
    const double var = std::max(0.0, sum_sq[j] / count - m * m);
    s.mean[j] = static_cast<float>(m);
    s.stddev[j] = static_cast<float>(std::sqrt(var));
  }
  s.fitted = true;
  return s;
}

Standardizer fit_global_standardizer(const std::vector<const GlobalFeatureVector*>& vecs,
                                     const std::vector<int>& selected_ids) {
  if (vecs.empty()) throw ValidationError("no global vectors to fit");
  Standardizer s;
  s.mean.resize(selected_ids.size());
  s.stddev.resize(selected_ids.size());
  for (std::size_t k = 0; k < selected_ids.size(); ++k) {
    const std::size_t id = static_cast<std::size_t>(selected_ids[k]);
    double sum = 0.0, sum_sq = 0.0;
    for (const GlobalFeatureVector* v : vecs) {
      if (id >= v->values.size()) throw ValidationError("selected global id out of range");
      sum += v->values[id];
      sum_sq += v->values[id] * v->values[id];
    }
    const double n = static_cast<double>(vecs.size());
    const double m = sum / n;
    s.mean[k] = static_cast<float>(m);
    s.stddev[k] = static_cast<float>(std::sqrt(std::max(0.0, sum_sq / n - m * m)));
  }
  s.fitted = true;
  return s;
}

Matrix normalize_frame_map(const FrameFeatureMap& map, int length, const Standardizer& std_) {
  if (!std_.fitted) throw ValidationError("frame standardizer not fitted");
  if (map.values.rows() == 0) throw ValidationError("empty frame map");
  if (map.values.cols() != std_.mean.size()) {
    throw ValidationError("frame map width does not match the standardizer");
  }
  Matrix out = resample_rows(map.values, length);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out.at(r, j) = (out.at(r, j) - static_cast<double>(std_.mean[j])) /
                     std::max(static_cast<double>(std_.stddev[j]), static_cast<double>(kStdGuard));
    }
  }
  return out;
}

int PseModel::param_index(const std::string& name) const {
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    if (param_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

PseModel PseModel::init(const PseConfig& config, const std::string& catalog_hash) {
  if (config.latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
  if (config.k1 < 0.0 || config.k2 < 0.0) throw ValidationError("k1, k2 must be >= 0");
  if (config.merge_mode != MergeMode::kLatentOnly && config.selected_global_ids.empty()) {
    throw ValidationError("global merge modes need selected_global_ids");
  }
  if (config.conv_channels.empty()) throw ValidationError("conv channel plan is empty");

  PseModel model;
  model.config = config;
  model.catalog_hash = catalog_hash;
  Rng rng(mix_seed(config.seed, 7));

  auto add = [&model](const std::string& name, Tensor t) {
    model.param_names.push_back(name);
    model.params.push_back(std::move(t));
  };

  const int k = config.conv_kernel;
  const int n_conv = static_cast<int>(config.conv_channels.size());
  int in_ch = kNumFrameFeatures;
  for (int i = 0; i < n_conv; ++i) {
    const int out_ch = config.conv_channels[static_cast<std::size_t>(i)];
    add("enc.conv" + std::to_string(i) + ".w",
        xavier({out_ch, in_ch, k}, in_ch * k, out_ch * k, rng));
    add("enc.conv" + std::to_string(i) + ".b", Tensor({1, out_ch}));
    in_ch = out_ch;
  }
  const int c_last = config.conv_channels.back();
  const int gru_in = config.pool_len * c_last;
  const int hid = config.hidden_size;
  for (const char* gate : {"wz", "wr", "wn"}) {
    add(std::string("enc.gru.") + gate, xavier({gru_in, hid}, gru_in, hid, rng));
  }
  for (const char* gate : {"uz", "ur", "un"}) {
    add(std::string("enc.gru.") + gate, xavier({hid, hid}, hid, hid, rng));
  }
  for (const char* gate : {"bz", "br", "bn"}) {
    add(std::string("enc.gru.") + gate, Tensor({1, hid}));
  }
  add("enc.mu.w", xavier({hid, config.latent_dim}, hid, config.latent_dim, rng));
  add("enc.mu.b", Tensor({1, config.latent_dim}));
  add("enc.lv.w", xavier({hid, config.latent_dim}, hid, config.latent_dim, rng));
  add("enc.lv.b", Tensor({1, config.latent_dim}));

  const int t0 = encoder_time_len(config);
  add("dec.fc.w", xavier({config.latent_dim, t0 * c_last}, config.latent_dim, t0 * c_last, rng));
  add("dec.fc.b", Tensor({1, t0 * c_last}));
  for (int i = 0; i < n_conv; ++i) {
    const int in_c = config.conv_channels[static_cast<std::size_t>(n_conv - 1 - i)];
    const int out_c = i == n_conv - 1
                          ? kNumFrameFeatures
                          : config.conv_channels[static_cast<std::size_t>(n_conv - 2 - i)];
    add("dec.conv" + std::to_string(i) + ".w",
        xavier({out_c, in_c, k}, in_c * k, out_c * k, rng));
    add("dec.conv" + std::to_string(i) + ".b", Tensor({1, out_c}));
  }

  add("cls.w", xavier({config.latent_total_dim(), 1}, config.latent_total_dim(), 1, rng));
  add("cls.b", Tensor({1, 1}));
  return model;
}

template <typename T>
TimelineGraph<T> build_timeline_graph(TapeT<T>& tape, const PseModel& model,
                                      const std::vector<int>& refs, const PatientTimeline& tl,
                                      bool with_merge) {
  const PseConfig& cfg = model.config;
  TimelineGraph<T> graph;
  auto ref = [&](const std::string& name) {
    const int idx = model.param_index(name);
    if (idx < 0) throw ValidationError("unknown parameter " + name);
    return refs[static_cast<std::size_t>(idx)];
  };

  if (cfg.merge_mode != MergeMode::kGlobalOnly) {
    const int pad = cfg.conv_kernel / 2;
    std::vector<int> embeddings;
    for (const VisitRecord& v : tl.visits) {
      if (v.frame_map.catalog_hash != model.catalog_hash) {
        throw ValidationError("catalog hash mismatch for patient " + tl.patient_id);
      }
      const Matrix norm = normalize_frame_map(v.frame_map, cfg.frame_length, model.frame_std);
      TensorT<T> x({cfg.frame_length, kNumFrameFeatures});
      for (int r = 0; r < cfg.frame_length; ++r) {
        for (int c = 0; c < kNumFrameFeatures; ++c) {
          x.at(r, c) = static_cast<T>(norm.at(static_cast<std::size_t>(r),
                                              static_cast<std::size_t>(c)));
        }
      }
      int h = tape.leaf(std::move(x), false);
      for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
        h = tape.conv1d(h, ref("enc.conv" + std::to_string(i) + ".w"),
                        ref("enc.conv" + std::to_string(i) + ".b"), cfg.conv_stride, pad);
        h = tape.tanh_(h);
      }
      h = tape.adaptive_mean_pool_time(h, cfg.pool_len);
      h = tape.reshape(h, 1, cfg.pool_len * cfg.conv_channels.back());
      embeddings.push_back(h);
    }

    int state = tape.leaf(TensorT<T>({1, cfg.hidden_size}), false);
    for (int e : embeddings) {
      state = tape.gru_cell_step(e, state, ref("enc.gru.wz"), ref("enc.gru.wr"),
                                 ref("enc.gru.wn"), ref("enc.gru.uz"), ref("enc.gru.ur"),
                                 ref("enc.gru.un"), ref("enc.gru.bz"), ref("enc.gru.br"),
                                 ref("enc.gru.bn"));
      graph.enc_mu.push_back(
          tape.add_rowvec(tape.matmul(state, ref("enc.mu.w")), ref("enc.mu.b")));
      graph.enc_logvar.push_back(
          tape.add_rowvec(tape.matmul(state, ref("enc.lv.w")), ref("enc.lv.b")));
    }
  }

  if (!with_merge || cfg.merge_mode == MergeMode::kLatentOnly) {
    graph.mu = graph.enc_mu;
    graph.logvar = graph.enc_logvar;
    return graph;
  }

  const int g_dim = static_cast<int>(cfg.selected_global_ids.size());
  for (std::size_t vi = 0; vi < tl.visits.size(); ++vi) {
    const std::vector<float> g = standardized_globals(tl.visits[vi].global_vec, model);
    TensorT<T> gt({1, g_dim});
    for (int j = 0; j < g_dim; ++j) gt.at(0, j) = static_cast<T>(g[static_cast<std::size_t>(j)]);
    const int g_ref = tape.leaf(std::move(gt), false);
    const int zeros_ref = tape.leaf(TensorT<T>({1, g_dim}), false);  // log-var 0: sigma 1
    if (cfg.merge_mode == MergeMode::kConcatGlobal) {
      graph.mu.push_back(tape.concat(graph.enc_mu[vi], g_ref, 1));
      graph.logvar.push_back(tape.concat(graph.enc_logvar[vi], zeros_ref, 1));
    } else {  // kGlobalOnly
      graph.mu.push_back(g_ref);
      graph.logvar.push_back(zeros_ref);
    }
  }
  return graph;
}

template <typename T>
int build_decoder_graph(TapeT<T>& tape, const PseModel& model, const std::vector<int>& refs,
                        int z_ref) {
  const PseConfig& cfg = model.config;
  auto ref = [&](const std::string& name) {
    return refs[static_cast<std::size_t>(model.param_index(name))];
  };
  const int n_conv = static_cast<int>(cfg.conv_channels.size());
  const int c_last = cfg.conv_channels.back();
  const int t0 = encoder_time_len(cfg);

  int h = tape.add_rowvec(tape.matmul(z_ref, ref("dec.fc.w")), ref("dec.fc.b"));
  h = tape.reshape(h, t0, c_last);
  const int pad = cfg.conv_kernel / 2;
  for (int i = 0; i < n_conv; ++i) {
    h = tape.upsample_time_nearest(h, cfg.conv_stride);
    h = tape.conv1d(h, ref("dec.conv" + std::to_string(i) + ".w"),
                    ref("dec.conv" + std::to_string(i) + ".b"), 1, pad);
    if (i != n_conv - 1) h = tape.tanh_(h);
  }
  if (tape.value(h).shape[0] > cfg.frame_length) {
    h = tape.slice(h, 0, 0, cfg.frame_length);
  }
  return h;
}

template <typename T>
int build_classifier_graph(TapeT<T>& tape, const PseModel& model, const std::vector<int>& refs,
                           int x_ref) {
  auto ref = [&](const std::string& name) {
    return refs[static_cast<std::size_t>(model.param_index(name))];
  };
  return tape.sigmoid(tape.add_rowvec(tape.matmul(x_ref, ref("cls.w")), ref("cls.b")));
}

template TimelineGraph<float> build_timeline_graph(TapeT<float>&, const PseModel&,
                                                   const std::vector<int>&,
                                                   const PatientTimeline&, bool);
template TimelineGraph<double> build_timeline_graph(TapeT<double>&, const PseModel&,
                                                    const std::vector<int>&,
                                                    const PatientTimeline&, bool);
template int build_decoder_graph(TapeT<float>&, const PseModel&, const std::vector<int>&, int);
template int build_decoder_graph(TapeT<double>&, const PseModel&, const std::vector<int>&, int);
template int build_classifier_graph(TapeT<float>&, const PseModel&, const std::vector<int>&, int);
template int build_classifier_graph(TapeT<double>&, const PseModel&, const std::vector<int>&, int);

PairBatch build_pair_batch(const std::vector<std::vector<LatentState>>& latents_per_patient,
                           int i, int j, Rng& rng) {
  if (i >= j || i < 0) throw ValidationError("build_pair_batch: need 0 <= i < j");
  PairBatch batch;
  for (const auto& latents : latents_per_patient) {
    if (j >= static_cast<int>(latents.size())) {
      throw ValidationError("build_pair_batch: missing visit index " + std::to_string(j));
    }
    const std::vector<double>& z_i = latents[static_cast<std::size_t>(i)].mu;
    const std::vector<double>& z_j = latents[static_cast<std::size_t>(j)].mu;
    const int m = rng.bernoulli(0.5) ? 1 : 0;
    const std::vector<double>& a = m == 0 ? z_i : z_j;
    const std::vector<double>& b = m == 0 ? z_j : z_i;
    batch.reference.push_back(a);
    batch.target.push_back(b);
    batch.allocation.push_back(m);
    std::vector<double> x(a.size()), xs(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      x[k] = b[k] - a[k];
      xs[k] = a[k] - b[k];
    }
    batch.x_train.push_back(std::move(x));
    batch.x_swap.push_back(std::move(xs));
    batch.y_train.push_back(m);
    batch.y_swap.push_back(1 - m);
  }
  return batch;
}

namespace {

std::vector<bool> trainable_mask(const PseModel& model, bool enc, bool dec, bool cls) {
  std::vector<bool> mask(model.param_names.size(), false);
  for (std::size_t i = 0; i < model.param_names.size(); ++i) {
    const std::string& n = model.param_names[i];
    if (enc && n.rfind("enc.", 0) == 0) mask[i] = true;
    if (dec && n.rfind("dec.", 0) == 0) mask[i] = true;
    if (cls && n.rfind("cls.", 0) == 0) mask[i] = true;
    if (model.config.bias_mode == BiasMode::kZero && n == "cls.b") mask[i] = false;
  }
  return mask;
}

std::vector<int> make_leaves(Tape& tape, const PseModel& model, const std::vector<bool>& mask) {
  std::vector<int> refs;
  refs.reserve(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    refs.push_back(tape.leaf(model.params[i], mask[i]));
  }
  return refs;
}

void apply_grads(Tape& tape, const std::vector<int>& refs, PseModel& model,
                 AdamState& adam) {
  std::vector<Tensor> grads(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (tape.has_grad(refs[i])) grads[i] = tape.grad(refs[i]);
  }
  adam_step(model.params, grads, adam);
}

std::vector<PatientTimeline> sorted_copy(const std::vector<PatientTimeline>& in) {
  std::vector<PatientTimeline> out = in;
  for (PatientTimeline& tl : out) sort_and_validate_timeline(tl);
  return out;
}

}  // namespace

TrainCurve pretrain_reconstruction(const std::vector<PatientTimeline>& train, PseModel& model) {
  if (train.empty()) throw ValidationError("pretraining needs at least one timeline");
  if (model.config.merge_mode == MergeMode::kGlobalOnly) {
    throw ValidationError("global_only mode has no encoder to pretrain");
  }
  const PseConfig& cfg = model.config;
  std::vector<PatientTimeline> data = sorted_copy(train);
  if (!model.frame_std.fitted) {
    std::vector<const FrameFeatureMap*> maps;
    for (const auto& tl : data) {
      for (const auto& v : tl.visits) maps.push_back(&v.frame_map);
    }
    model.frame_std = fit_frame_standardizer(maps, cfg.frame_length);
  }

  const std::vector<bool> mask = trainable_mask(model, true, true, false);
  AdamState adam;
  adam.config.lr = cfg.lr;
  adam.config.weight_decay = cfg.weight_decay;
  adam.init(model.params);

  TrainCurve curve;
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, 0xA000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      Tape tape;
      const std::vector<int> refs = make_leaves(tape, model, mask);
      int total = -1;
      int visit_count = 0;
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t bi = start; bi < end; ++bi) {
        const PatientTimeline& tl = data[order[bi]];
        const TimelineGraph<float> graph =
            build_timeline_graph(tape, model, refs, tl, /*with_merge=*/false);
        for (std::size_t vi = 0; vi < tl.visits.size(); ++vi) {
          // reparameterized sample: z = mu + exp(lv/2) * eps
          Tensor eps({1, cfg.latent_dim});
          for (float& e : eps.data) e = static_cast<float>(rng.normal());
          const int eps_ref = tape.leaf(std::move(eps), false);
          const int sig = tape.exp_(tape.scale(graph.enc_logvar[vi], 0.5));
          const int z = tape.add(graph.enc_mu[vi], tape.mul(sig, eps_ref));
          const int recon = build_decoder_graph(tape, model, refs, z);
          // target: the normalized map this visit was encoded from
          const Matrix norm =
              normalize_frame_map(tl.visits[vi].frame_map, cfg.frame_length, model.frame_std);
          TensorT<float> target({cfg.frame_length, kNumFrameFeatures});
          for (int r = 0; r < cfg.frame_length; ++r) {
            for (int c = 0; c < kNumFrameFeatures; ++c) {
              target.at(r, c) = static_cast<float>(norm.at(static_cast<std::size_t>(r),
                                                           static_cast<std::size_t>(c)));
            }
          }
          const int target_ref = tape.leaf(std::move(target), false);
          const int loss_v =
              tape.add(tape.scale(tape.mse_loss(recon, target_ref), cfg.k1),
                       tape.scale(tape.gaussian_kl(graph.enc_mu[vi], graph.enc_logvar[vi]),
                                  cfg.k2));
          total = total < 0 ? loss_v : tape.add(total, loss_v);
          ++visit_count;
        }
      }
      const int loss = tape.scale(total, 1.0 / static_cast<double>(visit_count));
      const double loss_value = tape.value(loss).data[0];
      if (!std::isfinite(loss_value)) {
        throw ComputeError("pretraining diverged at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      apply_grads(tape, refs, model, adam);
      epoch_loss += loss_value;
      ++n_batches;
    }
    curve.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
  }
  return curve;
}

namespace {

// all (i, j) visit pairs with i < j
std::vector<std::pair<int, int>> visit_pairs(const PatientTimeline& tl) {
  std::vector<std::pair<int, int>> pairs;
  const int t = static_cast<int>(tl.visits.size());
  for (int i = 0; i < t; ++i) {
    for (int j = i + 1; j < t; ++j) pairs.push_back({i, j});
  }
  return pairs;
}

}  // namespace

ClassifierTrainResult train_pairwise_classifier(const std::vector<PatientTimeline>& train,
                                                PseModel& model) {
  const PseConfig& cfg = model.config;
  std::vector<PatientTimeline> data;
  for (const PatientTimeline& tl : train) {
    if (tl.visits.size() >= 2) data.push_back(tl);
  }
  if (data.empty()) throw ValidationError("pairwise training needs patients with >= 2 visits");
  for (PatientTimeline& tl : data) sort_and_validate_timeline(tl);

  if (cfg.merge_mode != MergeMode::kGlobalOnly && !model.frame_std.fitted) {
    std::vector<const FrameFeatureMap*> maps;
    for (const auto& tl : data) {
      for (const auto& v : tl.visits) maps.push_back(&v.frame_map);
    }
    model.frame_std = fit_frame_standardizer(maps, cfg.frame_length);
  }
  if (cfg.merge_mode != MergeMode::kLatentOnly && !model.global_std.fitted) {
    std::vector<const GlobalFeatureVector*> vecs;
    for (const auto& tl : data) {
      for (const auto& v : tl.visits) vecs.push_back(&v.global_vec);
    }
    model.global_std = fit_global_standardizer(vecs, cfg.selected_global_ids);
  }

  const bool train_encoder = cfg.merge_mode != MergeMode::kGlobalOnly;
  const std::vector<bool> mask = trainable_mask(model, train_encoder, false, true);
  AdamState adam;
  adam.config.lr = cfg.lr;
  adam.config.weight_decay = cfg.weight_decay;
  adam.init(model.params);

  ClassifierTrainResult result;
  for (int epoch = 0; epoch < cfg.train_epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, 0xC000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }

    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      Tape tape;
      const std::vector<int> refs = make_leaves(tape, model, mask);
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));

      int yh_rows = -1, yh_swap_rows = -1;
      std::vector<float> labels;
      int kl_total = -1;
      int kl_count = 0;
      for (std::size_t bi = start; bi < end; ++bi) {
        const PatientTimeline& tl = data[order[bi]];
        const TimelineGraph<float> graph =
            build_timeline_graph(tape, model, refs, tl, /*with_merge=*/true);
        const auto pairs = visit_pairs(tl);
        const auto [i, j] = pairs[rng.uniform_index(pairs.size())];
        const int m = rng.bernoulli(0.5) ? 1 : 0;

        auto latent_at = [&](int v) {
          int z = graph.mu[static_cast<std::size_t>(v)];
          if (cfg.sample_in_classifier && cfg.merge_mode != MergeMode::kGlobalOnly) {
            // sample only the encoder dims; merged global dims stay deterministic
            const int d = cfg.latent_dim;
            Tensor eps({1, d});
            for (float& e : eps.data) e = static_cast<float>(rng.normal());
            const int eps_ref = tape.leaf(std::move(eps), false);
            const int sig =
                tape.exp_(tape.scale(graph.enc_logvar[static_cast<std::size_t>(v)], 0.5));
            const int zs = tape.add(graph.enc_mu[static_cast<std::size_t>(v)],
                                    tape.mul(sig, eps_ref));
            if (cfg.merge_mode == MergeMode::kConcatGlobal) {
              const int g_dim = static_cast<int>(cfg.selected_global_ids.size());
              const int g_part = tape.slice(z, 1, cfg.latent_dim, g_dim);
              z = tape.concat(zs, g_part, 1);
            } else {
              z = zs;
            }
          }
          return z;
        };
        const int z_i = latent_at(i);
        const int z_j = latent_at(j);
        const int a_ref = m == 0 ? z_i : z_j;
        const int b_ref = m == 0 ? z_j : z_i;
        const int x = tape.add(b_ref, tape.scale(a_ref, -1.0));
        const int yh = build_classifier_graph(tape, model, refs, x);
        const int yh_swap = build_classifier_graph(tape, model, refs, tape.scale(x, -1.0));
        yh_rows = yh_rows < 0 ? yh : tape.concat(yh_rows, yh, 0);
        yh_swap_rows = yh_swap_rows < 0 ? yh_swap : tape.concat(yh_swap_rows, yh_swap, 0);
        labels.push_back(static_cast<float>(m));

        if (cfg.classifier_kl > 0.0 && train_encoder) {
          for (std::size_t vi = 0; vi < tl.visits.size(); ++vi) {
            const int kl = tape.gaussian_kl(graph.enc_mu[vi], graph.enc_logvar[vi]);
            kl_total = kl_total < 0 ? kl : tape.add(kl_total, kl);
            ++kl_count;
          }
        }
      }

      const int n_rows = static_cast<int>(labels.size());
      Tensor y({n_rows, 1}), y_inv({n_rows, 1});
      for (int r = 0; r < n_rows; ++r) {
        y.at(r, 0) = labels[static_cast<std::size_t>(r)];
        y_inv.at(r, 0) = 1.0f - labels[static_cast<std::size_t>(r)];
      }
      int loss = tape.add(tape.bce_loss(yh_rows, tape.leaf(std::move(y), false)),
                          tape.bce_loss(yh_swap_rows, tape.leaf(std::move(y_inv), false)));
      if (kl_total >= 0) {
        loss = tape.add(loss, tape.scale(kl_total, cfg.classifier_kl /
                                                       static_cast<double>(kl_count)));
      }
      const double loss_value = tape.value(loss).data[0];
      if (!std::isfinite(loss_value)) {
        throw ComputeError("classifier training diverged at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      apply_grads(tape, refs, model, adam);
      epoch_loss += loss_value;
      ++n_batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
  }

  // training accuracy over all pairs, both presentation orders
  std::size_t correct = 0, total = 0;
  for (const PatientTimeline& tl : data) {
    for (const auto& [i, j] : visit_pairs(tl)) {
      const double forward = compare_visits(tl, i, j, model);
      // forward order label 0 (training data improves over time)
      if (forward < 0.5) ++correct;
      const double backward = compare_visits(tl, j, i, model);
      if (backward >= 0.5) ++correct;
      total += 2;
    }
  }
  result.train_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return result;
}

std::vector<LatentState> encode_timeline(const PatientTimeline& tl, const PseModel& model) {
  PatientTimeline sorted = tl;
  sort_and_validate_timeline(sorted);
  Tape tape;
  std::vector<int> refs;
  refs.reserve(model.params.size());
  for (const Tensor& p : model.params) refs.push_back(tape.leaf(p, false));
  const TimelineGraph<float> graph = build_timeline_graph(tape, model, refs, sorted, true);

  std::vector<LatentState> out;
  for (std::size_t vi = 0; vi < sorted.visits.size(); ++vi) {
    LatentState ls;
    ls.visit_index = static_cast<int>(vi);
    const Tensor& mu = tape.value(graph.mu[vi]);
    const Tensor& lv = tape.value(graph.logvar[vi]);
    for (int k = 0; k < mu.shape[1]; ++k) {
      ls.mu.push_back(static_cast<double>(mu.at(0, k)));
      ls.sigma.push_back(std::exp(0.5 * static_cast<double>(lv.at(0, k))));
    }
    out.push_back(std::move(ls));
  }
  return out;
}

double compare_visits(const PatientTimeline& tl, int i, int j, const PseModel& model) {
  const int t = static_cast<int>(tl.visits.size());
  if (i < 0 || j < 0 || i >= t || j >= t || i == j) {
    throw ValidationError("compare_visits: indices out of range");
  }
  const std::vector<LatentState> latents = encode_timeline(tl, model);
  const Tensor& w = model.params[static_cast<std::size_t>(model.param_index("cls.w"))];
  const Tensor& b = model.params[static_cast<std::size_t>(model.param_index("cls.b"))];
  const std::vector<double>& z_i = latents[static_cast<std::size_t>(i)].mu;
  const std::vector<double>& z_j = latents[static_cast<std::size_t>(j)].mu;
  double logit = model.config.bias_mode == BiasMode::kZero ? 0.0 : static_cast<double>(b.data[0]);
  for (std::size_t k = 0; k < z_i.size(); ++k) {
    logit += static_cast<double>(w.data[k]) * (z_j[k] - z_i[k]);
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

// --- checkpointing -----------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t take_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ValidationError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

nlohmann::json config_to_json(const PseModel& model) {
  const PseConfig& c = model.config;
  nlohmann::json j;
  j["latent_dim"] = c.latent_dim;
  j["conv_channels"] = c.conv_channels;
  j["conv_kernel"] = c.conv_kernel;
  j["conv_stride"] = c.conv_stride;
  j["pool_len"] = c.pool_len;
  j["hidden_size"] = c.hidden_size;
  j["k1"] = c.k1;
  j["k2"] = c.k2;
  j["bias_mode"] = c.bias_mode == BiasMode::kZero ? "zero" : "learned";
  j["lr"] = c.lr;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["train_epochs"] = c.train_epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["frame_length"] = c.frame_length;
  j["merge_mode"] = c.merge_mode == MergeMode::kLatentOnly
                        ? "latent_only"
                        : (c.merge_mode == MergeMode::kConcatGlobal ? "concat_global"
                                                                    : "global_only");
  j["classifier_kl"] = c.classifier_kl;
  j["sample_in_classifier"] = c.sample_in_classifier;
  j["selected_global_ids"] = c.selected_global_ids;
  j["catalog_hash"] = model.catalog_hash;
  return j;
}

PseConfig config_from_json(const nlohmann::json& j) {
  PseConfig c;
  c.latent_dim = j.at("latent_dim").get<int>();
  c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.conv_stride = j.at("conv_stride").get<int>();
  c.pool_len = j.at("pool_len").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.k1 = j.at("k1").get<double>();
  c.k2 = j.at("k2").get<double>();
  c.bias_mode = j.at("bias_mode").get<std::string>() == "zero" ? BiasMode::kZero
                                                               : BiasMode::kLearned;
  c.lr = j.at("lr").get<double>();
  c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  c.train_epochs = j.at("train_epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.frame_length = j.at("frame_length").get<int>();
  const std::string merge = j.at("merge_mode").get<std::string>();
  c.merge_mode = merge == "latent_only"
                     ? MergeMode::kLatentOnly
                     : (merge == "concat_global" ? MergeMode::kConcatGlobal
                                                 : MergeMode::kGlobalOnly);
  c.classifier_kl = j.at("classifier_kl").get<double>();
  c.sample_in_classifier = j.at("sample_in_classifier").get<bool>();
  c.selected_global_ids = j.at("selected_global_ids").get<std::vector<int>>();
  return c;
}

void append_blob(std::string& out, const std::string& name, const std::vector<int>& shape,
                 const float* data, std::size_t count) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  // float32, little-endian host assumed
  const char* raw = reinterpret_cast<const char*>(data);
  out.append(raw, raw + count * sizeof(float));
}

}  // namespace

void save_checkpoint(const PseModel& model, const std::string& path) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string cfg = config_to_json(model).dump();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;

  std::uint32_t n_blobs = static_cast<std::uint32_t>(model.params.size());
  if (model.frame_std.fitted) n_blobs += 2;
  if (model.global_std.fitted) n_blobs += 2;
  put_u32(out, n_blobs);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    append_blob(out, model.param_names[i], model.params[i].shape, model.params[i].data.data(),
                model.params[i].data.size());
  }
  auto append_std = [&out](const std::string& prefix, const Standardizer& s) {
    const std::vector<int> shape = {1, static_cast<int>(s.mean.size())};
    append_blob(out, prefix + ".mean", shape, s.mean.data(), s.mean.size());
    append_blob(out, prefix + ".sd", shape, s.stddev.data(), s.stddev.size());
  };
  if (model.frame_std.fitted) append_std("std.frame", model.frame_std);
  if (model.global_std.fitted) append_std("std.global", model.global_std);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ComputeError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

PseModel load_checkpoint(const std::string& path, const std::string& expected_catalog_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint: " + path);
  std::string in{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  if (in.size() < sizeof(kMagic) + 8 || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("not a vbt checkpoint: " + path);
  }
  std::size_t pos = sizeof(kMagic);
  if (take_u32(in, pos) != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version: " + path);
  }
  const std::uint32_t cfg_len = take_u32(in, pos);
  if (pos + cfg_len > in.size()) throw ValidationError("truncated checkpoint: " + path);
  const nlohmann::json j = nlohmann::json::parse(in.substr(pos, cfg_len));
  pos += cfg_len;

  const std::string hash = j.at("catalog_hash").get<std::string>();
  if (hash != expected_catalog_hash) {
    throw ValidationError("checkpoint catalog hash " + hash + " does not match expected " +
                          expected_catalog_hash);
  }

  PseModel model = PseModel::init(config_from_json(j), hash);
  const std::uint32_t n_blobs = take_u32(in, pos);
  for (std::uint32_t bi = 0; bi < n_blobs; ++bi) {
    const std::uint32_t name_len = take_u32(in, pos);
    if (pos + name_len > in.size()) throw ValidationError("truncated checkpoint: " + path);
    const std::string name = in.substr(pos, name_len);
    pos += name_len;
    const std::uint32_t rank = take_u32(in, pos);
    std::vector<int> shape;
    long numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<int>(take_u32(in, pos)));
      numel *= shape.back();
    }
    if (pos + static_cast<std::size_t>(numel) * sizeof(float) > in.size()) {
      throw ValidationError("truncated checkpoint: " + path);
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    std::memcpy(data.data(), in.data() + pos, data.size() * sizeof(float));
    pos += data.size() * sizeof(float);

    if (name.rfind("std.", 0) == 0) {
      Standardizer& s = name.rfind("std.frame", 0) == 0 ? model.frame_std : model.global_std;
      if (name.size() >= 5 && name.substr(name.size() - 5) == ".mean") {
        s.mean = data;
      } else {
        s.stddev = data;
      }
      s.fitted = true;
    } else {
      const int idx = model.param_index(name);
      if (idx < 0) throw ValidationError("checkpoint has unknown parameter " + name);
      Tensor& p = model.params[static_cast<std::size_t>(idx)];
      if (p.shape != shape) throw ValidationError("checkpoint shape mismatch for " + name);
      p.data = std::move(data);
    }
  }
  return model;
}

}  // namespace vbt
