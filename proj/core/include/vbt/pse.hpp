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
//
// Personalised sequential encoder: per-visit convolutional embedding,
// recurrent aggregation across visits, Gaussian latents, reconstruction
// pretraining, and a pairwise classifier trained with swap consistency.

#ifndef VBT_PSE_HPP_
#define VBT_PSE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vbt/autodiff.hpp"
#include "vbt/frame_features.hpp"
#include "vbt/global_features.hpp"
#include "vbt/rng.hpp"

namespace vbt {

struct VisitRecord {
  std::string patient_id;
  double timestamp_days = 0.0;
  FrameFeatureMap frame_map;
  GlobalFeatureVector global_vec;
  std::optional<std::string> state_label;  // decompensated | post_treatment | stable | readmitted
};

struct PatientTimeline {
  std::string patient_id;
  std::vector<VisitRecord> visits;
};

// Sorts visits by timestamp; throws on duplicate timestamps or empty input.
void sort_and_validate_timeline(PatientTimeline& tl);

struct LatentState {
  std::vector<double> mu;
  std::vector<double> sigma;  // elementwise positive
  int visit_index = 0;
};

// Draws mu + sigma * eps; `deterministic` returns mu unchanged.
std::vector<double> sample_latent(const LatentState& ls, Rng& rng, bool deterministic = false);

enum class MergeMode { kLatentOnly, kConcatGlobal, kGlobalOnly };
enum class BiasMode { kLearned, kZero };

struct PseConfig {
  int latent_dim = 32;
  std::vector<int> conv_channels = {64, 64};
  int conv_kernel = 5;
  int conv_stride = 2;
  int pool_len = 1;  // adaptive mean-pool target length
  int hidden_size = 64;
  double k1 = 1.0;    // reconstruction weight
  double k2 = 1e-3;   // KL weight
  BiasMode bias_mode = BiasMode::kLearned;
  double lr = 1e-3;
  double weight_decay = 0.0;  // L2 applied inside Adam
  int pretrain_epochs = 30;
  int train_epochs = 150;
  int batch_size = 16;
  std::uint64_t seed = 1;
  int frame_length = 512;  // normalized frame-axis length L
  MergeMode merge_mode = MergeMode::kLatentOnly;
  double classifier_kl = 0.0;          // optional KL term during classifier training
  bool sample_in_classifier = false;   // use sampled latents instead of mu
  std::vector<int> selected_global_ids;

  int latent_total_dim() const;  // post-merge classifier input dimension
};

// Per-column standardization statistics (float32 so checkpoints round-trip
// exactly).
struct Standardizer {
  std::vector<float> mean;
  std::vector<float> stddev;
  bool fitted = false;
};

Standardizer fit_frame_standardizer(const std::vector<const FrameFeatureMap*>& maps, int length);
Standardizer fit_global_standardizer(const std::vector<const GlobalFeatureVector*>& vecs,
                                     const std::vector<int>& selected_ids);

// Linear resampling of the frame axis to `length` rows followed by per-column
// standardization; throws if the standardizer is unfitted.
Matrix normalize_frame_map(const FrameFeatureMap& map, int length, const Standardizer& std);

struct PseModel {
  PseConfig config;
  std::string catalog_hash;
  std::vector<std::string> param_names;
  std::vector<Tensor> params;
  Standardizer frame_std;
  Standardizer global_std;

  int param_index(const std::string& name) const;  // -1 when absent
  static PseModel init(const PseConfig& config, const std::string& catalog_hash);
};

// --- differentiable graph builders (shared by training and gradient checks) --

template <typename T>
struct TimelineGraph {
  std::vector<int> enc_mu;      // pre-merge [1, d] per visit
  std::vector<int> enc_logvar;  // pre-merge [1, d] per visit
  std::vector<int> mu;          // post-merge [1, D] per visit
  std::vector<int> logvar;      // post-merge (merged dims carry log-var 0)
};

// `param_refs` must align with model.params; visits must be pre-sorted.
template <typename T>
TimelineGraph<T> build_timeline_graph(TapeT<T>& tape, const PseModel& model,
                                      const std::vector<int>& param_refs,
                                      const PatientTimeline& tl, bool with_merge);

// Decoder: latent [1, d] -> reconstruction [L, 72-channel] of the normalized map.
template <typename T>
int build_decoder_graph(TapeT<T>& tape, const PseModel& model,
                        const std::vector<int>& param_refs, int z_ref);

// Classifier link: sigmoid(x * w + b) for x [1, D].
template <typename T>
int build_classifier_graph(TapeT<T>& tape, const PseModel& model,
                           const std::vector<int>& param_refs, int x_ref);

// --- pairing ------------------------------------------------------------------

struct PairBatch {
  std::vector<std::vector<double>> reference;  // A
  std::vector<std::vector<double>> target;     // B
  std::vector<int> allocation;                 // M, also the labels
  std::vector<std::vector<double>> x_train;    // B - A
  std::vector<std::vector<double>> x_swap;     // A - B
  std::vector<int> y_train;                    // = M
  std::vector<int> y_swap;                     // = 1 - M
};

// Per patient: m = 0 keeps (A, B) = (z_i, z_j); m = 1 exchanges them. The swap
// half mirrors the primary half with inputs negated and labels inverted.
PairBatch build_pair_batch(const std::vector<std::vector<LatentState>>& latents_per_patient,
                           int i, int j, Rng& rng);

// --- training and inference ----------------------------------------------------

struct TrainCurve {
  std::vector<double> epoch_losses;
};

// Minimizes k1 * MSE + k2 * KL over encoder and decoder. Throws ComputeError
// on divergence (non-finite loss).
TrainCurve pretrain_reconstruction(const std::vector<PatientTimeline>& train, PseModel& model);

struct ClassifierTrainResult {
  std::vector<double> epoch_losses;
  double train_accuracy = 0.0;
};

// Swap-consistent pairwise training: BCE(y_hat, y) + BCE(y_hat_swap, 1 - y),
// updating encoder and classifier.
ClassifierTrainResult train_pairwise_classifier(const std::vector<PatientTimeline>& train,
                                                PseModel& model);

// Deterministic per-visit latents (mu path) in timestamp order, post-merge.
std::vector<LatentState> encode_timeline(const PatientTimeline& tl, const PseModel& model);

// sigmoid(w . (z_j - z_i) + b) computed in double; >= 0.5 reads deterioration.
double compare_visits(const PatientTimeline& tl, int i, int j, const PseModel& model);

// --- checkpointing ---------------------------------------------------------------

// Versioned binary container: magic, config echo, catalog hash, named float32
// little-endian parameter blobs. Loading refuses a mismatched catalog hash.
void save_checkpoint(const PseModel& model, const std::string& path);
PseModel load_checkpoint(const std::string& path, const std::string& expected_catalog_hash);

}  // namespace vbt

#endif  // VBT_PSE_HPP_
