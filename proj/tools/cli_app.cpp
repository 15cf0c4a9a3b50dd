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

#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbt/cohort.hpp"
#include "vbt/error.hpp"
#include "vbt/manifest.hpp"
#include "vbt/metrics.hpp"
#include "vbt/pse.hpp"
#include "vbt/store.hpp"
#include "vbt/svg_plot.hpp"
#include "vbt/trajectory.hpp"
#include "vbt/wav.hpp"

namespace fs = std::filesystem;

namespace vbt::cli {
namespace {

int severity_of_state(const std::string& state) {
  if (state == "decompensated" || state == "readmitted") return 1;
  if (state == "post_treatment" || state == "stable") return 0;
  return -1;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ComputeError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ComputeError("cannot write " + path);
  f << text;
}

struct VisitMeta {
  int severity = -1;
  std::string split;
  std::string state;
};

struct Dataset {
  std::vector<PatientTimeline> timelines;       // per patient, timestamp-sorted
  std::vector<std::vector<VisitMeta>> meta;     // aligned with timelines[i].visits
  std::vector<std::string> patient_split;      // train | test | followup
};

// Loads frame maps (and global vectors when available) for every manifest row.
Dataset load_dataset(const DatasetManifest& manifest, const std::string& global_csv) {
  std::map<std::string, const GlobalFeatureVector*> globals;
  std::vector<GlobalFeatureVector> global_store;
  if (!global_csv.empty()) {
    global_store = read_global_csv(global_csv);
    for (const GlobalFeatureVector& v : global_store) globals[v.source_id] = &v;
  }

  Dataset ds;
  std::map<std::string, std::size_t> patient_row;
  for (const ManifestEntry& e : manifest.entries) {
    auto [it, inserted] = patient_row.insert({e.patient_id, ds.timelines.size()});
    if (inserted) {
      ds.timelines.push_back({e.patient_id, {}});
      ds.meta.push_back({});
      ds.patient_split.push_back("followup");
    }
    const std::size_t p = it->second;

    VisitRecord visit;
    visit.patient_id = e.patient_id;
    visit.timestamp_days = e.timestamp_days;
    visit.state_label = e.state.empty() ? std::nullopt : std::optional<std::string>(e.state);
    visit.frame_map = read_frame_csv(e.path);
    if (auto g = globals.find(visit.frame_map.source_id); g != globals.end()) {
      visit.global_vec = *g->second;
    }
    ds.timelines[p].visits.push_back(std::move(visit));
    ds.meta[p].push_back({severity_of_state(e.state), e.split, e.state});
    if (e.split == "train") ds.patient_split[p] = "train";
    if (e.split == "test" && ds.patient_split[p] != "train") ds.patient_split[p] = "test";
  }
  // manifest validation already guarantees per-patient timestamp order
  return ds;
}

// Visits of a patient restricted to one split (for training / testing).
PatientTimeline filter_split(const PatientTimeline& tl, const std::vector<VisitMeta>& meta,
                             const std::string& split) {
  PatientTimeline out;
  out.patient_id = tl.patient_id;
  for (std::size_t v = 0; v < tl.visits.size(); ++v) {
    if (meta[v].split == split) out.visits.push_back(tl.visits[v]);
  }
  return out;
}

struct LabeledPairSample {
  std::size_t patient = 0;
  int i = 0, j = 0;
  int label = 0;  // 1 = deterioration
};

// Ground-truth direction pairs derivable from state labels.
std::vector<LabeledPairSample> labeled_pairs(const PatientTimeline& tl,
                                             const std::vector<VisitMeta>& meta,
                                             std::size_t patient,
                                             const std::string& split) {
  std::vector<LabeledPairSample> out;
  std::vector<int> keep;
  for (std::size_t v = 0; v < tl.visits.size(); ++v) {
    if (meta[v].split == split) keep.push_back(static_cast<int>(v));
  }
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = a + 1; b < keep.size(); ++b) {
      const int si = meta[static_cast<std::size_t>(keep[a])].severity;
      const int sj = meta[static_cast<std::size_t>(keep[b])].severity;
      if (si >= 0 && sj >= 0 && si != sj) {
        out.push_back({patient, static_cast<int>(a), static_cast<int>(b), sj > si ? 1 : 0});
      }
    }
  }
  return out;
}

std::string recording_id_for(const std::string& patient_id, int visit_index) {
  return patient_id + "_v" + std::to_string(visit_index);
}

nlohmann::json metric_json(const MetricReport& r) {
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"sensitivity", r.sensitivity},
          {"specificity", r.specificity},
          {"macro_f1", r.macro_f1}};
}

}  // namespace

void cmd_extract(const std::string& manifest_path, const RunConfig& config,
                 const std::string& out_dir, int workers) {
  (void)config;
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  if (manifest.entries.empty()) throw ValidationError("manifest has no entries");
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/features");

  struct Slot {
    ExtractionResult result;
    int sample_rate = 0;
    std::string rec_id;
    std::string error;
    bool ok = false;
  };
  std::vector<Slot> slots(manifest.entries.size());
  std::map<std::string, int> visit_counter;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    slots[i].rec_id = recording_id_for(manifest.entries[i].patient_id,
                                       visit_counter[manifest.entries[i].patient_id]++);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      try {
        const Waveform w = load_waveform(manifest.entries[i].path);
        slots[i].sample_rate = w.sample_rate_hz;
        slots[i].result = extract_lld_map(w, FeatureCatalog::standard(), slots[i].rec_id);
        slots[i].ok = true;
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  const int n_workers = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::ostringstream log;
  std::vector<GlobalFeatureVector> global_vectors;
  DatasetManifest out_manifest = manifest;
  bool any_failed = false;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Slot& s = slots[i];
    if (!s.ok) {
      any_failed = true;
      log << manifest.entries[i].path << ": FAILED: " << s.error << "\n";
      continue;
    }
    const std::string csv_path = out_dir + "/features/" + s.rec_id + ".csv";
    write_frame_csv(csv_path, s.result.map, FeatureCatalog::standard(), s.sample_rate);
    out_manifest.entries[i].path = csv_path;
    global_vectors.push_back(build_global_vector(s.result.map));
    for (const std::string& flag : s.result.flags) {
      log << manifest.entries[i].path << ": " << flag << "\n";
    }
  }
  write_global_csv(out_dir + "/global.csv", global_vectors);
  write_group_index_json(out_dir + "/groups.json");
  write_text(out_dir + "/extract_log.txt", log.str());
  out_manifest.save(out_dir + "/manifest.csv");
  if (any_failed) throw ComputeError("one or more files failed extraction; see extract_log.txt");
}

void cmd_screen(const std::string& pre_csv, const std::string& post_csv, double alpha,
                const std::string& out_dir) {
  const GlobalFeatureSchema& schema = GlobalFeatureSchema::standard();
  const std::vector<GlobalFeatureVector> pre = read_global_csv(pre_csv, schema);
  const std::vector<GlobalFeatureVector> post = read_global_csv(post_csv, schema);
  if (pre.size() != post.size() || pre.empty()) {
    throw ValidationError("pre/post stores must align row-by-row (same patients, same order)");
  }
  ensure_dir(out_dir);

  Matrix pre_m(pre.size(), schema.size());
  Matrix post_m(post.size(), schema.size());
  for (std::size_t r = 0; r < pre.size(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      pre_m.at(r, c) = pre[r].values[c];
      post_m.at(r, c) = post[r].values[c];
    }
  }
  const FeatureSelection sel = select_hf_voice_sets(pre_m, post_m, alpha);
  write_selection_csv(out_dir + "/selection.csv", sel, schema.names(), schema.groups());
  const std::vector<GroupTally> tallies = tally_selection_by_group(sel, schema.groups());
  write_tally_csv(out_dir + "/tally.csv", tallies);

  std::vector<std::string> labels;
  BarSeries paired{"paired (A)", {}};
  BarSeries indep{"independent (B)", {}};
  for (const GroupTally& t : tallies) {
    labels.push_back(t.group);
    paired.values.push_back(static_cast<double>(t.paired_selected));
    indep.values.push_back(static_cast<double>(t.independent_selected));
  }
  write_bar_chart_svg(out_dir + "/tally.svg", "selected features per group", labels,
                      {paired, indep});
}

namespace {

PseConfig resolved_pse_config(const RunConfig& config) {
  PseConfig cfg = config.pse;
  if (cfg.merge_mode != MergeMode::kLatentOnly && config.global_csv.empty()) {
    throw ValidationError("merge modes other than latent_only need paths.global_csv");
  }
  return cfg;
}

std::vector<PatientTimeline> training_timelines(const Dataset& ds) {
  std::vector<PatientTimeline> out;
  for (std::size_t p = 0; p < ds.timelines.size(); ++p) {
    if (ds.patient_split[p] != "train") continue;
    PatientTimeline tl = filter_split(ds.timelines[p], ds.meta[p], "train");
    if (tl.visits.size() >= 2) out.push_back(std::move(tl));
  }
  return out;
}

}  // namespace

void cmd_pretrain(const std::string& manifest_path, const RunConfig& config,
                  const std::string& out_dir) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const Dataset ds = load_dataset(manifest, config.global_csv);
  const std::vector<PatientTimeline> train = training_timelines(ds);
  if (train.empty()) throw ValidationError("no trainable patients in the manifest");
  ensure_dir(out_dir);

  PseModel model = PseModel::init(resolved_pse_config(config), FeatureCatalog::standard().hash());
  const TrainCurve curve = pretrain_reconstruction(train, model);
  save_checkpoint(model, out_dir + "/pretrained.bin");

  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < curve.epoch_losses.size(); ++e) {
    csv << e << ',' << format_value(curve.epoch_losses[e]) << '\n';
  }
  write_text(out_dir + "/pretrain_loss.csv", csv.str());
  write_text(out_dir + "/config_resolved.toml", config.to_toml());
}

void cmd_train(const std::string& manifest_path, const RunConfig& config,
               const std::string& out_dir) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const Dataset ds = load_dataset(manifest, config.global_csv);
  const std::vector<PatientTimeline> train = training_timelines(ds);
  if (train.empty()) throw ValidationError("no trainable patients in the manifest");
  ensure_dir(out_dir);

  std::vector<LabeledPairSample> test_pairs;
  for (std::size_t p = 0; p < ds.timelines.size(); ++p) {
    if (ds.patient_split[p] != "test") continue;
    for (const LabeledPairSample& s :
         labeled_pairs(ds.timelines[p], ds.meta[p], p, "test")) {
      test_pairs.push_back(s);
    }
  }

  nlohmann::json per_seed = nlohmann::json::array();
  std::vector<double> train_accs, test_accs;
  std::ostringstream loss_csv;
  loss_csv << "seed,epoch,loss\n";
  for (int s = 0; s < config.eval_seeds; ++s) {
    PseConfig cfg = resolved_pse_config(config);
    cfg.seed = config.seed + static_cast<std::uint64_t>(s);
    PseModel model = PseModel::init(cfg, FeatureCatalog::standard().hash());
    if (cfg.pretrain_epochs > 0 && cfg.merge_mode != MergeMode::kGlobalOnly) {
      pretrain_reconstruction(train, model);
    }
    const ClassifierTrainResult tr = train_pairwise_classifier(train, model);
    for (std::size_t e = 0; e < tr.epoch_losses.size(); ++e) {
      loss_csv << s << ',' << e << ',' << format_value(tr.epoch_losses[e]) << '\n';
    }
    save_checkpoint(model, out_dir + "/checkpoint_seed" + std::to_string(s) + ".bin");

    // evaluate labeled test pairs in both presentation orders
    std::vector<int> preds, labels;
    for (const LabeledPairSample& pair : test_pairs) {
      PatientTimeline tl = filter_split(ds.timelines[pair.patient], ds.meta[pair.patient], "test");
      const double fwd = compare_visits(tl, pair.i, pair.j, model);
      preds.push_back(fwd >= 0.5 ? 1 : 0);
      labels.push_back(pair.label);
      const double bwd = compare_visits(tl, pair.j, pair.i, model);
      preds.push_back(bwd >= 0.5 ? 1 : 0);
      labels.push_back(1 - pair.label);
    }
    nlohmann::json row;
    row["seed"] = cfg.seed;
    row["train_accuracy"] = tr.train_accuracy;
    train_accs.push_back(tr.train_accuracy);
    if (!preds.empty()) {
      const MetricReport report = evaluate_binary(preds, labels);
      row["test"] = metric_json(report);
      test_accs.push_back(report.accuracy);
    }
    per_seed.push_back(row);
  }

  auto mean_sd = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= std::max<std::size_t>(1, xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v = xs.size() > 1 ? v / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair<double, double>(m, std::sqrt(v));
  };
  nlohmann::json summary;
  summary["per_seed"] = per_seed;
  const auto [tr_m, tr_s] = mean_sd(train_accs);
  summary["train_accuracy_mean"] = tr_m;
  summary["train_accuracy_stddev"] = tr_s;
  if (!test_accs.empty()) {
    const auto [te_m, te_s] = mean_sd(test_accs);
    summary["test_accuracy_mean"] = te_m;
    summary["test_accuracy_stddev"] = te_s;
  }
  write_text(out_dir + "/metrics.json", summary.dump(2) + "\n");
  write_text(out_dir + "/train_loss.csv", loss_csv.str());
  write_text(out_dir + "/config_resolved.toml", config.to_toml());
}

void cmd_track(const std::string& manifest_path, const std::string& checkpoint_path,
               const RunConfig& config, const std::string& out_dir, bool bradley_terry) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const Dataset ds = load_dataset(manifest, config.global_csv);
  const PseModel model = load_checkpoint(checkpoint_path, FeatureCatalog::standard().hash());
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/plots");

  std::ostringstream outcomes_csv;
  outcomes_csv << "patient,i,j,y_hat\n";
  std::vector<TrajectoryRow> rows;
  std::ostringstream bt_csv;
  bt_csv << "patient,visit,strength,converged\n";
  std::ostringstream skipped;

  for (std::size_t p = 0; p < ds.timelines.size(); ++p) {
    const PatientTimeline& tl = ds.timelines[p];
    if (tl.visits.size() < 2) {
      skipped << tl.patient_id << ": single visit, no pairs\n";
      continue;
    }
    const int t = static_cast<int>(tl.visits.size());
    std::vector<PairwiseOutcome> outcomes;
    for (int i = 0; i < t; ++i) {
      for (int j = i + 1; j < t; ++j) {
        const double y = compare_visits(tl, i, j, model);
        outcomes.push_back({tl.patient_id, i, j, y});
        outcomes_csv << tl.patient_id << ',' << i << ',' << j << ',' << format_value(y) << '\n';
      }
    }
    std::vector<double> stamps;
    for (const VisitRecord& v : tl.visits) stamps.push_back(v.timestamp_days);
    const TrajectoryEstimate est = aggregate_scores(outcomes, stamps, config.aggregation);
    for (std::size_t k = 0; k < est.visit_index.size(); ++k) {
      const int visit = est.visit_index[k];
      const int sev = ds.meta[p][static_cast<std::size_t>(visit)].severity;
      rows.push_back({tl.patient_id, visit, stamps[static_cast<std::size_t>(visit)],
                      est.scores[k], sev >= 0 ? std::to_string(sev) : ""});
    }

    LineSeries series{tl.patient_id, {}, {}};
    for (std::size_t k = 0; k < est.visit_index.size(); ++k) {
      series.x.push_back(stamps[static_cast<std::size_t>(est.visit_index[k])]);
      series.y.push_back(est.scores[k]);
    }
    write_line_chart_svg(out_dir + "/plots/" + tl.patient_id + ".svg",
                         "trajectory " + tl.patient_id, "days", "score", {series});

    if (bradley_terry && t >= 2) {
      Matrix wins(static_cast<std::size_t>(t), static_cast<std::size_t>(t), 0.0);
      for (const PairwiseOutcome& o : outcomes) {
        const std::size_t i = static_cast<std::size_t>(o.i);
        const std::size_t j = static_cast<std::size_t>(o.j);
        if (config.bt_soft_counts) {
          wins.at(j, i) += o.y_hat;        // deterioration: later visit "wins"
          wins.at(i, j) += 1.0 - o.y_hat;
        } else {
          wins.at(o.y_hat >= 0.5 ? j : i, o.y_hat >= 0.5 ? i : j) += 1.0;
        }
      }
      const RankResult rank = bradley_terry_strengths(wins);
      for (int v = 0; v < t; ++v) {
        bt_csv << tl.patient_id << ',' << v << ','
               << format_value(rank.strengths[static_cast<std::size_t>(v)]) << ','
               << (rank.converged ? 1 : 0) << '\n';
      }
    }
  }

  write_text(out_dir + "/outcomes.csv", outcomes_csv.str());
  write_trajectory_csv(out_dir + "/trajectory.csv", rows);
  if (bradley_terry) write_text(out_dir + "/bt_ranking.csv", bt_csv.str());
  write_text(out_dir + "/skipped.txt", skipped.str());
}

void cmd_eval(const std::string& predictions_csv, const std::string& labels_csv,
              const std::string& out_dir) {
  auto read_rows = [](const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::istringstream in(line);
      std::string field;
      while (std::getline(in, field, ',')) fields.push_back(field);
      rows.push_back(fields);
    }
    if (rows.size() < 2) throw ValidationError("no data rows in " + path);
    return rows;
  };

  const auto pred_rows = read_rows(predictions_csv);
  if (pred_rows[0].size() < 2 || pred_rows[0][0] != "id" || pred_rows[0][1] != "score") {
    throw ValidationError("predictions must have header id,score[,label]");
  }
  const bool inline_labels = pred_rows[0].size() >= 3 && pred_rows[0][2] == "label";

  std::vector<std::string> ids;
  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t r = 1; r < pred_rows.size(); ++r) {
    ids.push_back(pred_rows[r][0]);
    scores.push_back(std::stod(pred_rows[r][1]));
    if (inline_labels) labels.push_back(std::stoi(pred_rows[r][2]));
  }
  if (!labels_csv.empty()) {
    const auto label_rows = read_rows(labels_csv);
    if (label_rows[0].size() < 2 || label_rows[0][0] != "id" || label_rows[0][1] != "label") {
      throw ValidationError("labels must have header id,label");
    }
    if (label_rows.size() - 1 != ids.size()) {
      throw ValidationError("prediction/label row counts differ");
    }
    labels.clear();
    for (std::size_t r = 1; r < label_rows.size(); ++r) {
      if (label_rows[r][0] != ids[r - 1]) {
        throw ValidationError("prediction/label id mismatch at row " + std::to_string(r) + ": " +
                              ids[r - 1] + " vs " + label_rows[r][0]);
      }
      labels.push_back(std::stoi(label_rows[r][1]));
    }
  }
  if (labels.empty()) throw ValidationError("no labels given (inline column or --labels file)");

  ensure_dir(out_dir);
  std::vector<int> preds;
  for (double s : scores) preds.push_back(s >= 0.5 ? 1 : 0);
  const MetricReport report = evaluate_binary(preds, labels);
  const ConfusionCounts counts = confusion_counts(preds, labels);

  bool has0 = false, has1 = false;
  for (int y : labels) (y ? has1 : has0) = true;
  const bool both = has0 && has1;
  RocCurve curve;
  if (both) {
    curve = roc_auroc(scores, labels);
    write_roc_csv(out_dir + "/roc.csv", curve);
    write_roc_svg(out_dir + "/roc.svg", "ROC", curve);
  }
  write_metrics_json(out_dir + "/metrics.json", report, curve.auroc, both);
  write_confusion_svg(out_dir + "/confusion.svg", "confusion matrix", counts);
}

void cmd_simulate(const RunConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/features");
  const SyntheticCohort cohort = generate_cohort(config.cohort);
  const SubjectSplit split =
      split_subjects(cohort.timelines.size(), 0.8, config.cohort.seed);
  std::vector<std::string> split_of(cohort.timelines.size(), "train");
  for (std::size_t p : split.test) split_of[p] = "test";

  DatasetManifest manifest;
  std::vector<GlobalFeatureVector> globals;
  std::ostringstream truth;
  truth << "patient,visit,severity\n";
  for (std::size_t p = 0; p < cohort.timelines.size(); ++p) {
    const PatientTimeline& tl = cohort.timelines[p];
    for (std::size_t v = 0; v < tl.visits.size(); ++v) {
      const VisitRecord& visit = tl.visits[v];
      const std::string csv_path = out_dir + "/features/" + visit.frame_map.source_id + ".csv";
      write_frame_csv(csv_path, visit.frame_map, FeatureCatalog::standard(), 0);
      globals.push_back(visit.global_vec);
      globals.back().source_id = visit.frame_map.source_id;

      ManifestEntry e;
      e.patient_id = tl.patient_id;
      e.timestamp_days = visit.timestamp_days;
      e.state = visit.state_label.value_or("");
      e.task = "count";
      e.split = v <= 1 ? split_of[p] : "followup";
      e.path = csv_path;
      manifest.entries.push_back(std::move(e));
      truth << tl.patient_id << ',' << v << ',' << cohort.severity[p][v] << '\n';
    }
  }
  manifest.validate();
  manifest.save(out_dir + "/manifest.csv");
  write_global_csv(out_dir + "/global.csv", globals);
  write_group_index_json(out_dir + "/groups.json");
  write_text(out_dir + "/truth.csv", truth.str());

  const BayesReference bayes = bayes_reference_accuracies(config.cohort);
  nlohmann::json j;
  j["sigma_v"] = bayes.sigma_v;
  j["cross_sectional_accuracy"] = bayes.cross_sectional_accuracy;
  j["paired_accuracy"] = bayes.paired_accuracy;
  j["degenerate"] = bayes.degenerate;
  write_text(out_dir + "/bayes_reference.json", j.dump(2) + "\n");
  write_text(out_dir + "/config_resolved.toml", config.to_toml());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"vbt: longitudinal vocal-biomarker toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", manifest_path, checkpoint_path;
  std::string pre_csv, post_csv, pred_csv, labels_csv;
  int workers = 1;
  std::uint64_t seed = 0;
  bool seed_given = false, bt = false;
  double alpha = -1.0;

  app.add_option("--config", config_path, "TOML-style run configuration");
  app.add_option("--seed", seed, "override the master seed")->each([&](const std::string&) {
    seed_given = true;
  });
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "extraction worker threads");

  CLI::App* c_extract = app.add_subcommand("extract", "extract frame + global features");
  c_extract->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();

  CLI::App* c_screen = app.add_subcommand("screen", "statistical feature screening");
  c_screen->add_option("--pre", pre_csv, "global CSV, pre state (rows aligned)")->required();
  c_screen->add_option("--post", post_csv, "global CSV, post state")->required();
  c_screen->add_option("--alpha", alpha, "significance level (default from config)");

  CLI::App* c_pretrain = app.add_subcommand("pretrain", "reconstruction pretraining");
  c_pretrain->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();

  CLI::App* c_train = app.add_subcommand("train", "pairwise classifier training");
  c_train->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();

  CLI::App* c_track = app.add_subcommand("track", "trajectory reconstruction");
  c_track->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
  c_track->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
  c_track->add_flag("--bt", bt, "emit Bradley-Terry per-visit ranking");

  CLI::App* c_eval = app.add_subcommand("eval", "metric report from predictions");
  c_eval->add_option("--pred", pred_csv, "CSV with header id,score[,label]")->required();
  c_eval->add_option("--labels", labels_csv, "CSV with header id,label");

  app.add_subcommand("simulate", "generate a synthetic cohort");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig() : RunConfig::load(config_path);
    if (seed_given) {
      config.seed = seed;
      config.pse.seed = seed;
      config.cohort.seed = seed;
      config.fnn.seed = seed;
    }
    if (alpha >= 0.0) config.screening_alpha = alpha;

    if (c_extract->parsed()) cmd_extract(manifest_path, config, out_dir, workers);
    if (c_screen->parsed()) cmd_screen(pre_csv, post_csv, config.screening_alpha, out_dir);
    if (c_pretrain->parsed()) cmd_pretrain(manifest_path, config, out_dir);
    if (c_train->parsed()) cmd_train(manifest_path, config, out_dir);
    if (c_track->parsed()) cmd_track(manifest_path, checkpoint_path, config, out_dir, bt);
    if (c_eval->parsed()) cmd_eval(pred_csv, labels_csv, out_dir);
    if (app.get_subcommand("simulate")->parsed()) cmd_simulate(config, out_dir);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace vbt::cli
