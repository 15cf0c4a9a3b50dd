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

#include "vbt/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vbt/error.hpp"

namespace vbt {
namespace {

struct TomlValue {
  enum class Kind { kNumber, kBool, kString, kArray } kind = Kind::kNumber;
  double num = 0.0;
  bool flag = false;
  std::string str;
  std::vector<double> array;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_value(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) throw ValidationError(where + ": empty value");
  TomlValue out;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ValidationError(where + ": unterminated string");
    out.kind = TomlValue::Kind::kString;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = TomlValue::Kind::kBool;
    out.flag = v == "true";
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw ValidationError(where + ": unterminated array");
    out.kind = TomlValue::Kind::kArray;
    std::istringstream in(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      try {
        out.array.push_back(std::stod(t));
      } catch (const std::exception&) {
        throw ValidationError(where + ": bad array element '" + t + "'");
      }
    }
    return out;
  }
  try {
    std::size_t used = 0;
    out.num = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
  } catch (const std::exception&) {
    throw ValidationError(where + ": cannot parse value '" + v + "'");
  }
  return out;
}

class Applier {
 public:
  Applier(std::vector<std::pair<std::string, TomlValue>> kv, const std::string& origin)
      : kv_(std::move(kv)), origin_(origin) {}

  const TomlValue* find(const std::string& key) {
    for (std::size_t i = 0; i < kv_.size(); ++i) {
      if (kv_[i].first == key) {
        used_[i] = true;
        return &kv_[i].second;
      }
    }
    return nullptr;
  }

  void number(const std::string& key, double* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kNumber, key);
      *dst = v->num;
    }
  }
  void integer(const std::string& key, int* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kNumber, key);
      if (v->num != std::floor(v->num)) throw ValidationError(origin_ + ": " + key + " must be an integer");
      *dst = static_cast<int>(v->num);
    }
  }
  void uint64(const std::string& key, std::uint64_t* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kNumber, key);
      if (v->num < 0 || v->num != std::floor(v->num)) {
        throw ValidationError(origin_ + ": " + key + " must be a non-negative integer");
      }
      *dst = static_cast<std::uint64_t>(v->num);
    }
  }
  void boolean(const std::string& key, bool* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kBool, key);
      *dst = v->flag;
    }
  }
  void string(const std::string& key, std::string* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kString, key);
      *dst = v->str;
    }
  }
  void int_array(const std::string& key, std::vector<int>* dst) {
    if (const TomlValue* v = find(key)) {
      require(v, TomlValue::Kind::kArray, key);
      dst->clear();
      for (double d : v->array) {
        if (d != std::floor(d)) throw ValidationError(origin_ + ": " + key + " must hold integers");
        dst->push_back(static_cast<int>(d));
      }
    }
  }

  void finish() const {
    for (std::size_t i = 0; i < kv_.size(); ++i) {
      if (!used_.count(i) || !used_.at(i)) {
        throw ValidationError(origin_ + ": unknown key '" + kv_[i].first + "'");
      }
    }
  }

 private:
  void require(const TomlValue* v, TomlValue::Kind kind, const std::string& key) const {
    if (v->kind != kind) throw ValidationError(origin_ + ": wrong type for key '" + key + "'");
  }
  std::vector<std::pair<std::string, TomlValue>> kv_;
  std::map<std::size_t, bool> used_;
  std::string origin_;
};

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, TomlValue>> kv;
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(strip_comment(line));
    if (stripped.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (stripped.front() == '[') {
      if (stripped.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) throw ValidationError(where + ": empty key");
    kv.push_back({section.empty() ? key : section + "." + key,
                  parse_value(stripped.substr(eq + 1), where)});
  }

  RunConfig cfg;
  Applier a(std::move(kv), origin);
  a.uint64("run.seed", &cfg.seed);
  a.integer("run.workers", &cfg.workers);
  a.integer("run.eval_seeds", &cfg.eval_seeds);
  a.number("screening.alpha", &cfg.screening_alpha);
  a.string("paths.global_csv", &cfg.global_csv);

  a.integer("pse.latent_dim", &cfg.pse.latent_dim);
  a.int_array("pse.conv_channels", &cfg.pse.conv_channels);
  a.integer("pse.conv_kernel", &cfg.pse.conv_kernel);
  a.integer("pse.conv_stride", &cfg.pse.conv_stride);
  a.integer("pse.pool_len", &cfg.pse.pool_len);
  a.integer("pse.hidden_size", &cfg.pse.hidden_size);
  a.number("pse.k1", &cfg.pse.k1);
  a.number("pse.k2", &cfg.pse.k2);
  std::string bias_mode = cfg.pse.bias_mode == BiasMode::kZero ? "zero" : "learned";
  a.string("pse.bias_mode", &bias_mode);
  if (bias_mode == "zero") {
    cfg.pse.bias_mode = BiasMode::kZero;
  } else if (bias_mode == "learned") {
    cfg.pse.bias_mode = BiasMode::kLearned;
  } else {
    throw ValidationError(origin + ": pse.bias_mode must be 'zero' or 'learned'");
  }
  a.number("pse.lr", &cfg.pse.lr);
  a.number("pse.weight_decay", &cfg.pse.weight_decay);
  a.integer("pse.pretrain_epochs", &cfg.pse.pretrain_epochs);
  a.integer("pse.train_epochs", &cfg.pse.train_epochs);
  a.integer("pse.batch_size", &cfg.pse.batch_size);
  a.integer("pse.frame_length", &cfg.pse.frame_length);
  std::string merge = cfg.pse.merge_mode == MergeMode::kLatentOnly
                          ? "latent_only"
                          : (cfg.pse.merge_mode == MergeMode::kConcatGlobal ? "concat_global"
                                                                            : "global_only");
  a.string("pse.merge_mode", &merge);
  if (merge == "latent_only") {
    cfg.pse.merge_mode = MergeMode::kLatentOnly;
  } else if (merge == "concat_global") {
    cfg.pse.merge_mode = MergeMode::kConcatGlobal;
  } else if (merge == "global_only") {
    cfg.pse.merge_mode = MergeMode::kGlobalOnly;
  } else {
    throw ValidationError(origin + ": pse.merge_mode must be latent_only|concat_global|global_only");
  }
  a.number("pse.classifier_kl", &cfg.pse.classifier_kl);
  a.boolean("pse.sample_in_classifier", &cfg.pse.sample_in_classifier);
  a.int_array("pse.selected_global_ids", &cfg.pse.selected_global_ids);

  a.integer("cohort.n_patients", &cfg.cohort.n_patients);
  a.integer("cohort.visits_per_patient", &cfg.cohort.visits_per_patient);
  a.integer("cohort.frames_per_visit", &cfg.cohort.frames_per_visit);
  a.integer("cohort.global_feature_dim", &cfg.cohort.global_feature_dim);
  a.number("cohort.sigma_between", &cfg.cohort.sigma_between);
  a.number("cohort.sigma_within", &cfg.cohort.sigma_within);
  double sigma_v = 0.0;
  a.number("cohort.sigma_v", &sigma_v);
  a.number("cohort.ar_coefficient", &cfg.cohort.ar_coefficient);
  a.number("cohort.delta", &cfg.cohort.delta);
  a.number("cohort.affected_fraction", &cfg.cohort.affected_fraction);
  a.number("cohort.rehosp_probability", &cfg.cohort.rehosp_probability);

  a.integer("fnn.hidden", &cfg.fnn.hidden);
  a.number("fnn.lr", &cfg.fnn.lr);
  a.integer("fnn.epochs", &cfg.fnn.epochs);
  a.integer("fnn.batch_size", &cfg.fnn.batch_size);
  a.number("fnn.weight_decay", &cfg.fnn.weight_decay);
  a.number("fnn.train_fraction", &cfg.fnn.train_fraction);
  a.boolean("fnn.shuffle_labels", &cfg.fnn.shuffle_labels);

  a.number("trajectory.theta", &cfg.aggregation.theta);
  a.number("trajectory.phi0", &cfg.aggregation.phi0);
  a.number("trajectory.phi1", &cfg.aggregation.phi1);
  a.boolean("trajectory.soft_counts", &cfg.bt_soft_counts);
  a.finish();

  // one master seed drives every component unless a later override changes it
  cfg.pse.seed = cfg.seed;
  cfg.cohort.seed = cfg.seed;
  cfg.fnn.seed = cfg.seed;
  if (sigma_v > 0.0) {
    cfg.cohort.sigma_within = sigma_within_for_visit_noise(sigma_v, cfg.cohort.frames_per_visit,
                                                           cfg.cohort.ar_coefficient);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), path);
}

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_int_array(const std::vector<int>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(xs[i]);
  }
  return out + "]";
}

}  // namespace

std::string RunConfig::to_toml() const {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << seed << "\n";
  out << "workers = " << workers << "\n";
  out << "eval_seeds = " << eval_seeds << "\n\n";

  out << "[screening]\n";
  out << "alpha = " << fmt_num(screening_alpha) << "\n\n";

  out << "[paths]\n";
  out << "global_csv = \"" << global_csv << "\"\n\n";

  out << "[pse]\n";
  out << "latent_dim = " << pse.latent_dim << "\n";
  out << "conv_channels = " << fmt_int_array(pse.conv_channels) << "\n";
  out << "conv_kernel = " << pse.conv_kernel << "\n";
  out << "conv_stride = " << pse.conv_stride << "\n";
  out << "pool_len = " << pse.pool_len << "\n";
  out << "hidden_size = " << pse.hidden_size << "\n";
  out << "k1 = " << fmt_num(pse.k1) << "\n";
  out << "k2 = " << fmt_num(pse.k2) << "\n";
  out << "bias_mode = \"" << (pse.bias_mode == BiasMode::kZero ? "zero" : "learned") << "\"\n";
  out << "lr = " << fmt_num(pse.lr) << "\n";
  out << "weight_decay = " << fmt_num(pse.weight_decay) << "\n";
  out << "pretrain_epochs = " << pse.pretrain_epochs << "\n";
  out << "train_epochs = " << pse.train_epochs << "\n";
  out << "batch_size = " << pse.batch_size << "\n";
  out << "frame_length = " << pse.frame_length << "\n";
  out << "merge_mode = \""
      << (pse.merge_mode == MergeMode::kLatentOnly
              ? "latent_only"
              : (pse.merge_mode == MergeMode::kConcatGlobal ? "concat_global" : "global_only"))
      << "\"\n";
  out << "classifier_kl = " << fmt_num(pse.classifier_kl) << "\n";
  out << "sample_in_classifier = " << (pse.sample_in_classifier ? "true" : "false") << "\n";
  out << "selected_global_ids = " << fmt_int_array(pse.selected_global_ids) << "\n\n";

  out << "[cohort]\n";
  out << "n_patients = " << cohort.n_patients << "\n";
  out << "visits_per_patient = " << cohort.visits_per_patient << "\n";
  out << "frames_per_visit = " << cohort.frames_per_visit << "\n";
  out << "global_feature_dim = " << cohort.global_feature_dim << "\n";
  out << "sigma_between = " << fmt_num(cohort.sigma_between) << "\n";
  out << "sigma_within = " << fmt_num(cohort.sigma_within) << "\n";
  out << "ar_coefficient = " << fmt_num(cohort.ar_coefficient) << "\n";
  out << "delta = " << fmt_num(cohort.delta) << "\n";
  out << "affected_fraction = " << fmt_num(cohort.affected_fraction) << "\n";
  out << "rehosp_probability = " << fmt_num(cohort.rehosp_probability) << "\n\n";

  out << "[fnn]\n";
  out << "hidden = " << fnn.hidden << "\n";
  out << "lr = " << fmt_num(fnn.lr) << "\n";
  out << "epochs = " << fnn.epochs << "\n";
  out << "batch_size = " << fnn.batch_size << "\n";
  out << "weight_decay = " << fmt_num(fnn.weight_decay) << "\n";
  out << "train_fraction = " << fmt_num(fnn.train_fraction) << "\n";
  out << "shuffle_labels = " << (fnn.shuffle_labels ? "true" : "false") << "\n\n";

  out << "[trajectory]\n";
  out << "theta = " << fmt_num(aggregation.theta) << "\n";
  out << "phi0 = " << fmt_num(aggregation.phi0) << "\n";
  out << "phi1 = " << fmt_num(aggregation.phi1) << "\n";
  out << "soft_counts = " << (bt_soft_counts ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace vbt
