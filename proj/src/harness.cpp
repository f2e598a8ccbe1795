// Copyright (c) 2026 The vqdprobe Authors. All Rights Reserved.
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


#include "vqd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "vqd/csv.hpp"
#include "vqd/errors.hpp"
#include "vqd/parallel.hpp"

namespace vqd {

namespace fs = std::filesystem;

std::string_view to_string(TaskSelection t) {
  switch (t) {
    case TaskSelection::Regression: return "regression";
    case TaskSelection::Classification: return "classification";
    case TaskSelection::Both: return "both";
  }
  return "both";
}

std::string_view to_string(BootstrapMode m) {
  return m == BootstrapMode::Rows ? "rows" : "speakers";
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, msg);
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<Task> tasks_of(TaskSelection t) {
  switch (t) {
    case TaskSelection::Regression: return {Task::Regression};
    case TaskSelection::Classification: return {Task::Classification};
    case TaskSelection::Both: return {Task::Regression, Task::Classification};
  }
  return {};
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["manifest_path"] = cfg.manifest_path.string();
  j["embedding_paths"] = nlohmann::json::object();
  for (const auto& [backend, path] : cfg.embedding_paths) {
    j["embedding_paths"][backend] = path.string();
  }
  auto& dims = j["dimensions"] = nlohmann::json::array();
  for (Dimension d : cfg.dimensions) dims.push_back(to_string(d));
  auto& train = j["train_categories"] = nlohmann::json::array();
  for (Category c : cfg.train_categories) train.push_back(to_string(c));
  auto& eval = j["eval_categories"] = nlohmann::json::array();
  for (Category c : cfg.eval_categories) eval.push_back(to_string(c));
  j["task"] = to_string(cfg.task);
  j["seed"] = cfg.seed;
  j["n_boot"] = cfg.n_boot;
  j["output_dir"] = cfg.output_dir.string();
  j["jobs"] = cfg.jobs;
  j["bootstrap_mode"] = to_string(cfg.bootstrap_mode);
  j["use_classifier"] = cfg.use_classifier;
  j["models_dir"] = cfg.models_dir.string();
  j["backend"] = cfg.backend;
  j["external_manifest"] = cfg.external_manifest.string();
  j["external_embeddings"] = cfg.external_embeddings.string();
  j["dataset_name"] = cfg.dataset_name;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known = {
      "manifest_path", "embedding_paths", "dimensions",     "train_categories",
      "eval_categories", "task",          "seed",           "n_boot",
      "output_dir",    "jobs",            "bootstrap_mode", "use_classifier",
      "models_dir",    "backend",         "external_manifest",
      "external_embeddings", "dataset_name"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) config_error("unknown config field '" + key + "'");
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("manifest_path")) {
      cfg.manifest_path = get_field<std::string>(j, "manifest_path");
    }
    if (j.contains("embedding_paths")) {
      const auto& e = j.at("embedding_paths");
      if (!e.is_object()) config_error("embedding_paths must map backend to path");
      for (const auto& [backend, path] : e.items()) {
        if (!path.is_string()) config_error("embedding path for '" + backend + "' must be a string");
        cfg.embedding_paths[backend] = path.get<std::string>();
      }
    }
    if (j.contains("dimensions")) {
      cfg.dimensions.clear();
      for (const auto& s : get_field<std::vector<std::string>>(j, "dimensions")) {
        cfg.dimensions.push_back(parse_dimension(s));
      }
    }
    for (const char* key : {"train_categories", "eval_categories"}) {
      if (!j.contains(key)) continue;
      auto& dst = std::string_view(key) == "train_categories" ? cfg.train_categories
                                                              : cfg.eval_categories;
      dst.clear();
      for (const auto& s : get_field<std::vector<std::string>>(j, key)) {
        dst.push_back(parse_category(s));
      }
    }
    if (j.contains("task")) {
      const auto t = get_field<std::string>(j, "task");
      if (t == "regression") cfg.task = TaskSelection::Regression;
      else if (t == "classification") cfg.task = TaskSelection::Classification;
      else if (t == "both") cfg.task = TaskSelection::Both;
      else config_error("task must be regression, classification or both");
    }
    if (j.contains("seed")) cfg.seed = get_field<uint64_t>(j, "seed");
    if (j.contains("n_boot")) cfg.n_boot = get_field<size_t>(j, "n_boot");
    if (j.contains("output_dir")) cfg.output_dir = get_field<std::string>(j, "output_dir");
    if (j.contains("jobs")) cfg.jobs = get_field<size_t>(j, "jobs");
    if (j.contains("bootstrap_mode")) {
      const auto m = get_field<std::string>(j, "bootstrap_mode");
      if (m == "rows") cfg.bootstrap_mode = BootstrapMode::Rows;
      else if (m == "speakers") cfg.bootstrap_mode = BootstrapMode::Speakers;
      else config_error("bootstrap_mode must be rows or speakers");
    }
    if (j.contains("use_classifier")) cfg.use_classifier = get_field<bool>(j, "use_classifier");
    if (j.contains("models_dir")) cfg.models_dir = get_field<std::string>(j, "models_dir");
    if (j.contains("backend")) cfg.backend = get_field<std::string>(j, "backend");
    if (j.contains("external_manifest")) {
      cfg.external_manifest = get_field<std::string>(j, "external_manifest");
    }
    if (j.contains("external_embeddings")) {
      cfg.external_embeddings = get_field<std::string>(j, "external_embeddings");
    }
    if (j.contains("dataset_name")) cfg.dataset_name = get_field<std::string>(j, "dataset_name");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    config_error(e.what());
  }
  if (cfg.dimensions.empty()) config_error("dimensions must not be empty");
  if (cfg.train_categories.empty()) config_error("train_categories must not be empty");
  if (cfg.eval_categories.empty()) config_error("eval_categories must not be empty");
  if (cfg.n_boot == 0) config_error("n_boot must be positive");
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("jobs");
  const uint64_t h = stable_hash(0, j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require_inputs(const ExperimentConfig& cfg, bool embeddings, bool external,
                    bool models) {
  auto need = [](const fs::path& p, const std::string& what) {
    if (p.empty()) config_error(what + " is not set");
    if (!fs::exists(p)) config_error(what + " does not exist: " + p.string());
  };
  need(cfg.manifest_path, "manifest path");
  if (embeddings) {
    if (cfg.embedding_paths.empty()) config_error("no embedding paths given");
    for (const auto& [backend, path] : cfg.embedding_paths) {
      need(path, "embedding path for backend '" + backend + "'");
    }
  }
  if (external) {
    need(cfg.external_manifest, "external manifest");
    need(cfg.external_embeddings, "external embeddings");
  }
  if (models) need(cfg.models_dir, "models directory");
}

// ---------------------------------------------------------------------------
// Training and Table 1

namespace {

RowFilter make_filter(Split split, std::span<const Category> categories) {
  RowFilter f;
  f.splits = std::set<Split>{split};
  f.categories = std::set<Category>(categories.begin(), categories.end());
  return f;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

BootstrapOptions boot_options(const ExperimentConfig& cfg, const std::string& key,
                              const std::vector<std::string>& speakers) {
  BootstrapOptions o;
  o.n_boot = cfg.n_boot;
  o.seed = stable_hash(cfg.seed, key);
  if (cfg.bootstrap_mode == BootstrapMode::Speakers) {
    std::unordered_map<std::string, size_t> ids;
    std::vector<size_t> clusters;
    clusters.reserve(speakers.size());
    for (const auto& s : speakers) {
      clusters.push_back(ids.emplace(s, ids.size()).first->second);
    }
    o.clusters = std::move(clusters);
  }
  return o;
}

std::string cell_key(const std::string& backend, Dimension d, MetricKind k) {
  return backend + "/" + std::string(to_string(d)) + "/" + std::string(to_string(k));
}

TrainedProbe train_one(const Manifest& m, const EmbeddingTable& t, Dimension d, Task task,
                       std::span<const Category> categories, uint64_t seed) {
  const DesignMatrix train = join(m, t, d, make_filter(Split::Train, categories));
  const DesignMatrix val = join(m, t, d, make_filter(Split::Validation, categories));
  SelectionOptions opts;
  opts.seed = seed;
  opts.backend_name = t.backend_name();
  opts.dimension = d;
  auto outcome = select_lambda(train, val, task, opts);
  return {t.backend_name(), d, task, std::move(outcome.selection),
          std::move(outcome.model)};
}

}  // namespace

std::vector<TrainedProbe> train_probes(const ExperimentConfig& cfg, const Manifest& m,
                                       std::span<const EmbeddingTable> tables) {
  struct Job {
    size_t table;
    Dimension dimension;
    Task task;
  };
  std::vector<Job> jobs;
  for (size_t t = 0; t < tables.size(); ++t) {
    for (Dimension d : cfg.dimensions) {
      for (Task task : tasks_of(cfg.task)) jobs.push_back({t, d, task});
    }
  }
  std::vector<TrainedProbe> out(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](size_t i) {
    const auto& job = jobs[i];
    out[i] = train_one(m, tables[job.table], job.dimension, job.task,
                       cfg.train_categories, cfg.seed);
  });
  return out;
}

Table1Result run_table1(const ExperimentConfig& cfg, const Manifest& m,
                        std::span<const EmbeddingTable> tables) {
  Table1Result result;
  result.probes = train_probes(cfg, m, tables);

  std::unordered_map<std::string, const EmbeddingTable*> by_backend;
  for (const auto& t : tables) by_backend[t.backend_name()] = &t;

  const size_t n = result.probes.size();
  std::vector<Table1Cell> main(n);
  std::vector<std::vector<Table1Cell>> extra(n);
  // Bootstrap replicates inside a cell stay sequential; cells run in parallel.
  parallel_for(n, cfg.jobs, [&](size_t i) {
    const auto& probe = result.probes[i];
    const auto& table = *by_backend.at(probe.backend);
    const DesignMatrix test =
        join(m, table, probe.dimension, make_filter(Split::Test, cfg.eval_categories));
    const Eigen::VectorXd pred = predict(probe.model, test.X);
    main[i].backend = probe.backend;
    main[i].dimension = probe.dimension;
    if (probe.task == Task::Regression) {
      main[i].report = bootstrap_spearman(
          as_span(pred), as_span(test.y),
          boot_options(cfg, cell_key(probe.backend, probe.dimension, MetricKind::Spearman),
                       test.speakers));
      for (MetricKind kind : {MetricKind::R2, MetricKind::MAE}) {
        ResampledMetric fn = [&, kind](std::span<const size_t> rows) -> std::optional<double> {
          std::vector<double> p(rows.size()), t(rows.size());
          for (size_t k = 0; k < rows.size(); ++k) {
            p[k] = pred(static_cast<Eigen::Index>(rows[k]));
            t[k] = test.y(static_cast<Eigen::Index>(rows[k]));
          }
          if (p.size() < 2) return std::nullopt;
          const auto rm = r2_mae(p, t);
          return kind == MetricKind::R2 ? rm.r2 : std::optional<double>(rm.mae);
        };
        Table1Cell cell{probe.backend, probe.dimension, {}};
        try {
          cell.report = bootstrap_ci(
              kind, fn, static_cast<size_t>(test.rows()),
              boot_options(cfg, cell_key(probe.backend, probe.dimension, kind),
                           test.speakers));
          extra[i].push_back(cell);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateResampling) throw;
          warn(cell_key(probe.backend, probe.dimension, kind) + ": " + e.what());
        }
      }
    } else {
      const Eigen::VectorXd labels = binarize(test.y, *probe.model.binarization_threshold);
      main[i].report = bootstrap_auc(
          as_span(pred), as_span(labels),
          boot_options(cfg, cell_key(probe.backend, probe.dimension, MetricKind::AUC),
                       test.speakers));
    }
  });
  result.cells = std::move(main);
  for (auto& e : extra) {
    for (auto& c : e) result.extra_cells.push_back(std::move(c));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Table 2

Table2Result run_table2(const ExperimentConfig& cfg, const Manifest& m,
                        std::span<const EmbeddingTable> tables) {
  for (Category c : kAllCategories) {
    for (Split s : {Split::Train, Split::Validation, Split::Test}) {
      const bool present = std::any_of(m.records.begin(), m.records.end(), [&](const auto& r) {
        return r.category == c && r.split == s;
      });
      if (!present) {
        throw Error(ErrorCode::EmptyCategory,
                    std::string(to_string(c)) + " has no " + std::string(to_string(s)) +
                        " records");
      }
    }
  }

  const std::array<std::optional<Category>, kTable2TrainGroups> groups = {
      std::nullopt, Category::DigitalCommand, Category::NovelSentence,
      Category::Spontaneous};
  const size_t n_dims = cfg.dimensions.size();
  const size_t n_jobs = tables.size() * kTable2TrainGroups * n_dims;
  // spearman[job][eval category]
  std::vector<std::array<double, kNumCategories>> spearman_by_job(n_jobs);

  parallel_for(n_jobs, cfg.jobs, [&](size_t job) {
    const size_t t = job / (kTable2TrainGroups * n_dims);
    const size_t g = (job / n_dims) % kTable2TrainGroups;
    const Dimension d = cfg.dimensions[job % n_dims];
    std::vector<Category> train_cats;
    if (groups[g]) {
      train_cats = {*groups[g]};
    } else {
      train_cats.assign(kAllCategories.begin(), kAllCategories.end());
    }
    const auto probe = train_one(m, tables[t], d, Task::Regression, train_cats, cfg.seed);
    for (Category e : kAllCategories) {
      const Category eval_only[] = {e};
      const DesignMatrix test = join(m, tables[t], d, make_filter(Split::Test, eval_only));
      const Eigen::VectorXd pred = predict(probe.model, test.X);
      spearman_by_job[job][index_of(e)] = spearman(as_span(pred), as_span(test.y));
    }
  });

  Table2Result result;
  for (size_t t = 0; t < tables.size(); ++t) {
    for (size_t g = 0; g < kTable2TrainGroups; ++g) {
      for (Category e : kAllCategories) {
        Table2Cell cell;
        cell.backend = tables[t].backend_name();
        cell.train_category = groups[g];
        cell.eval_category = e;
        for (size_t k = 0; k < n_dims; ++k) {
          const size_t job = (t * kTable2TrainGroups + g) * n_dims + k;
          cell.per_dimension.push_back(spearman_by_job[job][index_of(e)]);
        }
        cell.aggregate = aggregate_mean_std(cell.per_dimension);
        result.cells.push_back(std::move(cell));
      }
    }
    // Soft check: training on everything should not lose to one category.
    for (Category e : kAllCategories) {
      const auto& all = result.cells[(t * kTable2TrainGroups) * kNumCategories + index_of(e)];
      for (size_t g = 1; g < kTable2TrainGroups; ++g) {
        const auto& single =
            result.cells[(t * kTable2TrainGroups + g) * kNumCategories + index_of(e)];
        if (single.aggregate.mean > all.aggregate.mean + 0.05) {
          warn(tables[t].backend_name() + ": training on " +
               std::string(to_string(*single.train_category)) + " beats all-data training on " +
               std::string(to_string(e)) + " (" + csv::format_double(single.aggregate.mean) +
               " vs " + csv::format_double(all.aggregate.mean) + ")");
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Zero-shot, strata, affect

namespace {

/// One model per dimension, in Dimension order.
std::array<const ProbeModel*, kNumDimensions> pick_models(std::span<const ProbeModel> models,
                                                          Task task) {
  std::array<const ProbeModel*, kNumDimensions> out{};
  for (const auto& m : models) {
    if (m.task != task) continue;
    auto& slot = out[index_of(m.dimension)];
    if (slot) {
      throw Error(ErrorCode::InvalidArgument,
                  "two " + std::string(to_string(task)) + " probes for " +
                      std::string(to_string(m.dimension)));
    }
    slot = &m;
  }
  for (Dimension d : kAllDimensions) {
    if (!out[index_of(d)]) {
      throw Error(ErrorCode::MissingModel,
                  "no " + std::string(to_string(task)) + " probe for " +
                      std::string(to_string(d)));
    }
  }
  return out;
}

Manifest with_severity(const Manifest& m, bool require_binary) {
  Manifest out;
  out.source_name = m.source_name;
  for (const auto& r : m.records) {
    if (!r.severity) continue;
    if (require_binary && *r.severity > 1) {
      throw Error(ErrorCode::NonBinarySeverity,
                  r.utterance_id + " has severity " + std::to_string(*r.severity));
    }
    out.records.push_back(r);
  }
  if (out.records.empty()) {
    throw Error(ErrorCode::EmptyJoin, m.source_name + " has no severity labels");
  }
  return out;
}

std::array<Eigen::VectorXd, kNumDimensions> predict_all(
    const std::array<const ProbeModel*, kNumDimensions>& models, const Eigen::MatrixXd& X) {
  std::array<Eigen::VectorXd, kNumDimensions> out;
  for (size_t k = 0; k < kNumDimensions; ++k) out[k] = predict(*models[k], X);
  return out;
}

}  // namespace

ZeroShotReport run_zeroshot(std::span<const ProbeModel> models, const Manifest& external,
                            const EmbeddingTable& embeddings, const ZeroShotOptions& opts) {
  const auto picked =
      pick_models(models, opts.use_classifier ? Task::Classification : Task::Regression);
  const Manifest labeled = with_severity(external, true);
  const DesignMatrix data = join_features(labeled, embeddings);
  Eigen::VectorXd labels(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    labels(i) = *labeled.records[data.record_index[i]].severity;
  }
  const auto preds = predict_all(picked, data.X);
  Eigen::VectorXd composite = Eigen::VectorXd::Zero(data.rows());
  for (const auto& p : preds) composite += p;

  ExperimentConfig boot_cfg;
  boot_cfg.seed = opts.seed;
  boot_cfg.n_boot = opts.n_boot;
  boot_cfg.bootstrap_mode = opts.bootstrap_mode;

  ZeroShotReport rep;
  rep.dataset_name = opts.dataset_name;
  rep.backend = picked[0]->backend_name;
  auto boot = [&](const Eigen::VectorXd& scores, const std::string& what) {
    auto o = boot_options(boot_cfg, opts.dataset_name + "/" + what, data.speakers);
    o.jobs = opts.jobs;
    return bootstrap_auc(as_span(scores), as_span(labels), o);
  };
  rep.sum_auc = boot(composite, "sum_all_dims");
  for (size_t k = 0; k < kNumDimensions; ++k) {
    rep.per_dimension_auc[k] = boot(preds[k], std::string(to_string(kAllDimensions[k])));
  }
  return rep;
}

std::vector<StratumSummary> severity_stratified_predictions(
    std::span<const ProbeModel> models, const Manifest& external,
    const EmbeddingTable& embeddings, bool use_classifier,
    const std::optional<std::vector<int>>& levels) {
  const auto picked =
      pick_models(models, use_classifier ? Task::Classification : Task::Regression);
  const Manifest labeled = with_severity(external, false);
  const DesignMatrix data = join_features(labeled, embeddings);
  const auto preds = predict_all(picked, data.X);

  std::map<int, std::vector<Eigen::Index>> rows_by_level;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    rows_by_level[*labeled.records[data.record_index[i]].severity].push_back(i);
  }
  std::vector<int> wanted;
  if (levels) {
    wanted = *levels;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  } else {
    for (const auto& [level, _] : rows_by_level) wanted.push_back(level);
  }
  if (rows_by_level.size() < 2) {
    warn(external.source_name + ": fewer than two severity levels present");
  }
  for (int level : wanted) {
    if (!rows_by_level.contains(level)) {
      warn(external.source_name + ": severity level " + std::to_string(level) +
           " has no samples, stratum omitted");
    }
  }

  std::vector<StratumSummary> out;
  std::vector<double> v;
  for (int level : wanted) {
    auto it = rows_by_level.find(level);
    if (it == rows_by_level.end()) continue;
    for (Dimension d : kAllDimensions) {
      v.clear();
      for (Eigen::Index i : it->second) v.push_back(preds[index_of(d)](i));
      std::sort(v.begin(), v.end());
      StratumSummary s;
      s.dimension = d;
      s.severity = level;
      s.n = v.size();
      for (double x : v) s.mean += x;
      s.mean /= static_cast<double>(v.size());
      s.q25 = quantile_sorted(v, 0.25);
      s.median = quantile_sorted(v, 0.5);
      s.q75 = quantile_sorted(v, 0.75);
      out.push_back(s);
    }
  }
  return out;
}

AffectProfile affect_profile(std::span<const ProbeModel> models, const Manifest& affect,
                             const EmbeddingTable& embeddings, bool use_classifier) {
  const auto picked =
      pick_models(models, use_classifier ? Task::Classification : Task::Regression);
  Manifest labeled;
  labeled.source_name = affect.source_name;
  size_t unlabeled = 0;
  for (const auto& r : affect.records) {
    if (r.emotion) {
      labeled.records.push_back(r);
    } else {
      ++unlabeled;
    }
  }
  if (unlabeled > 0) {
    warn(affect.source_name + ": " + std::to_string(unlabeled) +
         " record(s) without an emotion label skipped");
  }
  if (labeled.records.empty()) {
    throw Error(ErrorCode::EmptyJoin, affect.source_name + " has no emotion labels");
  }
  const DesignMatrix data = join_features(labeled, embeddings);
  const auto preds = predict_all(picked, data.X);

  AffectProfile p;
  // Running means stay exact when every prediction in a group is equal.
  std::array<std::array<double, kNumDimensions>, kNumEmotions> means{};
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const size_t e = index_of(*labeled.records[data.record_index[i]].emotion);
    const double k_new = static_cast<double>(++p.count[e]);
    for (size_t k = 0; k < kNumDimensions; ++k) {
      means[e][k] += (preds[k](i) - means[e][k]) / k_new;
    }
  }
  for (size_t e = 0; e < kNumEmotions; ++e) {
    if (p.count[e] == 0) {
      warn(affect.source_name + ": no samples for emotion " +
           std::string(to_string(kAllEmotions[e])));
      continue;
    }
    for (size_t k = 0; k < kNumDimensions; ++k) p.mean[e][k] = means[e][k];
  }
  return p;
}

double label_weighted_score(std::span<const double> class_probs,
                            std::span<const double> class_values) {
  if (class_probs.size() != class_values.size() || class_probs.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "need one value per class probability (got " +
                    std::to_string(class_probs.size()) + " and " +
                    std::to_string(class_values.size()) + ")");
  }
  double total = 0, score = 0;
  for (size_t k = 0; k < class_probs.size(); ++k) {
    if (!(class_probs[k] >= 0.0)) {
      throw Error(ErrorCode::NotNormalized, "negative class probability");
    }
    total += class_probs[k];
    score += class_probs[k] * class_values[k];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotNormalized,
                "class probabilities sum to " + csv::format_double(total));
  }
  return score;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::vector<std::string> report_fields(const std::string& backend, std::string_view dimension,
                                       const MetricReport& r) {
  return {backend,
          std::string(dimension),
          std::string(to_string(r.metric)),
          csv::format_double(r.point),
          csv::format_double(r.ci_low),
          csv::format_double(r.ci_high),
          std::to_string(r.n),
          std::to_string(r.n_boot),
          std::to_string(r.seed)};
}

const std::vector<std::string> kReportHeader = {"backend", "dimension", "metric",
                                                "point",   "ci_low",    "ci_high",
                                                "n",       "n_boot",    "seed"};

}  // namespace

void write_metric_reports_csv(std::span<const Table1Cell> cells, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, kReportHeader);
  for (const auto& c : cells) {
    csv::write_record(out, report_fields(c.backend, to_string(c.dimension), c.report));
  }
}

void write_table2_csv(const Table2Result& r, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, {"backend", "train_category", "eval_category", "mean_spearman",
                          "std_spearman", "n_dimensions"});
  for (const auto& c : r.cells) {
    csv::write_record(out, {c.backend,
                            c.train_category ? std::string(to_string(*c.train_category)) : "all",
                            std::string(to_string(c.eval_category)),
                            csv::format_double(c.aggregate.mean),
                            csv::format_double(c.aggregate.std),
                            std::to_string(c.per_dimension.size())});
  }
}

void write_zeroshot_csv(const ZeroShotReport& r, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, kReportHeader);
  csv::write_record(out, report_fields(r.backend, "sum_all_dims", r.sum_auc));
  for (size_t k = 0; k < kNumDimensions; ++k) {
    csv::write_record(out, report_fields(r.backend, to_string(kAllDimensions[k]),
                                         r.per_dimension_auc[k]));
  }
}

void write_strata_csv(std::span<const StratumSummary> strata, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, {"dimension", "severity", "n", "mean", "q25", "median", "q75"});
  for (const auto& s : strata) {
    csv::write_record(out, {std::string(to_string(s.dimension)), std::to_string(s.severity),
                            std::to_string(s.n), csv::format_double(s.mean),
                            csv::format_double(s.q25), csv::format_double(s.median),
                            csv::format_double(s.q75)});
  }
}

void write_affect_csv(const AffectProfile& p, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, {"emotion", "dimension", "mean_score", "n"});
  for (Emotion e : kAllEmotions) {
    if (p.count[index_of(e)] == 0) continue;
    for (Dimension d : kAllDimensions) {
      csv::write_record(out, {std::string(to_string(e)), std::string(to_string(d)),
                              csv::format_double(*p.mean[index_of(e)][index_of(d)]),
                              std::to_string(p.count[index_of(e)])});
    }
  }
}

void write_correlations_csv(const CorrelationMatrix& c, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, {"dimension_a", "dimension_b", "pearson_r", "n_overlap"});
  for (Dimension a : kAllDimensions) {
    for (Dimension b : kAllDimensions) {
      const auto& r = c.at(a, b);
      csv::write_record(out, {std::string(to_string(a)), std::string(to_string(b)),
                              r ? csv::format_double(*r) : "",
                              std::to_string(c.overlap[index_of(a)][index_of(b)])});
    }
  }
}

void write_histograms_csv(const ScoreHistogram& h, const fs::path& path) {
  auto out = open_out(path);
  csv::write_record(out, {"dimension", "group", "score", "count"});
  const size_t groups = h.by_category ? ScoreHistogram::kNumGroups : 1;
  for (Dimension d : kAllDimensions) {
    for (size_t g = 0; g < groups; ++g) {
      std::string group = "all";
      if (h.by_category) {
        group = g == ScoreHistogram::kUncategorized
                    ? "uncategorized"
                    : std::string(to_string(kAllCategories[g]));
      }
      for (size_t s = 0; s < kNumScoreLevels; ++s) {
        csv::write_record(out, {std::string(to_string(d)), group, std::to_string(s + 1),
                                std::to_string(h.counts[index_of(d)][g][s])});
      }
    }
  }
}

fs::path model_path(const fs::path& models_dir, const std::string& backend, Dimension d,
                    Task t) {
  return models_dir / backend /
         (std::string(to_string(d)) + "." + std::string(to_string(t)) + ".json");
}

void write_probes(std::span<const TrainedProbe> probes, const fs::path& dir) {
  for (const auto& p : probes) {
    const auto mpath = model_path(dir / "models", p.backend, p.dimension, p.task);
    fs::create_directories(mpath.parent_path());
    save_model(p.model, mpath);
    const auto spath = dir / "selection" / p.backend /
                       (std::string(to_string(p.dimension)) + "." +
                        std::string(to_string(p.task)) + ".csv");
    fs::create_directories(spath.parent_path());
    write_selection_csv(p.selection, spath);
  }
}

std::vector<ProbeModel> load_probe_set(const fs::path& models_dir, const std::string& backend,
                                       Task task) {
  std::vector<ProbeModel> out;
  for (Dimension d : kAllDimensions) {
    const auto p = model_path(models_dir, backend, d, task);
    if (!fs::exists(p)) throw Error(ErrorCode::MissingModel, p.string());
    out.push_back(load_model(p));
  }
  return out;
}

void write_run_meta(const ExperimentConfig& cfg, std::string_view subcommand,
                    const nlohmann::json& extra, const fs::path& path) {
  auto config = to_json(cfg);
  config.erase("jobs");
  nlohmann::json j = {
      {"tool", "vqdprobe"},
      {"version", VQD_VERSION},
      {"subcommand", subcommand},
      {"seed", cfg.seed},
      {"config_hash", config_hash(cfg)},
      {"config", config},
      {"conventions",
       {{"bootstrap", "percentile, resampling " + std::string(to_string(cfg.bootstrap_mode))},
        {"aggregate_std", "population"},
        {"annotation_correlations_scope", "all records"},
        {"ties", "average ranks (spearman), half credit (auc)"}}},
  };
  if (!extra.is_null()) j["details"] = extra;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace vqd
