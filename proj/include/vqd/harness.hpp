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


#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqd/corpus.hpp"
#include "vqd/embedstore.hpp"
#include "vqd/linmod.hpp"
#include "vqd/metrics.hpp"
#include "vqd/modelsel.hpp"

namespace vqd {

enum class TaskSelection { Regression, Classification, Both };
enum class BootstrapMode { Rows, Speakers };

std::string_view to_string(TaskSelection t);
std::string_view to_string(BootstrapMode m);

/// Declarative description of one run. JSON keys match the field names.
struct ExperimentConfig {
  std::filesystem::path manifest_path;
  std::map<std::string, std::filesystem::path> embedding_paths;  // backend -> file
  std::vector<Dimension> dimensions{kAllDimensions.begin(), kAllDimensions.end()};
  std::vector<Category> train_categories{kAllCategories.begin(), kAllCategories.end()};
  std::vector<Category> eval_categories{kAllCategories.begin(), kAllCategories.end()};
  TaskSelection task = TaskSelection::Both;
  uint64_t seed = 0;
  size_t n_boot = 1000;
  std::filesystem::path output_dir = "vqd_out";
  size_t jobs = 1;
  BootstrapMode bootstrap_mode = BootstrapMode::Rows;
  bool use_classifier = false;

  // Zero-shot and affect runs.
  std::filesystem::path models_dir;
  std::string backend;
  std::filesystem::path external_manifest;
  std::filesystem::path external_embeddings;
  std::string dataset_name;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown keys or wrongly typed values throw ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Hex digest of the canonical config JSON (jobs excluded).
std::string config_hash(const ExperimentConfig& cfg);

/// Throws ConfigInvalid naming the first referenced file that is missing.
void require_inputs(const ExperimentConfig& cfg, bool embeddings, bool external,
                    bool models);

struct TrainedProbe {
  std::string backend;
  Dimension dimension = Dimension::Intelligibility;
  Task task = Task::Regression;
  SelectionResult selection;
  ProbeModel model;
};

/// Fits a probe per (backend, dimension, task) on the Train split restricted
/// to cfg.train_categories, selecting lambda on the matching Validation rows.
/// Jobs run concurrently up to cfg.jobs; output order is deterministic.
std::vector<TrainedProbe> train_probes(const ExperimentConfig& cfg, const Manifest& m,
                                       std::span<const EmbeddingTable> tables);

struct Table1Cell {
  std::string backend;
  Dimension dimension = Dimension::Intelligibility;
  MetricReport report;
};

struct Table1Result {
  std::vector<Table1Cell> cells;        // Spearman and AUC rows
  std::vector<Table1Cell> extra_cells;  // R2 and MAE of the regression probes
  std::vector<TrainedProbe> probes;
};

/// Test-split Spearman (regression probe) and AUC (classification probe)
/// with bootstrap CIs, test rows restricted to cfg.eval_categories.
Table1Result run_table1(const ExperimentConfig& cfg, const Manifest& m,
                        std::span<const EmbeddingTable> tables);

inline constexpr size_t kTable2TrainGroups = 4;  // all + three categories

struct Table2Cell {
  std::string backend;
  std::optional<Category> train_category;  // nullopt = trained on all data
  Category eval_category = Category::DigitalCommand;
  std::vector<double> per_dimension;  // Spearman, cfg.dimensions order
  MeanStd aggregate;
};

struct Table2Result {
  std::vector<Table2Cell> cells;  // backend-major, then train group, then eval
};

/// Category generalization grid: 4 training groups x 3 evaluation categories.
Table2Result run_table2(const ExperimentConfig& cfg, const Manifest& m,
                        std::span<const EmbeddingTable> tables);

struct ZeroShotOptions {
  std::string dataset_name = "external";
  bool use_classifier = false;
  size_t n_boot = 1000;
  uint64_t seed = 0;
  BootstrapMode bootstrap_mode = BootstrapMode::Rows;
  size_t jobs = 1;
};

struct ZeroShotReport {
  std::string dataset_name;
  std::string backend;
  std::array<MetricReport, kNumDimensions> per_dimension_auc;
  MetricReport sum_auc;  // unweighted sum of the seven probe outputs
};

/// Severity AUC of each probe and of their sum on an external dataset whose
/// manifest carries binary (0/1) severity labels.
ZeroShotReport run_zeroshot(std::span<const ProbeModel> models, const Manifest& external,
                            const EmbeddingTable& embeddings,
                            const ZeroShotOptions& opts = {});

struct StratumSummary {
  Dimension dimension = Dimension::Intelligibility;
  int severity = 0;
  size_t n = 0;
  double mean = 0, q25 = 0, median = 0, q75 = 0;
};

/// Probe output distribution per (severity level, dimension), ordered by
/// severity then dimension. Requested levels with no samples are omitted
/// with a warning.
std::vector<StratumSummary> severity_stratified_predictions(
    std::span<const ProbeModel> models, const Manifest& external,
    const EmbeddingTable& embeddings, bool use_classifier = false,
    const std::optional<std::vector<int>>& levels = std::nullopt);

struct AffectProfile {
  std::array<std::array<std::optional<double>, kNumDimensions>, kNumEmotions> mean{};
  std::array<size_t, kNumEmotions> count{};
};

/// Mean probe output per (emotion, dimension). Emotions without samples
/// keep count 0 and no means, and are left out of the CSV.
AffectProfile affect_profile(std::span<const ProbeModel> models, const Manifest& affect,
                             const EmbeddingTable& embeddings, bool use_classifier = false);

/// sum_k probs[k] * values[k]; throws NotNormalized unless probs are
/// non-negative and sum to 1 within 1e-6.
double label_weighted_score(std::span<const double> class_probs,
                            std::span<const double> class_values);

// ---------------------------------------------------------------------------
// Persistence. All writers emit deterministic bytes for identical inputs.

void write_metric_reports_csv(std::span<const Table1Cell> cells,
                              const std::filesystem::path& path);
void write_table2_csv(const Table2Result& r, const std::filesystem::path& path);
void write_zeroshot_csv(const ZeroShotReport& r, const std::filesystem::path& path);
void write_strata_csv(std::span<const StratumSummary> strata,
                      const std::filesystem::path& path);
void write_affect_csv(const AffectProfile& p, const std::filesystem::path& path);
void write_correlations_csv(const CorrelationMatrix& c,
                            const std::filesystem::path& path);
void write_histograms_csv(const ScoreHistogram& h, const std::filesystem::path& path);

/// models/<backend>/<dimension>.<task>.json and selection/<...>.csv
void write_probes(std::span<const TrainedProbe> probes, const std::filesystem::path& dir);
std::filesystem::path model_path(const std::filesystem::path& models_dir,
                                 const std::string& backend, Dimension d, Task t);
/// Loads the seven probes of one backend and task; throws MissingModel.
std::vector<ProbeModel> load_probe_set(const std::filesystem::path& models_dir,
                                       const std::string& backend, Task task);

void write_run_meta(const ExperimentConfig& cfg, std::string_view subcommand,
                    const nlohmann::json& extra, const std::filesystem::path& path);

}  // namespace vqd
