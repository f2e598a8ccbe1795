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


#include "vqd/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vqd/corpus.hpp"
#include "vqd/embedstore.hpp"
#include "vqd/errors.hpp"
#include "vqd/harness.hpp"
#include "vqd/parallel.hpp"
#include "vqd/synth.hpp"

namespace vqd {

namespace fs = std::filesystem;

namespace {

/// Flag surface shared by the experiment subcommands. Empty values mean
/// "not given" so the config file or defaults apply.
struct Overrides {
  std::string config_path;
  std::string manifest_path;
  std::vector<std::string> embedding_paths;
  std::vector<std::string> dimensions;
  std::vector<std::string> train_categories;
  std::vector<std::string> eval_categories;
  std::string task;
  std::string output_dir;
  std::string bootstrap_mode;
  std::string models_dir;
  std::string backend;
  std::string external_manifest;
  std::string external_embeddings;
  std::string dataset_name;
  std::vector<int> severity_levels;
  std::optional<uint64_t> seed;
  std::optional<size_t> n_boot;
  std::optional<size_t> jobs;
  bool use_classifier = false;
  bool dry_run = false;
};

struct SynthArgs {
  SynthSpec spec;
  std::string out = "synth_out";
  CLI::Option* seed_opt = nullptr;
  bool dry_run = false;
};

struct InspectArgs {
  std::string model;
};

uint64_t env_seed() {
  const char* s = std::getenv("VQD_PROBE_SEED");
  if (!s || !*s) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') {
    throw Error(ErrorCode::ConfigInvalid, std::string("VQD_PROBE_SEED is not an integer: ") + s);
  }
  return v;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON config mirroring ExperimentConfig");
  sub->add_option("--seed", o.seed, "Seed (default: $VQD_PROBE_SEED or 0)");
  sub->add_option("--jobs", o.jobs, "Concurrent probe trainings");
  sub->add_option("--output-dir,--out", o.output_dir, "Output directory");
  sub->add_flag("--dry-run", o.dry_run, "Validate and print the plan only");
}

void add_corpus(CLI::App* sub, Overrides& o) {
  sub->add_option("--manifest-path,--manifest", o.manifest_path, "Manifest CSV");
  sub->add_option("--embedding-paths,--embeddings", o.embedding_paths,
                  "backend=path (repeatable)");
  sub->add_option("--dimensions", o.dimensions, "Dimensions to probe");
}

void add_experiment(CLI::App* sub, Overrides& o) {
  add_corpus(sub, o);
  sub->add_option("--train-categories", o.train_categories, "Training categories");
  sub->add_option("--eval-categories", o.eval_categories, "Evaluation categories");
  sub->add_option("--task", o.task, "regression, classification or both");
  sub->add_option("--n-boot", o.n_boot, "Bootstrap replicates");
  sub->add_option("--bootstrap-mode", o.bootstrap_mode, "rows or speakers");
}

void add_transfer(CLI::App* sub, Overrides& o) {
  sub->add_option("--models-dir", o.models_dir, "Directory holding <backend>/*.json");
  sub->add_option("--backend", o.backend, "Backend whose probes to load");
  sub->add_option("--external-manifest", o.external_manifest, "External manifest CSV");
  sub->add_option("--external-embeddings", o.external_embeddings, "External VQDE file");
  sub->add_option("--dataset-name", o.dataset_name, "Label used in output names");
  sub->add_flag("--use-classifier", o.use_classifier, "Use classification probes");
  sub->add_option("--n-boot", o.n_boot, "Bootstrap replicates");
  sub->add_option("--bootstrap-mode", o.bootstrap_mode, "rows or speakers");
}

ExperimentConfig resolve(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + o.config_path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, o.config_path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  }
  auto set_str = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  auto set_list = [&](const char* key, const std::vector<std::string>& v) {
    if (!v.empty()) j[key] = v;
  };
  set_str("manifest_path", o.manifest_path);
  if (!o.embedding_paths.empty()) {
    nlohmann::json paths = nlohmann::json::object();
    for (const auto& kv : o.embedding_paths) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
        throw Error(ErrorCode::ConfigInvalid,
                    "embedding path must be backend=path, got '" + kv + "'");
      }
      paths[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    j["embedding_paths"] = paths;
  }
  set_list("dimensions", o.dimensions);
  set_list("train_categories", o.train_categories);
  set_list("eval_categories", o.eval_categories);
  set_str("task", o.task);
  set_str("output_dir", o.output_dir);
  set_str("bootstrap_mode", o.bootstrap_mode);
  set_str("models_dir", o.models_dir);
  set_str("backend", o.backend);
  set_str("external_manifest", o.external_manifest);
  set_str("external_embeddings", o.external_embeddings);
  set_str("dataset_name", o.dataset_name);
  if (o.seed) {
    j["seed"] = *o.seed;
  } else if (!j.contains("seed")) {
    j["seed"] = env_seed();
  }
  if (o.n_boot) j["n_boot"] = *o.n_boot;
  if (o.jobs) {
    j["jobs"] = *o.jobs;
  } else if (!j.contains("jobs")) {
    j["jobs"] = default_jobs();
  }
  if (o.use_classifier) j["use_classifier"] = true;
  auto cfg = config_from_json(j);
  if (cfg.jobs == 0) throw Error(ErrorCode::ConfigInvalid, "jobs must be positive");
  return cfg;
}

std::vector<EmbeddingTable> load_tables(const ExperimentConfig& cfg) {
  std::vector<EmbeddingTable> tables;
  for (const auto& [backend, path] : cfg.embedding_paths) {
    auto t = read_table(path);
    if (t.backend_name() != backend) {
      warn(path.string() + " holds backend '" + t.backend_name() + "', listed as '" +
           backend + "'");
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

void plan_header(const ExperimentConfig& cfg, std::string_view sub) {
  std::cout << "plan: " << sub << "\n"
            << "  config_hash: " << config_hash(cfg) << "\n"
            << "  seed: " << cfg.seed << "\n"
            << "  jobs: " << cfg.jobs << "\n"
            << "  output_dir: " << cfg.output_dir.string() << "\n";
}

void plan_outputs(std::initializer_list<std::string> files) {
  std::cout << "  writes:\n";
  for (const auto& f : files) std::cout << "    " << f << "\n";
}

size_t task_count(TaskSelection t) { return t == TaskSelection::Both ? 2 : 1; }

nlohmann::json probe_summary(std::span<const TrainedProbe> probes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : probes) {
    arr.push_back({{"backend", p.backend},
                   {"dimension", to_string(p.dimension)},
                   {"task", to_string(p.task)},
                   {"lambda", p.model.lambda},
                   {"n_train", p.model.train_meta.n_train},
                   {"converged", p.model.train_meta.converged}});
  }
  return arr;
}

int cmd_stats(const Overrides& o) {
  const auto cfg = resolve(o);
  require_inputs(cfg, false, false, false);
  if (o.dry_run) {
    plan_header(cfg, "stats");
    plan_outputs({"annotation_correlations.csv", "score_histograms.csv", "run_meta.json"});
    return kExitOk;
  }
  const auto m = load_manifest(cfg.manifest_path);
  const auto disjoint = check_speaker_disjoint(m);
  const auto eligible = dimension_eligibility(m);
  std::cout << "records: " << m.size() << "\n"
            << "train: " << m.count_split(Split::Train)
            << " validation: " << m.count_split(Split::Validation)
            << " test: " << m.count_split(Split::Test) << "\n"
            << "speaker_disjoint: " << (disjoint.ok ? "yes" : "no") << "\n";
  for (const auto& s : disjoint.offending_speakers) warn("speaker " + s + " spans splits");
  for (Dimension d : kAllDimensions) {
    std::cout << to_string(d) << ": " << (eligible[index_of(d)] ? "eligible" : "excluded")
              << "\n";
  }
  write_correlations_csv(annotation_correlations(m),
                         cfg.output_dir / "annotation_correlations.csv");
  write_histograms_csv(score_histograms(m, true), cfg.output_dir / "score_histograms.csv");
  nlohmann::json extra = {{"records", m.size()}, {"speaker_disjoint", disjoint.ok}};
  write_run_meta(cfg, "stats", extra, cfg.output_dir / "run_meta.json");
  return kExitOk;
}

int cmd_train_or_evaluate(const Overrides& o, bool evaluate) {
  const auto cfg = resolve(o);
  require_inputs(cfg, true, false, false);
  const std::string_view name = evaluate ? "evaluate" : "train";
  if (o.dry_run) {
    plan_header(cfg, name);
    std::cout << "  probes: " << cfg.embedding_paths.size() << " backend(s) x "
              << cfg.dimensions.size() << " dimension(s) x " << task_count(cfg.task)
              << " task(s)\n";
    if (evaluate) {
      plan_outputs({"table1.csv", "table1_r2_mae.csv", "models/", "selection/",
                    "run_meta.json"});
    } else {
      plan_outputs({"models/", "selection/", "run_meta.json"});
    }
    return kExitOk;
  }
  const auto m = load_manifest(cfg.manifest_path);
  const auto tables = load_tables(cfg);
  if (evaluate) {
    const auto r = run_table1(cfg, m, tables);
    write_metric_reports_csv(r.cells, cfg.output_dir / "table1.csv");
    write_metric_reports_csv(r.extra_cells, cfg.output_dir / "table1_r2_mae.csv");
    write_probes(r.probes, cfg.output_dir);
    write_run_meta(cfg, name, {{"probes", probe_summary(r.probes)}},
                   cfg.output_dir / "run_meta.json");
  } else {
    const auto probes = train_probes(cfg, m, tables);
    write_probes(probes, cfg.output_dir);
    write_run_meta(cfg, name, {{"probes", probe_summary(probes)}},
                   cfg.output_dir / "run_meta.json");
  }
  return kExitOk;
}

int cmd_generalize(const Overrides& o) {
  const auto cfg = resolve(o);
  require_inputs(cfg, true, false, false);
  if (o.dry_run) {
    plan_header(cfg, "generalize");
    std::cout << "  grid: " << cfg.embedding_paths.size() << " backend(s) x "
              << kTable2TrainGroups << " training groups x " << kNumCategories
              << " evaluation categories\n";
    plan_outputs({"table2.csv", "run_meta.json"});
    return kExitOk;
  }
  const auto m = load_manifest(cfg.manifest_path);
  const auto tables = load_tables(cfg);
  const auto r = run_table2(cfg, m, tables);
  write_table2_csv(r, cfg.output_dir / "table2.csv");
  write_run_meta(cfg, "generalize", nullptr, cfg.output_dir / "run_meta.json");
  return kExitOk;
}

std::string dataset_label(const ExperimentConfig& cfg) {
  if (!cfg.dataset_name.empty()) return cfg.dataset_name;
  return cfg.external_manifest.stem().string();
}

void require_transfer(const ExperimentConfig& cfg) {
  if (!cfg.external_manifest.empty() && !fs::exists(cfg.external_manifest)) {
    throw Error(ErrorCode::ConfigInvalid,
                "external manifest does not exist: " + cfg.external_manifest.string());
  }
  if (cfg.external_manifest.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "external manifest is not set");
  }
  if (cfg.external_embeddings.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "external embeddings are not set");
  }
  if (!fs::exists(cfg.external_embeddings)) {
    throw Error(ErrorCode::ConfigInvalid,
                "external embeddings do not exist: " + cfg.external_embeddings.string());
  }
  if (cfg.models_dir.empty()) throw Error(ErrorCode::ConfigInvalid, "models directory is not set");
  if (!fs::exists(cfg.models_dir)) {
    throw Error(ErrorCode::ConfigInvalid,
                "models directory does not exist: " + cfg.models_dir.string());
  }
  if (cfg.backend.empty()) throw Error(ErrorCode::ConfigInvalid, "backend is not set");
}

int cmd_zeroshot(const Overrides& o) {
  const auto cfg = resolve(o);
  require_transfer(cfg);
  const auto label = dataset_label(cfg);
  const Task task = cfg.use_classifier ? Task::Classification : Task::Regression;
  if (o.dry_run) {
    plan_header(cfg, "zeroshot");
    std::cout << "  probes: " << cfg.backend << " " << to_string(task) << "\n";
    plan_outputs({"severity_strata_" + label + ".csv", "zeroshot_" + label + ".csv",
                  "run_meta.json"});
    return kExitOk;
  }
  const auto models = load_probe_set(cfg.models_dir, cfg.backend, task);
  const auto ext = load_manifest(cfg.external_manifest);
  const auto emb = read_table(cfg.external_embeddings);
  std::optional<std::vector<int>> levels;
  if (!o.severity_levels.empty()) levels = o.severity_levels;
  const auto strata =
      severity_stratified_predictions(models, ext, emb, cfg.use_classifier, levels);
  write_strata_csv(strata, cfg.output_dir / ("severity_strata_" + label + ".csv"));

  ZeroShotOptions zo;
  zo.dataset_name = label;
  zo.use_classifier = cfg.use_classifier;
  zo.n_boot = cfg.n_boot;
  zo.seed = cfg.seed;
  zo.bootstrap_mode = cfg.bootstrap_mode;
  zo.jobs = cfg.jobs;
  const auto rep = run_zeroshot(models, ext, emb, zo);
  write_zeroshot_csv(rep, cfg.output_dir / ("zeroshot_" + label + ".csv"));
  write_run_meta(cfg, "zeroshot", {{"dataset", label}}, cfg.output_dir / "run_meta.json");
  return kExitOk;
}

int cmd_affect(const Overrides& o) {
  const auto cfg = resolve(o);
  require_transfer(cfg);
  const Task task = cfg.use_classifier ? Task::Classification : Task::Regression;
  if (o.dry_run) {
    plan_header(cfg, "affect");
    std::cout << "  probes: " << cfg.backend << " " << to_string(task) << "\n";
    plan_outputs({"affect_profile.csv", "run_meta.json"});
    return kExitOk;
  }
  const auto models = load_probe_set(cfg.models_dir, cfg.backend, task);
  const auto ext = load_manifest(cfg.external_manifest);
  const auto emb = read_table(cfg.external_embeddings);
  write_affect_csv(affect_profile(models, ext, emb, cfg.use_classifier),
                   cfg.output_dir / "affect_profile.csv");
  write_run_meta(cfg, "affect", {{"dataset", dataset_label(cfg)}},
                 cfg.output_dir / "run_meta.json");
  return kExitOk;
}

int cmd_synth(SynthArgs& a) {
  if (!(a.seed_opt && a.seed_opt->count())) a.spec.seed = env_seed();
  try {
    validate(a.spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.detail());
  }
  const fs::path out = a.out;
  if (a.dry_run) {
    std::cout << "plan: synth\n"
              << "  seed: " << a.spec.seed << "\n"
              << "  utterances: " << a.spec.n_speakers * a.spec.utterances_per_speaker << "\n"
              << "  dim: " << a.spec.dim << "\n"
              << "  output_dir: " << out.string() << "\n";
    plan_outputs({"manifest.csv", "embeddings.vqde"});
    return kExitOk;
  }
  const auto corpus = generate(a.spec);
  fs::create_directories(out);
  write_manifest(corpus.manifest, out / "manifest.csv");
  write_table(corpus.table, out / "embeddings.vqde");
  return kExitOk;
}

int cmd_inspect(const InspectArgs& a) {
  if (!fs::exists(a.model)) {
    throw Error(ErrorCode::ConfigInvalid, "model file does not exist: " + a.model);
  }
  const auto m = load_model(a.model);
  size_t nonzero = 0;
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) nonzero += m.weights(i) != 0.0;
  nlohmann::json j = {
      {"task", to_string(m.task)},
      {"backend_name", m.backend_name},
      {"dimension", to_string(m.dimension)},
      {"lambda", m.lambda},
      {"intercept", m.intercept},
      {"dim", m.weights.size()},
      {"nonzero_weights", nonzero},
      {"n_train", m.train_meta.n_train},
      {"converged", m.train_meta.converged},
  };
  if (m.binarization_threshold) j["binarization_threshold"] = *m.binarization_threshold;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Linear probes of perceptual voice-quality dimensions", "vqd-probe"};
  app.set_version_flag("--version", VQD_VERSION);
  app.require_subcommand(1, 1);

  Overrides o;
  SynthArgs synth;
  InspectArgs inspect;

  auto* stats = app.add_subcommand("stats", "Corpus statistics and annotation correlations");
  add_common(stats, o);
  stats->add_option("--manifest-path,--manifest", o.manifest_path, "Manifest CSV");

  auto* train = app.add_subcommand("train", "Fit probes and save them");
  add_common(train, o);
  add_experiment(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "Fit probes and report test metrics");
  add_common(evaluate, o);
  add_experiment(evaluate, o);

  auto* generalize = app.add_subcommand("generalize", "Category generalization grid");
  add_common(generalize, o);
  add_corpus(generalize, o);

  auto* zeroshot = app.add_subcommand("zeroshot", "Severity AUC on an external dataset");
  add_common(zeroshot, o);
  add_transfer(zeroshot, o);
  zeroshot->add_option("--severity-levels", o.severity_levels, "Strata to report");

  auto* affect = app.add_subcommand("affect", "Mean probe output per emotion");
  add_common(affect, o);
  add_transfer(affect, o);

  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth.seed_opt = syn->add_option("--seed", synth.spec.seed, "Seed (default: $VQD_PROBE_SEED or 0)");
  syn->add_option("--out,--output-dir", synth.out, "Output directory");
  syn->add_option("--n-speakers", synth.spec.n_speakers, "Number of speakers");
  syn->add_option("--utterances-per-speaker", synth.spec.utterances_per_speaker,
                  "Utterances per speaker");
  syn->add_option("--dim", synth.spec.dim, "Embedding dimension");
  syn->add_option("--noise-sigma", synth.spec.noise_sigma, "Score noise");
  syn->add_option("--dimension-correlation", synth.spec.dimension_correlation,
                  "Shared-factor weight in [0, 1]");
  syn->add_option("--weight-seed", synth.spec.weight_seed, "Seed of the planted directions");
  syn->add_option("--backend-name", synth.spec.backend_name, "Backend name in the table");
  syn->add_option("--source-name", synth.spec.source_name, "Manifest source name");
  syn->add_flag("--emit-severity", synth.spec.emit_severity, "Add binary severity labels");
  syn->add_option("--severity-rate", synth.spec.severity_rate, "Fraction labeled severe");
  syn->add_option("--emotion-shift", synth.spec.emotion_shift,
                  "Add emotion labels with this embedding shift");
  syn->add_flag("--dry-run", synth.dry_run, "Print the plan only");

  auto* insp = app.add_subcommand("inspect-model", "Summarize a saved probe");
  insp->add_option("model", inspect.model, "Probe JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ConfigInvalid: " << one_line(e.what()) << "\n";
    return kExitValidation;
  }

  try {
    if (*stats) return cmd_stats(o);
    if (*train) return cmd_train_or_evaluate(o, false);
    if (*evaluate) return cmd_train_or_evaluate(o, true);
    if (*generalize) return cmd_generalize(o);
    if (*zeroshot) return cmd_zeroshot(o);
    if (*affect) return cmd_affect(o);
    if (*syn) return cmd_synth(synth);
    if (*insp) return cmd_inspect(inspect);
  } catch (const Error& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return e.code() == ErrorCode::ConfigInvalid ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << one_line(e.what()) << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace vqd
