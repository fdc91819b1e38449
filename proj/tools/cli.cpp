// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "agentpanel/error.hpp"
#include "agentpanel/live_backends.hpp"
#include "agentpanel/report_io.hpp"
#include "agentpanel/scaling_analysis.hpp"
#include "agentpanel/session_store.hpp"
#include "agentpanel/synthetic_lab.hpp"

namespace agentpanel {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown when an input file named on the command line does not exist.
class MissingInput : public Error {
 public:
  using Error::Error;
};

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw MissingInput(std::string(what) + " not found: " + p.string());
}

const char* kCsvFooter =
    "CSV columns:\n"
    "  icc_curve.csv        size,icc,ci_low,ci_high,nested_icc,saturation\n"
    "  discovery_curve.csv  size,unique_findings,band_low,band_high,raw_insights,\n"
    "                       high_impact_share,marginal_per_judge,saturation\n"
    "  threshold_sweep.csv  theta,size,unique_findings,exponent,coefficient,r_squared,recommended\n"
    "  ablation.csv         condition,sessions,mean_score,score_sd,insights_per_session,expertise_d\n"
    "  turing.csv           task_id,domain,humans,agents,mean_hh,mean_ha,welch_t,welch_df,p_raw,"
    "p_bonferroni\n"
    "Environment: AGENTPANEL_API_KEY (or the variable named by api_key_env) for live endpoints.";

// Inputs shared by the analysis commands.
struct DataOptions {
  std::string store;
  std::string pool;
  std::string catalog;
  std::string config;
  std::string run_label = "A";
};

struct Inputs {
  std::vector<PersonaSpec> pool;
  std::vector<TaskSpec> catalog;
  std::optional<RunConfig> config;
  std::vector<SessionRecord> records;
};

void add_data_options(CLI::App* cmd, DataOptions& o, bool store_required = true) {
  auto* s = cmd->add_option("--store", o.store, "JSONL session store");
  if (store_required) s->required();
  cmd->add_option("--pool", o.pool, "persona pool JSON (default: shipped pool)");
  cmd->add_option("--catalog", o.catalog, "task catalog JSON (default: shipped catalog)");
  cmd->add_option("--config", o.config, "run config JSON (selects embedding and scoring backends)");
  cmd->add_option("--run", o.run_label, "run label to analyze")->capture_default_str();
}

Inputs load_inputs(const DataOptions& o, std::ostream& err) {
  Inputs in;
  if (!o.config.empty()) {
    require_file(o.config, "config");
    in.config = load_run_config(o.config);
  }
  std::string pool = o.pool, catalog = o.catalog;
  if (pool.empty() && in.config && in.config->pool_path) pool = in.config->pool_path->string();
  if (catalog.empty() && in.config && in.config->catalog_path) {
    catalog = in.config->catalog_path->string();
  }
  if (!pool.empty()) require_file(pool, "pool");
  if (!catalog.empty()) require_file(catalog, "catalog");
  in.pool = pool.empty() ? shipped_pool() : load_pool_file(pool);
  in.catalog = catalog.empty() ? shipped_catalog() : load_catalog_file(catalog);
  if (!o.store.empty()) {
    require_file(o.store, "store");
    LoadReport report;
    in.records = load_sessions(o.store, &report);
    if (report.truncated_tail) {
      err << "warning: " << o.store << " ends with an incomplete record (" << report.tail.size()
          << " bytes ignored)\n";
    }
  }
  return in;
}

bool live_analysis(const Inputs& in) { return in.config && in.config->backend == BackendKind::Live; }

std::unique_ptr<Embedder> make_embedder(const Inputs& in) {
  if (live_analysis(in) && !in.config->embedding.model.empty()) {
    return std::make_unique<LiveEmbedder>(in.config->embedding, in.config->embedding_dimension,
                                          in.config->embedding_cache);
  }
  return std::make_unique<HashedBagEmbedder>();
}

std::unique_ptr<TranscriptScorer> make_blind_scorer(const Inputs& in) {
  if (live_analysis(in)) return std::make_unique<LiveBlindScorer>(in.config->judge);
  return std::make_unique<SyntheticBlindScorer>();
}

std::vector<int> sizes_for(const Inputs& in) {
  if (in.config) {
    in.config->validate(in.pool.size());
    return in.config->panel_sizes;
  }
  return canonical_sizes(in.pool.size());
}

std::vector<SessionRecord> grid_sessions(const SessionGrid& grid) {
  std::vector<SessionRecord> out;
  for (const auto& row : grid.cell) {
    for (const auto* r : row) out.push_back(*r);
  }
  return out;
}

bool has_label(std::span<const SessionRecord> records, std::string_view label) {
  return std::any_of(records.begin(), records.end(),
                     [&](const SessionRecord& r) { return r.run_label == label; });
}

json manifest(std::uint64_t seed, std::string_view command, const DataOptions& o,
              std::size_t records, const std::vector<std::string>& artifacts) {
  return {{"tool", "agentpanel"},
          {"command", command},
          {"seed", seed},
          {"store", o.store},
          {"run_label", o.run_label},
          {"records", records},
          {"artifacts", artifacts}};
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::uint64_t seed = 0;
  std::string out;
  std::string pool;
  std::string catalog;
  std::string label = "A";
  bool second_run = false;
  std::string second_label = "B";
  bool ablation = false;
  SyntheticWorldConfig world;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  DataOptions d;
  d.pool = o.pool;
  d.catalog = o.catalog;
  const auto in = load_inputs(d, err);
  ExperimentOptions ex;
  ex.run_label = o.label;
  ex.second_run = o.second_run;
  ex.second_label = o.second_label;
  ex.ablation = o.ablation;
  if (ex.ablation) {
    std::erase_if(ex.ablation_tasks, [&](const std::string& id) {
      return std::none_of(in.catalog.begin(), in.catalog.end(),
                          [&](const TaskSpec& t) { return t.id == id; });
    });
  }
  o.world.validate();
  const auto records = run_synthetic_experiment(o.world, in.pool, in.catalog, o.seed, ex);
  write_sessions(o.out, records);
  out << "wrote " << records.size() << " sessions to " << o.out << " (seed " << o.seed << ")\n";
  return kExitOk;
}

// --------------------------------------------------------------------- run

struct RunOptions {
  std::string config;
  std::string out;
  int workers = 0;
  std::vector<std::string> tasks;
  std::size_t panel = 0;
};

struct Job {
  const TaskSpec* task;
  const PersonaSpec* persona;
  std::uint64_t seed;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  DataOptions d;
  d.config = o.config;
  const auto in = load_inputs(d, err);
  const RunConfig& cfg = *in.config;
  cfg.validate(in.pool.size());
  const int workers = o.workers > 0 ? o.workers : std::max(1, cfg.workers);

  std::optional<ScriptedTarget> scripted_target;
  std::optional<ScriptedJudge> scripted_judge;
  std::optional<SyntheticWorld> world;
  auto slurp = [](const fs::path& p) {
    require_file(p, "script");
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  if (cfg.backend == BackendKind::Scripted) {
    if (!cfg.target_script || !cfg.judge_script) {
      throw ValidationError("scripted backend needs target_script and judge_script");
    }
    scripted_target = ScriptedTarget::from_json(slurp(*cfg.target_script));
    scripted_judge = ScriptedJudge::from_json(slurp(*cfg.judge_script));
  } else if (cfg.backend == BackendKind::Synthetic) {
    world = gen_world(SyntheticWorldConfig{}, cfg.seed, in.pool, in.catalog);
  }

  SessionStore store(o.out);
  if (store.load_report().truncated_tail) {
    err << "warning: quarantined an incomplete record from " << o.out << "\n";
  }

  const std::size_t panel_size =
      o.panel > 0 ? o.panel
                  : static_cast<std::size_t>(
                        *std::max_element(cfg.panel_sizes.begin(), cfg.panel_sizes.end()));
  if (panel_size > in.pool.size()) throw RangeError("--panel exceeds the pool size");
  std::vector<Job> jobs;
  std::size_t skipped = 0;
  for (const auto& task : in.catalog) {
    if (!o.tasks.empty() && std::find(o.tasks.begin(), o.tasks.end(), task.id) == o.tasks.end()) {
      continue;
    }
    const auto panel = select_panel(rank_panel(in.pool, task), panel_size);
    for (const int id : panel) {
      if (store.contains({cfg.run_label, task.id, id, cfg.condition})) {
        ++skipped;
        continue;
      }
      jobs.push_back({&task, &find_persona(in.pool, id),
                      session_seed(cfg.seed, cfg.run_label, task.id, id, cfg.condition)});
    }
  }

  SessionConfig scfg;
  scfg.condition = cfg.condition;
  scfg.run_label = cfg.run_label;
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::size_t done = 0, failed = 0;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      SessionRecord record;
      switch (cfg.backend) {
        case BackendKind::Live: {
          LiveTarget target(cfg.target);
          LiveJudge judge(cfg.judge);
          record = run_session(*job.persona, *job.task, target, judge, scfg, job.seed);
          break;
        }
        case BackendKind::Scripted: {
          ScriptedTarget target = *scripted_target;
          ScriptedJudge judge = *scripted_judge;
          record = run_session(*job.persona, *job.task, target, judge, scfg, job.seed);
          break;
        }
        case BackendKind::Synthetic: {
          SyntheticTarget target;
          SyntheticJudge judge(*world, *job.persona, *job.task, cfg.condition, job.seed);
          record = run_session(*job.persona, *job.task, target, judge, scfg, job.seed);
          break;
        }
      }
      std::lock_guard lock(log_mutex);
      if (record.failed) {
        // Failed sessions stay out of the store so a rerun retries them.
        ++failed;
        err << "session " << record.session_id << " failed: " << record.failure_reason << "\n";
        continue;
      }
      store.append(record);
      ++done;
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  out << "completed " << done << " sessions, skipped " << skipped << " already stored, " << failed
      << " failed; store " << o.out << " holds " << store.size() << " records\n";
  return failed > 0 ? kExitFailure : kExitOk;
}

// ------------------------------------------------------------- analysis

struct AnalysisOptions {
  DataOptions data;
  std::string out_dir;
  std::uint64_t seed = 0;
  int resamples = 2000;
  double theta = kDefaultTheta;
  std::string second_label = "B";
  std::string human;
  bool markdown = false;
};

AnalysisBundle analyze_store(const AnalysisOptions& o, const Inputs& in, std::ostream& err) {
  AnalysisBundle b;
  b.seed = o.seed;
  b.run_label = o.data.run_label;
  const auto sizes = sizes_for(in);
  const auto thetas = in.config ? in.config->sweep : default_sweep_thetas();
  const double theta = in.config ? in.config->theta : o.theta;

  const auto grid = build_grid(in.records, in.pool, in.catalog, o.data.run_label);
  b.icc = icc_curve(grid, sizes, {o.resamples, o.seed, 0.95});

  auto embedder = make_embedder(in);
  const GridCorpus corpus(grid, *embedder);
  b.discovery = discovery_curve(corpus, sizes, theta);
  b.sweep = grid_threshold_sweep(corpus, sizes, thetas);
  b.dissociation =
      dissociation_report(b.icc->curve, b.discovery->curve, b.discovery->high_impact_share);

  const auto sessions = grid_sessions(grid);
  auto scorer = make_blind_scorer(in);
  std::vector<double> blind;
  blind.reserve(sessions.size());
  for (const auto& s : sessions) blind.push_back(blind_rescore(s, *scorer));
  b.expertise = expertise_analysis(sessions, blind, in.pool, in.catalog, *embedder, theta);
  b.personality = personality_emotion_validation(sessions, in.pool);

  if (o.second_label != o.data.run_label && has_label(in.records, o.second_label)) {
    const auto second = build_grid(in.records, in.pool, in.catalog, o.second_label);
    b.stability = stability_analysis(grid, second, sizes);
  }
  const auto ablation = ablation_sessions(in.records);
  if (!ablation.empty()) b.ablation = ablation_analysis(ablation, in.pool);

  if (!o.human.empty()) {
    require_file(o.human, "human ratings");
    const auto humans = load_human_csv_file(o.human, in.catalog);
    b.turing = turing_analysis(to_samples(humans), to_samples(sessions, in.catalog));
  }
  for (const auto* warnings : {b.expertise ? &b.expertise->warnings : nullptr,
                               b.personality ? &b.personality->warnings : nullptr,
                               b.stability ? &b.stability->warnings : nullptr}) {
    if (!warnings) continue;
    for (const auto& w : *warnings) err << "warning: " << w << "\n";
  }
  return b;
}

json bundle_json(const AnalysisBundle& b) {
  json doc{{"seed", b.seed}, {"run_label", b.run_label}};
  if (b.icc) doc["icc_curve"] = to_json(*b.icc);
  if (b.discovery) doc["discovery_curve"] = to_json(*b.discovery);
  if (b.dissociation) doc["dissociation"] = to_json(*b.dissociation);
  if (!b.sweep.empty()) doc["threshold_sweep"] = sweep_to_json(b.sweep);
  if (b.expertise) doc["expertise"] = to_json(*b.expertise);
  if (b.stability) doc["stability"] = to_json(*b.stability);
  if (b.ablation) doc["ablation"] = to_json(*b.ablation);
  if (b.turing) doc["turing"] = to_json(*b.turing);
  if (b.personality) doc["personality"] = to_json(*b.personality);
  return doc;
}

int cmd_analyze(const AnalysisOptions& o, std::string_view command, std::ostream& out,
                std::ostream& err) {
  const auto in = load_inputs(o.data, err);
  const auto b = analyze_store(o, in, err);
  const fs::path dir(o.out_dir);
  std::vector<std::string> artifacts;
  auto csv = [&](const std::string& name, auto&& fill) {
    write_text_file(dir / name, fill);
    artifacts.push_back(name);
  };
  csv("icc_curve.csv", [&](std::ostream& s) { write_icc_curve_csv(s, *b.icc); });
  csv("discovery_curve.csv", [&](std::ostream& s) { write_discovery_curve_csv(s, *b.discovery); });
  csv("threshold_sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, b.sweep); });
  if (b.ablation) csv("ablation.csv", [&](std::ostream& s) { write_ablation_csv(s, *b.ablation); });
  if (b.turing) csv("turing.csv", [&](std::ostream& s) { write_turing_csv(s, *b.turing); });
  write_json_file(dir / "decomposition.json", decomposition_json(b.icc->full.components, o.seed));
  artifacts.push_back("decomposition.json");
  write_json_file(dir / "analysis.json", bundle_json(b));
  artifacts.push_back("analysis.json");
  if (o.markdown) {
    csv("summary.md", [&](std::ostream& s) { s << markdown_summary(b); });
  }
  write_json_file(dir / "manifest.json", manifest(o.seed, command, o.data, in.records.size(), artifacts));

  const auto& vc = b.icc->full.components;
  out << "ICC(2," << vc.k << ") = " << format_number(b.icc->full.stat.value, 4) << " ["
      << format_number(b.icc->full.ci_low, 4) << ", " << format_number(b.icc->full.ci_high, 4)
      << "]\n";
  out << "variance shares: task " << format_number(vc.task_share(), 1) << "%, judge "
      << format_number(vc.judge_share(), 1) << "%, residual " << format_number(vc.residual_share(), 1)
      << "%\n";
  if (!b.discovery->curve.fits.empty()) {
    const auto& f = b.discovery->curve.fits.front();
    out << "discovery: U = " << format_number(f.a, 3) << " N^" << format_number(f.b, 3) << "\n";
  }
  out << "wrote " << artifacts.size() + 1 << " files to " << dir.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ dedup

struct DedupOptions {
  DataOptions data;
  std::string out_dir;
  std::vector<double> thetas;
};

int cmd_dedup(const DedupOptions& o, std::ostream& out, std::ostream& err) {
  const auto in = load_inputs(o.data, err);
  const auto grid = build_grid(in.records, in.pool, in.catalog, o.data.run_label);
  auto embedder = make_embedder(in);
  const GridCorpus corpus(grid, *embedder);
  const auto thetas =
      !o.thetas.empty() ? o.thetas : (in.config ? in.config->sweep : default_sweep_thetas());
  const auto sizes = sizes_for(in);
  const auto rows = grid_threshold_sweep(corpus, sizes, thetas);
  out << "theta  unique@" << sizes.back() << "  exponent  r_squared\n";
  for (const auto& r : rows) {
    out << format_number(r.theta, 2) << (r.recommended ? "*" : " ") << "  "
        << r.unique_counts.back() << "  " << format_number(r.fit.b, 4) << "  "
        << format_number(r.fit.r_squared, 4) << "\n";
  }
  if (!o.out_dir.empty()) {
    const fs::path dir(o.out_dir);
    write_text_file(dir / "threshold_sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, rows); });
    write_json_file(dir / "threshold_sweep.json", {{"seed", 0}, {"rows", sweep_to_json(rows)}});
  }
  return kExitOk;
}

// ----------------------------------------------------------------- ablate

int cmd_ablate(const DataOptions& d, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  const auto in = load_inputs(d, err);
  const auto sessions = ablation_sessions(in.records);
  if (sessions.empty()) throw ValidationError("store holds no ablation sessions");
  const auto report = ablation_analysis(sessions, in.pool);
  write_ablation_csv(out, report);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    write_text_file(dir / "ablation.csv", [&](std::ostream& s) { write_ablation_csv(s, report); });
    write_json_file(dir / "ablation.json", to_json(report));
  }
  return kExitOk;
}

// ----------------------------------------------------------------- turing

int cmd_turing(const DataOptions& d, const std::string& human, const std::string& out_dir,
               std::ostream& out, std::ostream& err) {
  require_file(human, "human ratings");
  const auto in = load_inputs(d, err);
  const auto humans = load_human_csv_file(human, in.catalog);
  std::vector<SessionRecord> agents;
  for (const auto& r : in.records) {
    if (r.run_label == d.run_label && r.condition == Condition::Structured && !r.failed) {
      agents.push_back(r);
    }
  }
  const auto report = turing_analysis(to_samples(humans), to_samples(agents, in.catalog));
  out << "mean |H-H| = " << format_number(report.mean_hh, 4)
      << ", mean |H-A| = " << format_number(report.mean_ha, 4) << "\n";
  out << "paired t(" << format_number(report.paired.df.value_or(0.0), 0)
      << ") = " << format_number(report.paired.value, 4)
      << ", p = " << format_number(report.paired.p_value, 4) << "\n";
  out << "cohen d = " << format_number(report.cohen_d.value, 4) << "\n";
  for (const auto& t : report.excluded_tasks) err << "warning: task " << t << " excluded\n";
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    write_text_file(dir / "turing.csv", [&](std::ostream& s) { write_turing_csv(s, report); });
    write_json_file(dir / "turing.json", to_json(report));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- dispatch

std::string usage(const CLI::App& app) {
  const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
  return sub->help();
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persona-conditioned agent judge panels: sessions, reliability and discovery"};
  app.name("agentpanel");
  app.require_subcommand(1);
  app.footer(kCsvFooter);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded synthetic session store");
  simulate->add_option("--seed", sim.seed, "root seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "output JSONL store (replaced)")->required();
  simulate->add_option("--pool", sim.pool, "persona pool JSON");
  simulate->add_option("--catalog", sim.catalog, "task catalog JSON");
  simulate->add_option("--label", sim.label, "run label")->capture_default_str();
  simulate->add_flag("--second-run", sim.second_run, "add a second run for stability analysis");
  simulate->add_option("--second-label", sim.second_label, "label of the second run")
      ->capture_default_str();
  simulate->add_flag("--ablation", sim.ablation, "add the four-condition ablation grid");
  simulate->add_option("--findings", sim.world.finding_count, "finding space size")
      ->capture_default_str();
  simulate->add_option("--zipf", sim.world.zipf_exponent, "Zipf exponent of detection weights")
      ->capture_default_str();
  simulate->add_option("--detection-scale", sim.world.detection_scale, "detection scale c")
      ->capture_default_str();
  simulate->add_option("--sigma-res", sim.world.sigma_res, "per-session path noise")
      ->capture_default_str();

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Execute sessions described by a run config");
  run_cmd->add_option("--config", run.config, "run config JSON")->required();
  run_cmd->add_option("--out", run.out, "JSONL store (appended, resumable)")->required();
  run_cmd->add_option("--workers", run.workers, "parallel sessions (default: config)");
  run_cmd->add_option("--tasks", run.tasks, "restrict to these task ids")->delimiter(',');
  run_cmd->add_option("--panel", run.panel, "judges per task (default: largest panel size)");

  AnalysisOptions an;
  auto* analyze = app.add_subcommand(
      "analyze", "ICC curve, discovery curve, dissociation, decomposition, expertise, stability");
  add_data_options(analyze, an.data);
  analyze->add_option("--out", an.out_dir, "output directory")->required();
  analyze->add_option("--seed", an.seed, "bootstrap seed")->capture_default_str();
  analyze->add_option("--bootstrap", an.resamples, "bootstrap resamples")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000000));
  analyze->add_option("--theta", an.theta, "dedup threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.5, 0.8));
  analyze->add_option("--second-label", an.second_label, "run label compared for stability")
      ->capture_default_str();

  AnalysisOptions rep;
  rep.markdown = true;
  auto* report = app.add_subcommand("report", "Markdown summary plus every CSV plot series");
  add_data_options(report, rep.data);
  report->add_option("--out", rep.out_dir, "output directory")->required();
  report->add_option("--seed", rep.seed, "bootstrap seed")->capture_default_str();
  report->add_option("--bootstrap", rep.resamples, "bootstrap resamples")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000000));
  report->add_option("--theta", rep.theta, "dedup threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.5, 0.8));
  report->add_option("--second-label", rep.second_label, "run label compared for stability")
      ->capture_default_str();
  report->add_option("--human", rep.human, "human ratings CSV for the human-vs-agent section");

  DedupOptions dd;
  auto* dedup = app.add_subcommand("dedup", "Threshold sweep of semantic deduplication");
  add_data_options(dedup, dd.data);
  dedup->add_option("--out", dd.out_dir, "output directory");
  dedup->add_option("--thetas", dd.thetas, "thresholds in [0.50, 0.80]")->delimiter(',');

  DataOptions ab;
  std::string ab_out;
  auto* ablate = app.add_subcommand("ablate", "Persona ablation table");
  add_data_options(ablate, ab);
  ablate->add_option("--out", ab_out, "output directory");

  DataOptions tu;
  std::string tu_human, tu_out;
  auto* turing = app.add_subcommand("turing", "Human-vs-agent score comparison");
  add_data_options(turing, tu);
  turing->add_option("--human", tu_human, "human ratings CSV")->required();
  turing->add_option("--out", tu_out, "output directory");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << usage(app);
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage(app);
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*analyze) return cmd_analyze(an, "analyze", out, err);
    if (*report) return cmd_analyze(rep, "report", out, err);
    if (*dedup) return cmd_dedup(dd, out, err);
    if (*ablate) return cmd_ablate(ab, ab_out, out, err);
    if (*turing) return cmd_turing(tu, tu_human, tu_out, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return dispatch(args, out, err);
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(std::move(args), std::cout, std::cerr);
}

}  // namespace agentpanel
