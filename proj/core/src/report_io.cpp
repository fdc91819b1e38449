// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace agentpanel {

namespace detail {
extern const std::string_view kShippedReferenceJson;
}

namespace {

using nlohmann::json;

json opt_stat(const std::optional<StatResult>& s) { return s ? to_json(*s) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

std::string format_number(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s == "-0." + std::string(static_cast<std::size_t>(digits), '0')) s.erase(0, 1);
  return s;
}

json to_json(const StatResult& s) {
  json doc{{"name", s.name}, {"value", finite_or_null(s.value)}, {"p_value", s.p_value}};
  doc["df"] = s.df ? finite_or_null(*s.df) : json(nullptr);
  return doc;
}

json to_json(const VarianceComponents& vc) {
  return {{"task", vc.task},
          {"judge", vc.judge},
          {"residual", vc.residual},
          {"raw_task", vc.raw_task},
          {"raw_judge", vc.raw_judge},
          {"msr", vc.msr},
          {"msc", vc.msc},
          {"mse", vc.mse},
          {"df_rows", vc.df_rows},
          {"df_cols", vc.df_cols},
          {"df_error", vc.df_error},
          {"n", vc.n},
          {"k", vc.k},
          {"shares_percent",
           {{"task", vc.task_share()}, {"judge", vc.judge_share()}, {"residual", vc.residual_share()}}}};
}

json to_json(const ModelFit& f) {
  return {{"family", to_string(f.family)},
          {"a", finite_or_null(f.a)},
          {"b", finite_or_null(f.b)},
          {"parameters", f.parameters},
          {"rss", finite_or_null(f.rss)},
          {"r_squared", finite_or_null(f.r_squared)},
          {"aic", finite_or_null(f.aic)}};
}

json to_json(const IccResult& r) {
  return {{"icc", r.stat.value},
          {"ci", {r.ci_low, r.ci_high}},
          {"band", to_string(r.band)},
          {"degenerate", r.degenerate},
          {"f_test_p", r.stat.p_value},
          {"components", to_json(r.components)}};
}

json to_json(const IccCurveReport& r) {
  json points = json::array();
  for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
    points.push_back({{"size", r.curve.sizes[i]},
                      {"icc", r.curve.values[i]},
                      {"ci", {r.ci_low[i], r.ci_high[i]}},
                      {"band", to_string(interpret_icc(r.curve.values[i]))},
                      {"nested_icc", r.nested_icc[i] ? json(*r.nested_icc[i]) : json(nullptr)},
                      {"saturation", r.curve.saturation[i]}});
  }
  json fits = json::array();
  for (const auto& f : r.curve.fits) fits.push_back(to_json(f));
  return {{"points", points}, {"fits", fits}, {"full", to_json(r.full)}};
}

json sweep_to_json(std::span<const SweepRow> rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back({{"theta", row.theta},
                   {"sizes", row.sizes},
                   {"unique_counts", row.unique_counts},
                   {"fit", to_json(row.fit)},
                   {"recommended", row.recommended}});
  }
  return out;
}

json to_json(const DiscoveryCurveReport& r) {
  json points = json::array();
  for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
    points.push_back({{"size", r.curve.sizes[i]},
                      {"unique_findings", r.curve.values[i]},
                      {"band", {r.band_low[i], r.band_high[i]}},
                      {"raw_insights", r.raw_insights[i]},
                      {"high_impact_share", r.high_impact_share[i]},
                      {"marginal_per_judge", r.marginal_per_judge[i]},
                      {"saturation", r.curve.saturation[i]}});
  }
  return {{"theta", r.theta},
          {"points", points},
          {"power_law", r.curve.fits.empty() ? json(nullptr) : to_json(r.curve.fits.front())},
          {"exponent_band", {r.exponent_low, r.exponent_high}},
          {"band_rows", sweep_to_json(r.band)}};
}

json to_json(const DissociationReport& r) {
  json doc{{"sizes", r.sizes},
           {"score_ratio", r.score_ratio},
           {"discovery_ratio", r.discovery_ratio},
           {"gap", r.gap},
           {"severity_share", r.severity_share}};
  for (std::size_t i = 0; i < r.sizes.size(); ++i) {
    if (r.sizes[i] == 8) doc["gap_at_8"] = r.gap[i];
  }
  return doc;
}

json to_json(const ExpertiseReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"level", to_string(l.level)},
                      {"sessions", l.sessions},
                      {"realtime_mean", l.realtime_mean},
                      {"posthoc_mean", l.posthoc_mean},
                      {"distinct_findings", l.distinct_findings},
                      {"distinct_categories", l.distinct_categories},
                      {"high_impact_share", l.high_impact_share}});
  }
  json gaps = json::array();
  for (const auto& g : r.gaps) {
    gaps.push_back({{"complexity", to_string(g.complexity)},
                    {"realtime_mean", g.realtime_mean},
                    {"posthoc_mean", g.posthoc_mean},
                    {"gap", g.gap}});
  }
  return {{"levels", levels},
          {"d_realtime", opt_stat(r.d_realtime)},
          {"d_posthoc", opt_stat(r.d_posthoc)},
          {"omega_squared_realtime", opt_stat(r.omega_realtime)},
          {"breadth_ratio", r.breadth_ratio ? json(*r.breadth_ratio) : json(nullptr)},
          {"complexity_gaps", gaps},
          {"warnings", r.warnings}};
}

json to_json(const StabilityReport& r) {
  json tasks = json::array();
  for (std::size_t i = 0; i < r.task_ids.size(); ++i) {
    tasks.push_back({{"task_id", r.task_ids[i]},
                     {"r", r.task_r[i] ? json(*r.task_r[i]) : json(nullptr)}});
  }
  return {{"mean_r", r.mean_r},
          {"tasks", tasks},
          {"sizes", r.sizes},
          {"delta", r.delta},
          {"warnings", r.warnings}};
}

json to_json(const AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"condition", to_string(row.condition)},
                    {"sessions", row.sessions},
                    {"mean_score", row.mean_score},
                    {"score_sd", row.score_sd},
                    {"insights_per_session", row.insights_per_session},
                    {"expertise_d", opt_stat(row.expertise_d)}});
  }
  return {{"rows", rows}, {"warnings", r.warnings}};
}

json to_json(const TuringReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"task_id", row.task_id},
                    {"domain", to_string(row.domain)},
                    {"humans", row.humans},
                    {"agents", row.agents},
                    {"mean_hh", row.mean_hh},
                    {"mean_ha", row.mean_ha},
                    {"welch", opt_stat(row.welch)},
                    {"p_bonferroni", row.p_bonferroni}});
  }
  json ks = json::array();
  for (const auto& [d, s] : r.ks) ks.push_back({{"domain", to_string(d)}, {"ks", to_json(s)}});
  return {{"rows", rows},
          {"excluded_tasks", r.excluded_tasks},
          {"mean_hh", r.mean_hh},
          {"mean_ha", r.mean_ha},
          {"paired_t", to_json(r.paired)},
          {"cohen_d", to_json(r.cohen_d)},
          {"ks_by_domain", ks}};
}

json to_json(const PersonalityReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"hypothesis", row.hypothesis},
                    {"pearson", to_json(row.result)},
                    {"confirmed", row.confirmed}});
  }
  return {{"agents", r.agents},
          {"rows", rows},
          {"peak_frustration_vs_goal", opt_stat(r.frustration_goal)},
          {"warnings", r.warnings}};
}

json decomposition_json(const VarianceComponents& vc, std::uint64_t seed) {
  return {{"seed", seed}, {"components", to_json(vc)}};
}

void write_icc_curve_csv(std::ostream& out, const IccCurveReport& r) {
  out << "size,icc,ci_low,ci_high,nested_icc,saturation\n";
  for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
    out << r.curve.sizes[i] << ',' << format_number(r.curve.values[i]) << ','
        << format_number(r.ci_low[i]) << ',' << format_number(r.ci_high[i]) << ','
        << opt_number(r.nested_icc[i]) << ',' << format_number(r.curve.saturation[i]) << '\n';
  }
}

void write_discovery_curve_csv(std::ostream& out, const DiscoveryCurveReport& r) {
  out << "size,unique_findings,band_low,band_high,raw_insights,high_impact_share,"
         "marginal_per_judge,saturation\n";
  for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
    out << r.curve.sizes[i] << ',' << static_cast<long long>(r.curve.values[i]) << ','
        << static_cast<long long>(r.band_low[i]) << ',' << static_cast<long long>(r.band_high[i])
        << ',' << r.raw_insights[i] << ',' << format_number(r.high_impact_share[i]) << ','
        << format_number(r.marginal_per_judge[i]) << ',' << format_number(r.curve.saturation[i])
        << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "theta,size,unique_findings,exponent,coefficient,r_squared,recommended\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.sizes.size(); ++i) {
      out << format_number(row.theta, 2) << ',' << row.sizes[i] << ',' << row.unique_counts[i]
          << ',' << format_number(row.fit.b) << ',' << format_number(row.fit.a) << ','
          << format_number(row.fit.r_squared) << ',' << (row.recommended ? 1 : 0) << '\n';
    }
  }
}

void write_ablation_csv(std::ostream& out, const AblationReport& r) {
  out << "condition,sessions,mean_score,score_sd,insights_per_session,expertise_d\n";
  for (const auto& row : r.rows) {
    out << to_string(row.condition) << ',' << row.sessions << ',' << format_number(row.mean_score)
        << ',' << format_number(row.score_sd) << ',' << format_number(row.insights_per_session)
        << ',' << (row.expertise_d ? format_number(row.expertise_d->value) : "") << '\n';
  }
}

void write_turing_csv(std::ostream& out, const TuringReport& r) {
  out << "task_id,domain,humans,agents,mean_hh,mean_ha,welch_t,welch_df,p_raw,p_bonferroni\n";
  for (const auto& row : r.rows) {
    out << row.task_id << ',' << to_string(row.domain) << ',' << row.humans << ',' << row.agents
        << ',' << format_number(row.mean_hh) << ',' << format_number(row.mean_ha) << ',';
    if (row.welch) {
      out << format_number(row.welch->value) << ',' << format_number(row.welch->df.value_or(0.0))
          << ',' << format_number(row.welch->p_value);
    } else {
      out << ",,";
    }
    out << ',' << format_number(row.p_bonferroni) << '\n';
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

std::string markdown_summary(const AnalysisBundle& b) {
  std::ostringstream md;
  md << "# Panel evaluation summary\n\n";
  md << "Run `" << b.run_label << "`, root seed " << b.seed << ".\n\n";

  if (b.icc) {
    const auto& r = *b.icc;
    md << "## Scoring reliability\n\n";
    md << "| N | ICC | 95% CI | band | nested ICC(2,N) |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
      md << "| " << r.curve.sizes[i] << " | " << format_number(r.curve.values[i], 3) << " | ["
         << format_number(r.ci_low[i], 2) << ", " << format_number(r.ci_high[i], 2) << "] | "
         << to_string(interpret_icc(r.curve.values[i])) << " | "
         << (r.nested_icc[i] ? format_number(*r.nested_icc[i], 3) : "-") << " |\n";
    }
    if (!r.curve.fits.empty()) {
      const auto& best = r.curve.fits.front();
      md << "\nBest fit by AIC: " << to_string(best.family) << " (R^2 "
         << format_number(best.r_squared, 3) << ").\n";
    }
    const auto& vc = r.full.components;
    md << "\nVariance shares: task " << format_number(vc.task_share(), 1) << "%, judge "
       << format_number(vc.judge_share(), 1) << "%, residual "
       << format_number(vc.residual_share(), 1) << "%.\n\n";
  }
  if (b.discovery) {
    const auto& r = *b.discovery;
    md << "## Issue discovery (theta " << format_number(r.theta, 2) << ")\n\n";
    md << "| N | unique | band | raw insights | high impact |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < r.curve.sizes.size(); ++i) {
      md << "| " << r.curve.sizes[i] << " | " << r.curve.values[i] << " | " << r.band_low[i]
         << "-" << r.band_high[i] << " | " << r.raw_insights[i] << " | "
         << format_number(r.high_impact_share[i], 2) << " |\n";
    }
    if (!r.curve.fits.empty()) {
      const auto& f = r.curve.fits.front();
      md << "\nPower law: U = " << format_number(f.a, 2) << " N^" << format_number(f.b, 3)
         << " (R^2 " << format_number(f.r_squared, 3) << "), exponent across band "
         << format_number(r.exponent_low, 3) << "-" << format_number(r.exponent_high, 3) << ".\n\n";
    }
  }
  if (b.dissociation) {
    const auto& r = *b.dissociation;
    md << "## Score-coverage dissociation\n\n| N | score ratio | discovery ratio | gap |\n|---|---|---|---|\n";
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
      md << "| " << r.sizes[i] << " | " << format_number(r.score_ratio[i], 3) << " | "
         << format_number(r.discovery_ratio[i], 3) << " | " << format_number(r.gap[i], 3) << " |\n";
    }
    md << "\n";
  }
  if (!b.sweep.empty()) {
    md << "## Threshold sweep\n\n| theta | exponent | R^2 |\n|---|---|---|\n";
    for (const auto& row : b.sweep) {
      md << "| " << format_number(row.theta, 2) << (row.recommended ? "*" : "") << " | "
         << format_number(row.fit.b, 3) << " | " << format_number(row.fit.r_squared, 3) << " |\n";
    }
    md << "\n";
  }
  if (b.stability) {
    const auto& r = *b.stability;
    md << "## Stability\n\nMean per-task judge correlation between runs: "
       << format_number(r.mean_r, 3) << ". Panel mean difference at N = " << r.sizes.back()
       << ": " << format_number(r.delta.back(), 4) << ".\n\n";
  }
  if (b.expertise) {
    const auto& r = *b.expertise;
    md << "## Expertise\n\n| level | sessions | real-time | post-hoc | findings | categories |\n"
          "|---|---|---|---|---|---|\n";
    for (const auto& l : r.levels) {
      md << "| " << to_string(l.level) << " | " << l.sessions << " | "
         << format_number(l.realtime_mean, 3) << " | " << format_number(l.posthoc_mean, 3)
         << " | " << l.distinct_findings << " | " << l.distinct_categories << " |\n";
    }
    if (r.d_realtime) md << "\nExpert minus novice d (real-time): " << format_number(r.d_realtime->value, 2) << ".\n";
    md << "\n";
  }
  if (b.ablation) {
    md << "## Ablation\n\n| condition | sessions | score SD | insights/session |\n|---|---|---|---|\n";
    for (const auto& row : b.ablation->rows) {
      md << "| " << to_string(row.condition) << " | " << row.sessions << " | "
         << format_number(row.score_sd, 3) << " | " << format_number(row.insights_per_session, 1)
         << " |\n";
    }
    md << "\n";
  }
  if (b.turing) {
    const auto& r = *b.turing;
    md << "## Human vs agent\n\nMean |H-H| " << format_number(r.mean_hh, 3) << ", mean |H-A| "
       << format_number(r.mean_ha, 3) << "; paired t(" << format_number(r.paired.df.value_or(0), 0)
       << ") = " << format_number(r.paired.value, 3) << ", p = " << format_number(r.paired.p_value, 3)
       << ".\n\n";
  }
  if (b.personality) {
    md << "## Personality and emotion\n\n| hypothesis | r | p | confirmed |\n|---|---|---|---|\n";
    for (const auto& row : b.personality->rows) {
      md << "| " << row.hypothesis << " | " << format_number(row.result.value, 3) << " | "
         << format_number(row.result.p_value, 3) << " | " << (row.confirmed ? "yes" : "no") << " |\n";
    }
    md << "\n";
  }
  return md.str();
}

std::string_view reference_fixtures_json() { return detail::kShippedReferenceJson; }

}  // namespace agentpanel
