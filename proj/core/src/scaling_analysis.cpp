// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/scaling_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "agentpanel/error.hpp"
#include "agentpanel/rng.hpp"

namespace agentpanel {
namespace {

void require_sizes(std::span<const int> sizes, std::size_t max_size) {
  if (sizes.empty()) throw ValidationError("no panel sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || static_cast<std::size_t>(sizes[i]) > max_size) {
      throw RangeError("panel size " + std::to_string(sizes[i]) + " outside [1, " +
                       std::to_string(max_size) + "]");
    }
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ValidationError("panel sizes must be strictly increasing");
    }
  }
}

std::vector<double> saturation_of(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  const double top = values.empty() ? 0.0 : values.back();
  if (top == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] / top;
  return out;
}

double percentile(std::vector<double> draws, double q) {
  std::sort(draws.begin(), draws.end());
  const double pos = q * static_cast<double>(draws.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, draws.size() - 1);
  return draws[lo] + (pos - static_cast<double>(lo)) * (draws[hi] - draws[lo]);
}

double safe_projection(const VarianceComponents& vc, double n) {
  return vc.total() > 0.0 ? projected_icc(vc, n) : 0.0;
}

double mean_of(const std::vector<double>& v) { return v.empty() ? 0.0 : mean(v); }

std::optional<StatResult> try_cohen_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  try {
    return cohen_d(a, b);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::string trim_copy(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim_copy(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<int> canonical_sizes(std::size_t pool_size) {
  std::vector<int> out;
  for (const int n : kCanonicalSizes) {
    if (static_cast<std::size_t>(n) <= pool_size) out.push_back(n);
  }
  if (pool_size > 0 && (out.empty() || static_cast<std::size_t>(out.back()) != pool_size)) {
    out.push_back(static_cast<int>(pool_size));
  }
  return out;
}

SessionGrid build_grid(std::span<const SessionRecord> records, std::span<const PersonaSpec> pool,
                       std::span<const TaskSpec> catalog, std::string_view run_label,
                       Condition condition) {
  if (pool.size() < 2) throw ValidationError("grid needs at least 2 judges");
  if (catalog.size() < 2) throw ValidationError("grid needs at least 2 tasks");
  std::map<std::pair<std::string, int>, const SessionRecord*> index;
  for (const auto& r : records) {
    if (r.run_label != run_label || r.condition != condition) continue;
    if (!index.emplace(std::pair(r.task_id, r.persona_id), &r).second) {
      throw ValidationError("duplicate session " + r.session_id);
    }
  }

  SessionGrid g;
  for (const auto& p : pool) g.judge_ids.push_back(p.id);
  std::vector<std::string> problems;
  for (const auto& t : catalog) {
    g.task_ids.push_back(t.id);
    const auto ranking = rank_panel(pool, t);
    std::vector<int> order;
    for (const auto& e : ranking.entries) order.push_back(e.persona_id);
    g.ranking.push_back(order);
    std::vector<const SessionRecord*> row;
    for (const int id : order) {
      const auto it = index.find({t.id, id});
      if (it == index.end()) {
        problems.push_back(t.id + "/p" + std::to_string(id) + " missing");
        row.push_back(nullptr);
      } else if (it->second->failed) {
        problems.push_back(t.id + "/p" + std::to_string(id) + " failed");
        row.push_back(nullptr);
      } else {
        row.push_back(it->second);
      }
    }
    g.cell.push_back(std::move(row));
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "incomplete grid for run '" << run_label << "' (" << problems.size()
        << " of " << catalog.size() * pool.size() << " cells):";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << problems[i];
    if (shown < problems.size()) msg << " ... and " << problems.size() - shown << " more";
    throw ValidationError(msg.str());
  }

  g.by_judge = ScoreMatrix(g.tasks(), g.judges());
  g.by_rank = ScoreMatrix(g.tasks(), g.judges());
  std::map<int, std::size_t> column;
  for (std::size_t j = 0; j < g.judge_ids.size(); ++j) column[g.judge_ids[j]] = j;
  for (std::size_t t = 0; t < g.tasks(); ++t) {
    for (std::size_t r = 0; r < g.judges(); ++r) {
      const auto* s = g.cell[t][r];
      g.by_rank(t, r) = s->final_score;
      g.by_judge(t, column.at(s->persona_id)) = s->final_score;
    }
  }
  g.by_judge.row_labels = g.task_ids;
  g.by_rank.row_labels = g.task_ids;
  for (const int id : g.judge_ids) g.by_judge.col_labels.push_back("p" + std::to_string(id));
  for (std::size_t r = 0; r < g.judges(); ++r) g.by_rank.col_labels.push_back("rank" + std::to_string(r + 1));
  return g;
}

IccCurveReport icc_curve(const SessionGrid& grid, std::span<const int> sizes,
                         const BootstrapOptions& bootstrap) {
  require_sizes(sizes, grid.judges());
  IccCurveReport out;
  out.full = icc2k(grid.by_judge, bootstrap);
  const auto& vc = out.full.components;
  out.curve.metric = "icc";
  out.curve.sizes.assign(sizes.begin(), sizes.end());
  for (const int n : sizes) {
    out.curve.values.push_back(safe_projection(vc, n));
    if (n >= 2) {
      const auto sub = variance_components(grid.by_rank.first_cols(static_cast<std::size_t>(n)));
      out.nested_icc.push_back(sub.total() > 0.0 ? icc2k_value(sub) : 0.0);
    } else {
      out.nested_icc.push_back(std::nullopt);
    }
  }
  out.curve.saturation = saturation_of(out.curve.values);

  std::vector<std::vector<double>> draws(sizes.size());
  if (bootstrap.resamples > 0) {
    const std::size_t n = grid.tasks();
    std::vector<std::size_t> idx(n);
    for (int r = 0; r < bootstrap.resamples; ++r) {
      Rng rng(mix_seed(bootstrap.seed, static_cast<std::uint64_t>(r)));
      for (auto& i : idx) i = rng.index(n);
      const auto bvc = variance_components(grid.by_judge.select_rows(idx));
      for (std::size_t s = 0; s < sizes.size(); ++s) draws[s].push_back(safe_projection(bvc, sizes[s]));
    }
  }
  const double alpha = (1.0 - bootstrap.confidence) / 2.0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (draws[s].empty()) {
      out.ci_low.push_back(out.curve.values[s]);
      out.ci_high.push_back(out.curve.values[s]);
    } else {
      out.ci_low.push_back(percentile(draws[s], alpha));
      out.ci_high.push_back(percentile(draws[s], 1.0 - alpha));
    }
  }

  if (sizes.size() >= 3) {
    std::vector<ScalingPoint> points;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      points.push_back({static_cast<double>(sizes[s]), out.curve.values[s]});
    }
    out.curve.fits = fit_scaling_models(points);
  }
  return out;
}

GridCorpus::GridCorpus(const SessionGrid& grid, Embedder& embedder, bool include_strengths) {
  std::vector<CorpusItem> items;
  for (std::size_t t = 0; t < grid.tasks(); ++t) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const auto* s : grid.cell[t]) {
      const std::size_t begin = items.size();
      const SessionRecord* one[] = {s};
      auto got = pool_insights(std::span<const SessionRecord* const>(one), include_strengths);
      items.insert(items.end(), std::make_move_iterator(got.begin()),
                   std::make_move_iterator(got.end()));
      ranges.emplace_back(begin, items.size());
    }
    first_item_.push_back(std::move(ranges));
  }
  if (items.empty()) throw ValidationError("sessions contain no insights to deduplicate");
  corpus_.emplace(std::move(items), embedder);
}

std::vector<std::size_t> GridCorpus::panel_items(std::size_t n, std::optional<std::size_t> task) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < first_item_.size(); ++t) {
    if (task && *task != t) continue;
    const auto& ranges = first_item_[t];
    for (std::size_t r = 0; r < std::min(n, ranges.size()); ++r) {
      for (std::size_t i = ranges[r].first; i < ranges[r].second; ++i) out.push_back(i);
    }
  }
  return out;
}

std::vector<SweepRow> grid_threshold_sweep(const GridCorpus& corpus, std::span<const int> sizes,
                                           std::span<const double> thetas) {
  std::vector<std::vector<std::size_t>> items;
  for (const int n : sizes) items.push_back(corpus.panel_items(static_cast<std::size_t>(n)));
  return threshold_sweep(corpus.corpus(), items, sizes, thetas);
}

DiscoveryCurveReport discovery_curve(const GridCorpus& corpus, std::span<const int> sizes,
                                     double theta, std::span<const double> band_thetas,
                                     std::optional<std::size_t> task) {
  if (sizes.empty()) throw ValidationError("no panel sizes given");
  if (task && *task >= corpus.tasks()) throw RangeError("task index out of range");
  DiscoveryCurveReport out;
  out.theta = theta;
  out.curve.metric = "unique_findings";
  out.curve.sizes.assign(sizes.begin(), sizes.end());

  std::vector<std::vector<std::size_t>> items;
  std::vector<ScalingPoint> points;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw ValidationError("panel sizes must be strictly increasing");
    items.push_back(corpus.panel_items(static_cast<std::size_t>(sizes[i]), task));
    const auto set = corpus.corpus().findings(items.back(), theta);
    const double u = static_cast<double>(set.unique_count());
    out.curve.values.push_back(u);
    out.raw_insights.push_back(items.back().size());
    out.high_impact_share.push_back(set.high_impact_share());
    const double prev_u = i == 0 ? 0.0 : out.curve.values[i - 1];
    const int prev_n = i == 0 ? 0 : sizes[i - 1];
    out.marginal_per_judge.push_back((u - prev_u) / static_cast<double>(sizes[i] - prev_n));
    if (u > 0.0) points.push_back({static_cast<double>(sizes[i]), u});
  }
  out.curve.saturation = saturation_of(out.curve.values);
  if (points.size() >= 2) out.curve.fits.push_back(fit_power_law(points));

  std::vector<double> band(band_thetas.begin(), band_thetas.end());
  if (band.empty()) band = {0.60, 0.65, 0.70};
  out.band = threshold_sweep(corpus.corpus(), items, sizes, band);
  out.band_low = out.curve.values;
  out.band_high = out.curve.values;
  out.exponent_low = out.exponent_high = out.curve.fits.empty() ? 0.0 : out.curve.fits.front().b;
  for (const auto& row : out.band) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double u = static_cast<double>(row.unique_counts[i]);
      out.band_low[i] = std::min(out.band_low[i], u);
      out.band_high[i] = std::max(out.band_high[i], u);
    }
    out.exponent_low = std::min(out.exponent_low, row.fit.b);
    out.exponent_high = std::max(out.exponent_high, row.fit.b);
  }
  return out;
}

double DissociationReport::gap_at(int size) const {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == size) return gap[i];
  }
  throw ValidationError("panel size " + std::to_string(size) + " not in dissociation report");
}

DissociationReport dissociation_report(const ScalingCurve& icc, const ScalingCurve& discovery,
                                       std::span<const double> severity_share) {
  if (icc.sizes != discovery.sizes) {
    throw ValidationError("dissociation needs both curves over the same panel sizes");
  }
  if (!severity_share.empty() && severity_share.size() != icc.sizes.size()) {
    throw ValidationError("severity share must have one value per panel size");
  }
  DissociationReport out;
  out.sizes = icc.sizes;
  out.score_ratio = saturation_of(icc.values);
  out.discovery_ratio = saturation_of(discovery.values);
  for (std::size_t i = 0; i < out.sizes.size(); ++i) {
    out.gap.push_back(out.score_ratio[i] - out.discovery_ratio[i]);
  }
  out.severity_share.assign(severity_share.begin(), severity_share.end());
  return out;
}

ExpertiseReport expertise_analysis(std::span<const SessionRecord> sessions,
                                   std::span<const double> blind_scores,
                                   std::span<const PersonaSpec> pool,
                                   std::span<const TaskSpec> catalog, Embedder& embedder,
                                   double theta) {
  if (sessions.size() != blind_scores.size()) {
    throw ValidationError("expertise analysis needs one blind score per session");
  }
  ExpertiseReport out;
  std::map<Expertise, std::vector<double>> realtime, posthoc;
  std::map<Complexity, std::pair<std::vector<double>, std::vector<double>>> by_complexity;
  std::map<int, Expertise> level_of;
  for (const auto& p : pool) level_of[p.id] = p.expertise;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const auto it = level_of.find(s.persona_id);
    if (it == level_of.end()) {
      throw ValidationError("session " + s.session_id + " references unknown persona");
    }
    realtime[it->second].push_back(s.final_score);
    posthoc[it->second].push_back(blind_scores[i]);
    const auto& task = find_task(catalog, s.task_id);
    by_complexity[task.complexity].first.push_back(s.final_score);
    by_complexity[task.complexity].second.push_back(blind_scores[i]);
  }

  // Breadth on deduplicated clusters.
  std::map<Expertise, std::set<std::size_t>> clusters_of;
  std::vector<Finding> findings;
  auto items = pool_insights(sessions);
  if (!items.empty()) {
    const InsightCorpus corpus(items, embedder);
    findings = corpus.findings(theta).findings;
    for (std::size_t c = 0; c < findings.size(); ++c) {
      for (const auto m : findings[c].cluster.members) {
        clusters_of[level_of.at(corpus.items()[m].persona_id)].insert(c);
      }
    }
  }

  std::vector<std::vector<double>> groups;
  for (const Expertise e : kAllExpertise) {
    const auto& rt = realtime[e];
    if (rt.size() < 2) {
      out.warnings.push_back(std::string("expertise level ") + std::string(to_string(e)) +
                             " has fewer than 2 sessions; excluded");
      continue;
    }
    ExpertiseRow row;
    row.level = e;
    row.sessions = rt.size();
    row.realtime_mean = mean(rt);
    row.posthoc_mean = mean(posthoc[e]);
    const auto& cl = clusters_of[e];
    row.distinct_findings = cl.size();
    std::set<Category> cats;
    std::size_t high = 0;
    for (const auto c : cl) {
      cats.insert(findings[c].category);
      if (findings[c].severity == Severity::High) ++high;
    }
    row.distinct_categories = cats.size();
    row.high_impact_share = cl.empty() ? 0.0 : static_cast<double>(high) / static_cast<double>(cl.size());
    out.levels.push_back(row);
    groups.push_back(rt);
  }

  out.d_realtime = try_cohen_d(realtime[Expertise::Expert], realtime[Expertise::Novice]);
  out.d_posthoc = try_cohen_d(posthoc[Expertise::Expert], posthoc[Expertise::Novice]);
  if (groups.size() >= 2) out.omega_realtime = omega_squared(groups);
  const auto e_found = clusters_of[Expertise::Expert].size();
  const auto n_found = clusters_of[Expertise::Novice].size();
  if (n_found > 0) out.breadth_ratio = static_cast<double>(e_found) / static_cast<double>(n_found);

  for (const auto& [cx, scores] : by_complexity) {
    ComplexityGap g;
    g.complexity = cx;
    g.realtime_mean = mean_of(scores.first);
    g.posthoc_mean = mean_of(scores.second);
    g.gap = g.posthoc_mean - g.realtime_mean;
    out.gaps.push_back(g);
  }
  return out;
}

StabilityReport stability_analysis(const SessionGrid& a, const SessionGrid& b,
                                   std::span<const int> sizes) {
  if (a.task_ids != b.task_ids || a.judge_ids != b.judge_ids || a.ranking != b.ranking) {
    throw ValidationError("stability analysis needs both runs over the same task x judge grid");
  }
  require_sizes(sizes, a.judges());
  StabilityReport out;
  out.task_ids = a.task_ids;
  std::vector<double> rs;
  for (std::size_t t = 0; t < a.tasks(); ++t) {
    const auto x = a.by_judge.row(t);
    const auto y = b.by_judge.row(t);
    if (std::equal(x.begin(), x.end(), y.begin())) {
      out.task_r.push_back(1.0);
      rs.push_back(1.0);
      continue;
    }
    try {
      const double r = correlation(x, y).value;
      out.task_r.push_back(r);
      rs.push_back(r);
    } catch (const ValidationError&) {
      out.task_r.push_back(std::nullopt);
      out.warnings.push_back("task " + a.task_ids[t] + ": zero score variance in one run");
    }
  }
  if (rs.empty()) throw ValidationError("no task has score variance in both runs");
  out.mean_r = mean(rs);

  out.sizes.assign(sizes.begin(), sizes.end());
  for (const int n : sizes) {
    double total = 0.0;
    for (std::size_t t = 0; t < a.tasks(); ++t) {
      double ma = 0.0, mb = 0.0;
      for (int r = 0; r < n; ++r) {
        ma += a.by_rank(t, static_cast<std::size_t>(r));
        mb += b.by_rank(t, static_cast<std::size_t>(r));
      }
      total += std::abs(ma - mb) / n;
    }
    out.delta.push_back(total / static_cast<double>(a.tasks()));
  }
  return out;
}

std::vector<SessionRecord> ablation_sessions(std::span<const SessionRecord> records) {
  const std::string label(kAblationLabel);
  std::vector<SessionRecord> out;
  for (const auto& r : records) {
    if (r.run_label == label || r.run_label.rfind(label + "-r", 0) == 0) out.push_back(r);
  }
  return out;
}

AblationReport ablation_analysis(std::span<const SessionRecord> sessions,
                                 std::span<const PersonaSpec> pool) {
  AblationReport out;
  std::map<int, Expertise> level_of;
  for (const auto& p : pool) level_of[p.id] = p.expertise;
  for (const Condition c : kAllConditions) {
    std::vector<double> scores, expert, novice;
    std::size_t insights = 0;
    for (const auto& s : sessions) {
      if (s.condition != c) continue;
      scores.push_back(s.final_score);
      for (const auto& d : s.diary) insights += d.insights.size();
      const auto it = level_of.find(s.persona_id);
      if (it != level_of.end()) {
        if (it->second == Expertise::Expert) expert.push_back(s.final_score);
        if (it->second == Expertise::Novice) novice.push_back(s.final_score);
      }
    }
    if (scores.empty()) {
      out.warnings.push_back("no sessions for condition " + std::string(to_string(c)));
      continue;
    }
    AblationRow row;
    row.condition = c;
    row.sessions = scores.size();
    row.mean_score = mean(scores);
    row.score_sd = scores.size() >= 2 ? stddev(scores) : 0.0;
    row.insights_per_session = static_cast<double>(insights) / static_cast<double>(scores.size());
    row.expertise_d = try_cohen_d(expert, novice);
    out.rows.push_back(row);
  }
  return out;
}

std::vector<HumanSessionRecord> load_human_csv(std::istream& in, std::span<const TaskSpec> catalog) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("human CSV is empty");
  const auto header = split_csv(line);
  const std::vector<std::string> required = {"participant_id", "task_id", "domain", "score", "turns"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : required) {
    if (!col.count(name)) throw ValidationError("human CSV header is missing column '" + name + "'");
  }
  const bool has_expertise = col.count("expertise") > 0;

  std::vector<HumanSessionRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = "human CSV line " + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
    }
    HumanSessionRecord h;
    h.participant_id = cells[col["participant_id"]];
    if (h.participant_id.empty()) throw ValidationError(where + ": empty participant_id");
    h.task_id = cells[col["task_id"]];
    const TaskSpec* task = nullptr;
    for (const auto& t : catalog) {
      if (t.id == h.task_id) task = &t;
    }
    if (!task) throw ValidationError(where + ": unknown task '" + h.task_id + "'");
    try {
      h.domain = parse_domain(cells[col["domain"]]);
    } catch (const Error& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (h.domain != task->domain) {
      throw ValidationError(where + ": domain does not match task " + h.task_id);
    }
    try {
      std::size_t used = 0;
      h.score = std::stod(cells[col["score"]], &used);
      if (used != cells[col["score"]].size()) throw std::invalid_argument("trailing");
      h.turns = std::stoi(cells[col["turns"]], &used);
      if (used != cells[col["turns"]].size()) throw std::invalid_argument("trailing");
      if (has_expertise && !cells[col["expertise"]].empty()) {
        h.expertise = std::stod(cells[col["expertise"]]);
      }
    } catch (const std::exception&) {
      throw ValidationError(where + ": malformed number");
    }
    if (!(h.score >= 0.0 && h.score <= 1.0)) {
      throw RangeError(where + ": score " + cells[col["score"]] + " outside [0,1]");
    }
    if (h.turns < 0) throw RangeError(where + ": negative turn count");
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<HumanSessionRecord> load_human_csv_file(const std::filesystem::path& path,
                                                    std::span<const TaskSpec> catalog) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open human CSV " + path.string());
  return load_human_csv(in, catalog);
}

std::vector<ScoreSample> to_samples(std::span<const HumanSessionRecord> humans) {
  std::vector<ScoreSample> out;
  for (const auto& h : humans) out.push_back({h.participant_id, h.task_id, h.domain, h.score});
  return out;
}

std::vector<ScoreSample> to_samples(std::span<const SessionRecord> sessions,
                                    std::span<const TaskSpec> catalog) {
  std::vector<ScoreSample> out;
  for (const auto& s : sessions) {
    if (s.failed) continue;
    out.push_back({s.session_id, s.task_id, find_task(catalog, s.task_id).domain, s.final_score});
  }
  return out;
}

TuringReport turing_analysis(std::span<const ScoreSample> humans,
                             std::span<const ScoreSample> agents) {
  std::map<std::string, std::vector<const ScoreSample*>> h_by_task, a_by_task;
  for (const auto& h : humans) h_by_task[h.task_id].push_back(&h);
  for (const auto& a : agents) a_by_task[a.task_id].push_back(&a);
  std::set<std::string> tasks;
  for (const auto& [t, v] : h_by_task) tasks.insert(t);
  for (const auto& [t, v] : a_by_task) tasks.insert(t);

  TuringReport out;
  std::vector<double> diffs;
  for (const auto& t : tasks) {
    const auto& hs = h_by_task[t];
    const auto& as = a_by_task[t];
    if (hs.size() < 2 || as.empty()) {
      out.excluded_tasks.push_back(t);
      continue;
    }
    TuringTaskRow row;
    row.task_id = t;
    row.domain = hs.front()->domain;
    row.humans = hs.size();
    row.agents = as.size();
    double hh = 0.0;
    std::size_t hh_pairs = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      for (std::size_t j = i + 1; j < hs.size(); ++j) {
        hh += std::abs(hs[i]->score - hs[j]->score);
        ++hh_pairs;
      }
    }
    double ha = 0.0;
    std::size_t ha_pairs = 0;
    for (const auto* h : hs) {
      for (const auto* a : as) {
        if (h->id == a->id) continue;
        ha += std::abs(h->score - a->score);
        ++ha_pairs;
      }
    }
    if (ha_pairs == 0) {
      out.excluded_tasks.push_back(t);
      continue;
    }
    row.mean_hh = hh / static_cast<double>(hh_pairs);
    row.mean_ha = ha / static_cast<double>(ha_pairs);
    if (as.size() >= 2) {
      std::vector<double> hv, av;
      for (const auto* h : hs) hv.push_back(h->score);
      for (const auto* a : as) av.push_back(a->score);
      row.welch = welch_t(hv, av);
    }
    diffs.push_back(std::round((row.mean_ha - row.mean_hh) * 1e12) / 1e12);
    out.rows.push_back(row);
  }
  if (out.rows.size() < 2) throw ValidationError("Turing analysis needs at least 2 usable tasks");
  for (auto& row : out.rows) {
    if (row.welch) row.p_bonferroni = bonferroni(row.welch->p_value, out.rows.size());
  }
  std::vector<double> hh, ha;
  for (const auto& row : out.rows) {
    hh.push_back(row.mean_hh);
    ha.push_back(row.mean_ha);
  }
  out.mean_hh = mean(hh);
  out.mean_ha = mean(ha);
  out.paired = paired_t(diffs);

  std::vector<double> all_h, all_a;
  for (const auto& h : humans) all_h.push_back(h.score);
  for (const auto& a : agents) all_a.push_back(a.score);
  out.cohen_d = cohen_d(all_h, all_a);
  for (const Domain d : kAllDomains) {
    std::vector<double> hv, av;
    for (const auto& h : humans) {
      if (h.domain == d) hv.push_back(h.score);
    }
    for (const auto& a : agents) {
      if (a.domain == d) av.push_back(a.score);
    }
    if (!hv.empty() && !av.empty()) out.ks.emplace_back(d, ks_two_sample(hv, av));
  }
  return out;
}

PersonalityReport personality_emotion_validation(std::span<const SessionRecord> sessions,
                                                 std::span<const PersonaSpec> pool) {
  struct Acc {
    std::vector<double> trust_gain, peak_frustration, engagement;
  };
  std::map<int, Acc> by_agent;
  std::vector<double> peaks, goals;
  for (const auto& s : sessions) {
    const auto summary = s.trajectory.summary();
    auto& acc = by_agent[s.persona_id];
    acc.trust_gain.push_back(summary.trust_gain);
    acc.peak_frustration.push_back(summary.peak_frustration);
    acc.engagement.push_back(summary.mean_engagement);
    peaks.push_back(summary.peak_frustration);
    goals.push_back(s.goal_achieved ? 1.0 : 0.0);
  }
  if (by_agent.size() < 3) {
    throw ValidationError("personality validation needs at least 3 agents, got " +
                          std::to_string(by_agent.size()));
  }
  std::vector<double> a_trait, n_trait, e_trait, trust, frus, eng;
  for (const auto& [id, acc] : by_agent) {
    const auto& p = find_persona(pool, id).profile;
    a_trait.push_back(p.agreeableness);
    n_trait.push_back(p.neuroticism);
    e_trait.push_back(p.extraversion);
    trust.push_back(mean(acc.trust_gain));
    frus.push_back(mean(acc.peak_frustration));
    eng.push_back(mean(acc.engagement));
  }
  PersonalityReport out;
  out.agents = by_agent.size();
  auto row = [&](std::string name, const std::vector<double>& trait, const std::vector<double>& agg) {
    TraitCorrelation tc;
    tc.hypothesis = std::move(name);
    tc.result = correlation(trait, agg);
    tc.confirmed = tc.result.value > 0.0 && tc.result.p_value < 0.05;
    out.rows.push_back(std::move(tc));
  };
  row("trust_gain ~ agreeableness", a_trait, trust);
  row("peak_frustration ~ neuroticism", n_trait, frus);
  row("mean_engagement ~ extraversion", e_trait, eng);
  try {
    out.frustration_goal = correlation(peaks, goals, CorrelationMethod::Spearman);
  } catch (const ValidationError& e) {
    out.warnings.push_back(std::string("peak frustration vs goal: ") + e.what());
  }
  return out;
}

}  // namespace agentpanel
