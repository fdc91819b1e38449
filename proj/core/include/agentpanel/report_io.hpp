// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "agentpanel/error.hpp"
#include "agentpanel/scaling_analysis.hpp"

namespace agentpanel {

nlohmann::json to_json(const StatResult& s);
nlohmann::json to_json(const VarianceComponents& vc);
nlohmann::json to_json(const ModelFit& fit);
nlohmann::json to_json(const IccResult& r);
nlohmann::json to_json(const IccCurveReport& r);
nlohmann::json to_json(const DiscoveryCurveReport& r);
nlohmann::json to_json(const DissociationReport& r);
nlohmann::json to_json(const ExpertiseReport& r);
nlohmann::json to_json(const StabilityReport& r);
nlohmann::json to_json(const AblationReport& r);
nlohmann::json to_json(const TuringReport& r);
nlohmann::json to_json(const PersonalityReport& r);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);

/// Decomposition document: components, shares and mean squares.
nlohmann::json decomposition_json(const VarianceComponents& vc, std::uint64_t seed);

// CSV plot series. Column sets are stable:
//   icc_curve:       size,icc,ci_low,ci_high,nested_icc,saturation
//   discovery_curve: size,unique_findings,band_low,band_high,raw_insights,
//                    high_impact_share,marginal_per_judge,saturation
//   threshold_sweep: theta,size,unique_findings,exponent,coefficient,r_squared,recommended
//   ablation:        condition,sessions,mean_score,score_sd,insights_per_session,expertise_d
//   turing:          task_id,domain,humans,agents,mean_hh,mean_ha,welch_t,welch_df,p_raw,p_bonferroni
void write_icc_curve_csv(std::ostream& out, const IccCurveReport& r);
void write_discovery_curve_csv(std::ostream& out, const DiscoveryCurveReport& r);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_ablation_csv(std::ostream& out, const AblationReport& r);
void write_turing_csv(std::ostream& out, const TuringReport& r);

/// Fixed-format number for CSV and Markdown (up to 6 decimals, trailing zeros kept).
std::string format_number(double v, int digits = 6);

/// Pretty JSON plus a trailing newline; parent directories are created.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
/// Opens `path` for writing (creating parents) and hands the stream to `fill`.
template <typename Fill>
void write_text_file(const std::filesystem::path& path, Fill&& fill) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  fill(out);
  if (!out.flush()) throw Error("failed to write " + path.string());
}

struct AnalysisBundle {
  std::uint64_t seed = 0;
  std::string run_label = "A";
  std::optional<IccCurveReport> icc;
  std::optional<DiscoveryCurveReport> discovery;
  std::optional<DissociationReport> dissociation;
  std::optional<ExpertiseReport> expertise;
  std::optional<StabilityReport> stability;
  std::optional<AblationReport> ablation;
  std::optional<TuringReport> turing;
  std::optional<PersonalityReport> personality;
  std::vector<SweepRow> sweep;
};

/// Markdown summary of whichever analyses are present.
std::string markdown_summary(const AnalysisBundle& bundle);

/// Published reference values compiled into the library; labeled reference
/// only and never compared against computed output.
std::string_view reference_fixtures_json();

}  // namespace agentpanel
