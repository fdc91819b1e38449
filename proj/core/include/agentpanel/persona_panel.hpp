// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agentpanel {

enum class Expertise { Expert, Intermediate, Novice };

enum class Region { US, EU, Asia, Latam, Africa, MiddleEast, SouthAsia, Oceania, Canada };

enum class Domain { SaasIt, Developer, ECommerce, Education, Healthcare };

enum class Complexity { Simple, Medium, Complex };

inline constexpr Domain kAllDomains[] = {Domain::SaasIt, Domain::Developer, Domain::ECommerce,
                                         Domain::Education, Domain::Healthcare};
inline constexpr Expertise kAllExpertise[] = {Expertise::Expert, Expertise::Intermediate,
                                              Expertise::Novice};

std::string_view to_string(Expertise e);
std::string_view to_string(Region r);
std::string_view to_string(Domain d);
std::string_view to_string(Complexity c);

// The parse_* functions throw ValidationError on unknown names.
Expertise parse_expertise(std::string_view name);
Region parse_region(std::string_view name);
Domain parse_domain(std::string_view name);
Complexity parse_complexity(std::string_view name);

/// Big Five personality profile; every trait is a fraction in [0,1].
struct BigFiveProfile {
  double openness = 0.5;
  double conscientiousness = 0.5;
  double extraversion = 0.5;
  double agreeableness = 0.5;
  double neuroticism = 0.5;

  /// Throws RangeError naming the first trait outside [0,1].
  void validate() const;

  friend bool operator==(const BigFiveProfile&, const BigFiveProfile&) = default;
};

struct PersonaSpec {
  int id = 0;
  std::string background;
  int age = 0;
  Region region = Region::US;
  Expertise expertise = Expertise::Intermediate;
  BigFiveProfile profile;
  std::set<Domain> domain_tags;
};

struct TaskSpec {
  std::string id;
  Domain domain = Domain::SaasIt;
  Complexity complexity = Complexity::Simple;
  int max_turns = 4;
  std::string goal;
  /// Weight placed on conscientiousness when scoring fitness (lambda).
  double complexity_weight = 0.2;
};

struct RankedPersona {
  int persona_id = 0;
  double fitness = 0.0;
};

/// Full pool ordered by non-increasing fitness, ties by ascending id.
struct PanelRanking {
  std::string task_id;
  std::vector<RankedPersona> entries;
};

struct FitnessWeights {
  double domain_match = 0.5;
  double expertise = 0.3;
  double personality = 0.2;
};

int default_max_turns(Complexity c);
double default_complexity_weight(Complexity c);
/// 1.0 / 0.6 / 0.3 for Expert / Intermediate / Novice.
double expertise_weight(Expertise e);

/// Parses a persona pool document. Errors name the 1-based row and field.
std::vector<PersonaSpec> load_pool(std::string_view json_text);
std::vector<PersonaSpec> load_pool_file(const std::filesystem::path& path);

/// Parses a task catalog document.
std::vector<TaskSpec> load_catalog(std::string_view json_text);
std::vector<TaskSpec> load_catalog_file(const std::filesystem::path& path);

/// The 32-judge pool and 15-task catalog compiled into the library.
const std::vector<PersonaSpec>& shipped_pool();
const std::vector<TaskSpec>& shipped_catalog();
std::string_view shipped_pool_json();
std::string_view shipped_catalog_json();

const PersonaSpec& find_persona(std::span<const PersonaSpec> pool, int id);
const TaskSpec& find_task(std::span<const TaskSpec> catalog, std::string_view id);

/// Composite task fitness in [0,1]:
///   w_d * domain_match + w_e * expertise_weight
///     + w_p * (lambda * C + (1 - lambda) * 0.5)
double fitness_score(const PersonaSpec& persona, const TaskSpec& task,
                     const FitnessWeights& weights = {});

PanelRanking rank_panel(std::span<const PersonaSpec> pool, const TaskSpec& task,
                        const FitnessWeights& weights = {});

/// First n ids of the ranking; smaller panels are prefixes of larger ones.
std::vector<int> select_panel(const PanelRanking& ranking, std::size_t n);

}  // namespace agentpanel
