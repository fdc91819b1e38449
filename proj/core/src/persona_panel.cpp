// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/persona_panel.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "agentpanel/error.hpp"

namespace agentpanel {
namespace detail {
extern const std::string_view kShippedPoolJson;
extern const std::string_view kShippedCatalogJson;
}  // namespace detail

namespace {

using json = nlohmann::json;

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<Expertise, 3> kExpertiseNames{{
    {Expertise::Expert, "Expert"},
    {Expertise::Intermediate, "Intermediate"},
    {Expertise::Novice, "Novice"},
}};

constexpr NameTable<Region, 9> kRegionNames{{
    {Region::US, "US"},
    {Region::EU, "EU"},
    {Region::Asia, "Asia"},
    {Region::Latam, "Latam"},
    {Region::Africa, "Africa"},
    {Region::MiddleEast, "MiddleEast"},
    {Region::SouthAsia, "SouthAsia"},
    {Region::Oceania, "Oceania"},
    {Region::Canada, "Canada"},
}};

constexpr NameTable<Domain, 5> kDomainNames{{
    {Domain::SaasIt, "SaaS/IT"},
    {Domain::Developer, "Developer"},
    {Domain::ECommerce, "E-Commerce"},
    {Domain::Education, "Education"},
    {Domain::Healthcare, "Healthcare"},
}};

constexpr NameTable<Complexity, 3> kComplexityNames{{
    {Complexity::Simple, "Simple"},
    {Complexity::Medium, "Medium"},
    {Complexity::Complex, "Complex"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view name, std::string_view what) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string row_prefix(std::size_t row) { return "persona row " + std::to_string(row) + ": "; }

double trait(const json& big_five, const char* name, std::size_t row) {
  if (!big_five.contains(name) || !big_five[name].is_number()) {
    throw ValidationError(row_prefix(row) + "missing Big Five value '" + name + "'");
  }
  const double v = big_five[name].get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << row_prefix(row) << name << " " << v << " outside [0,1]";
    throw RangeError(msg.str());
  }
  return v;
}

template <typename T>
T required(const json& obj, const char* field, const std::string& context) {
  if (!obj.contains(field)) throw ValidationError(context + "missing field '" + field + "'");
  try {
    return obj[field].get<T>();
  } catch (const json::exception&) {
    throw ValidationError(context + "field '" + field + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(Expertise e) { return name_of(kExpertiseNames, e); }
std::string_view to_string(Region r) { return name_of(kRegionNames, r); }
std::string_view to_string(Domain d) { return name_of(kDomainNames, d); }
std::string_view to_string(Complexity c) { return name_of(kComplexityNames, c); }

Expertise parse_expertise(std::string_view name) {
  return parse_name(kExpertiseNames, name, "expertise");
}
Region parse_region(std::string_view name) { return parse_name(kRegionNames, name, "region"); }
Domain parse_domain(std::string_view name) { return parse_name(kDomainNames, name, "domain"); }
Complexity parse_complexity(std::string_view name) {
  return parse_name(kComplexityNames, name, "complexity");
}

void BigFiveProfile::validate() const {
  const std::pair<const char*, double> traits[] = {
      {"openness", openness},           {"conscientiousness", conscientiousness},
      {"extraversion", extraversion},   {"agreeableness", agreeableness},
      {"neuroticism", neuroticism},
  };
  for (const auto& [name, v] : traits) {
    if (!(v >= 0.0 && v <= 1.0)) {
      std::ostringstream msg;
      msg << name << " " << v << " outside [0,1]";
      throw RangeError(msg.str());
    }
  }
}

int default_max_turns(Complexity c) {
  switch (c) {
    case Complexity::Simple: return 4;
    case Complexity::Medium: return 10;
    case Complexity::Complex: return 20;
  }
  return 4;
}

double default_complexity_weight(Complexity c) {
  switch (c) {
    case Complexity::Simple: return 0.2;
    case Complexity::Medium: return 0.6;
    case Complexity::Complex: return 1.0;
  }
  return 0.2;
}

double expertise_weight(Expertise e) {
  switch (e) {
    case Expertise::Expert: return 1.0;
    case Expertise::Intermediate: return 0.6;
    case Expertise::Novice: return 0.3;
  }
  return 0.0;
}

std::vector<PersonaSpec> load_pool(std::string_view json_text) {
  const json doc = parse_document(json_text, "persona pool");
  const json* rows = &doc;
  if (doc.is_object()) {
    if (!doc.contains("personas")) throw ValidationError("no personas");
    rows = &doc["personas"];
  }
  if (!rows->is_array()) throw ValidationError("persona pool: 'personas' must be an array");
  if (rows->empty()) throw ValidationError("no personas");

  std::vector<PersonaSpec> pool;
  pool.reserve(rows->size());
  std::unordered_set<int> seen;
  std::size_t row = 0;
  for (const json& r : *rows) {
    ++row;
    const std::string ctx = row_prefix(row);
    if (!r.is_object()) throw ValidationError(ctx + "not an object");
    PersonaSpec p;
    p.id = required<int>(r, "id", ctx);
    p.background = required<std::string>(r, "background", ctx);
    p.age = required<int>(r, "age", ctx);
    try {
      p.region = parse_region(required<std::string>(r, "region", ctx));
      p.expertise = parse_expertise(required<std::string>(r, "expertise", ctx));
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + e.what());
    }
    if (!r.contains("big_five") || !r["big_five"].is_object()) {
      throw ValidationError(ctx + "missing field 'big_five'");
    }
    const json& b5 = r["big_five"];
    p.profile.openness = trait(b5, "openness", row);
    p.profile.conscientiousness = trait(b5, "conscientiousness", row);
    p.profile.extraversion = trait(b5, "extraversion", row);
    p.profile.agreeableness = trait(b5, "agreeableness", row);
    p.profile.neuroticism = trait(b5, "neuroticism", row);

    const auto tags = required<std::vector<std::string>>(r, "domain_tags", ctx);
    for (const auto& t : tags) {
      try {
        p.domain_tags.insert(parse_domain(t));
      } catch (const ValidationError& e) {
        throw ValidationError(ctx + e.what());
      }
    }
    if (p.domain_tags.empty()) throw ValidationError(ctx + "domain_tags is empty");
    if (!seen.insert(p.id).second) {
      throw ValidationError(ctx + "duplicate persona id " + std::to_string(p.id));
    }
    pool.push_back(std::move(p));
  }
  return pool;
}

std::vector<PersonaSpec> load_pool_file(const std::filesystem::path& path) {
  return load_pool(read_file(path));
}

std::vector<TaskSpec> load_catalog(std::string_view json_text) {
  const json doc = parse_document(json_text, "task catalog");
  const json* rows = &doc;
  if (doc.is_object()) {
    if (!doc.contains("tasks")) throw ValidationError("no tasks");
    rows = &doc["tasks"];
  }
  if (!rows->is_array() || rows->empty()) throw ValidationError("no tasks");

  std::vector<TaskSpec> catalog;
  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  for (const json& r : *rows) {
    ++row;
    const std::string ctx = "task row " + std::to_string(row) + ": ";
    TaskSpec t;
    t.id = required<std::string>(r, "id", ctx);
    try {
      t.domain = parse_domain(required<std::string>(r, "domain", ctx));
      t.complexity = parse_complexity(required<std::string>(r, "complexity", ctx));
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + e.what());
    }
    t.max_turns = r.contains("max_turns") ? required<int>(r, "max_turns", ctx)
                                          : default_max_turns(t.complexity);
    if (t.max_turns != default_max_turns(t.complexity)) {
      throw ValidationError(ctx + "max_turns " + std::to_string(t.max_turns) +
                            " does not match complexity " +
                            std::string(to_string(t.complexity)));
    }
    t.complexity_weight = r.contains("complexity_weight")
                              ? required<double>(r, "complexity_weight", ctx)
                              : default_complexity_weight(t.complexity);
    if (!(t.complexity_weight >= 0.0 && t.complexity_weight <= 1.0)) {
      throw RangeError(ctx + "complexity_weight outside [0,1]");
    }
    t.goal = r.value("goal", std::string{});
    if (!seen.insert(t.id).second) throw ValidationError(ctx + "duplicate task id " + t.id);
    catalog.push_back(std::move(t));
  }
  return catalog;
}

std::vector<TaskSpec> load_catalog_file(const std::filesystem::path& path) {
  return load_catalog(read_file(path));
}

std::string_view shipped_pool_json() { return detail::kShippedPoolJson; }
std::string_view shipped_catalog_json() { return detail::kShippedCatalogJson; }

const std::vector<PersonaSpec>& shipped_pool() {
  static const std::vector<PersonaSpec> pool = load_pool(detail::kShippedPoolJson);
  return pool;
}

const std::vector<TaskSpec>& shipped_catalog() {
  static const std::vector<TaskSpec> catalog = load_catalog(detail::kShippedCatalogJson);
  return catalog;
}

const PersonaSpec& find_persona(std::span<const PersonaSpec> pool, int id) {
  const auto it = std::find_if(pool.begin(), pool.end(), [id](const auto& p) { return p.id == id; });
  if (it == pool.end()) throw ValidationError("unknown persona id " + std::to_string(id));
  return *it;
}

const TaskSpec& find_task(std::span<const TaskSpec> catalog, std::string_view id) {
  const auto it =
      std::find_if(catalog.begin(), catalog.end(), [id](const auto& t) { return t.id == id; });
  if (it == catalog.end()) throw ValidationError("unknown task id '" + std::string(id) + "'");
  return *it;
}

double fitness_score(const PersonaSpec& persona, const TaskSpec& task,
                     const FitnessWeights& weights) {
  const double domain_match = persona.domain_tags.contains(task.domain) ? 1.0 : 0.0;
  const double lambda = task.complexity_weight;
  const double personality =
      lambda * persona.profile.conscientiousness + (1.0 - lambda) * 0.5;
  const double score = weights.domain_match * domain_match +
                       weights.expertise * expertise_weight(persona.expertise) +
                       weights.personality * personality;
  return std::clamp(score, 0.0, 1.0);
}

PanelRanking rank_panel(std::span<const PersonaSpec> pool, const TaskSpec& task,
                        const FitnessWeights& weights) {
  if (pool.empty()) throw ValidationError("cannot rank an empty pool");
  PanelRanking ranking;
  ranking.task_id = task.id;
  ranking.entries.reserve(pool.size());
  for (const auto& p : pool) ranking.entries.push_back({p.id, fitness_score(p, task, weights)});
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankedPersona& a, const RankedPersona& b) {
              if (a.fitness != b.fitness) return a.fitness > b.fitness;
              return a.persona_id < b.persona_id;
            });
  return ranking;
}

std::vector<int> select_panel(const PanelRanking& ranking, std::size_t n) {
  if (n < 1 || n > ranking.entries.size()) {
    throw RangeError("panel size " + std::to_string(n) + " outside [1, " +
                     std::to_string(ranking.entries.size()) + "]");
  }
  std::vector<int> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(ranking.entries[i].persona_id);
  return ids;
}

}  // namespace agentpanel
