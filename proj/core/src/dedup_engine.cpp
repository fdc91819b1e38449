// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/dedup_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "agentpanel/rng.hpp"

namespace agentpanel {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void require_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    std::ostringstream msg;
    msg << "similarity threshold " << theta << " outside (0,1)";
    throw RangeError(msg.str());
  }
}

}  // namespace

HashedBagEmbedder::HashedBagEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<std::string> HashedBagEmbedder::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<EmbeddingVector> HashedBagEmbedder::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::vector<std::size_t> failed;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EmbeddingVector v(dimension_, 0.0);
    const auto tokens = tokenize(texts[i]);
    for (const auto& t : tokens) v[hash_string(t) % dimension_] += 1.0;
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      failed.push_back(i);
    } else {
      for (double& x : v) x /= norm;
    }
    out.push_back(std::move(v));
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "cannot embed texts without tokens at indices";
    for (const auto i : failed) msg << ' ' << i;
    throw EmbeddingError(msg.str(), failed);
  }
  return out;
}

std::vector<EmbeddingVector> embed_insights(std::span<const std::string> texts,
                                            Embedder& embedder) {
  if (texts.empty()) throw ValidationError("no insight texts to embed");
  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw EmbeddingError("embedder returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " texts",
                         {});
  }
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double norm = 0.0;
    for (const double x : vectors[i]) norm += x * x;
    if (vectors[i].size() != embedder.dimension() || std::abs(std::sqrt(norm) - 1.0) > 1e-9) {
      bad.push_back(i);
    }
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "embedder returned non-unit or wrong-dimension vectors at indices";
    for (const auto i : bad) msg << ' ' << i;
    throw EmbeddingError(msg.str(), bad);
  }
  return vectors;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot;
}

SimilarityMatrix::SimilarityMatrix(std::span<const EmbeddingVector> vectors)
    : n_(vectors.size()), data_(vectors.size() * vectors.size(), 0.0) {
  for (std::size_t i = 0; i < n_; ++i) {
    data_[i * n_ + i] = 1.0;
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double s = cosine(vectors[i], vectors[j]);
      data_[i * n_ + j] = s;
      data_[j * n_ + i] = s;
    }
  }
}

SimilarityMatrix SimilarityMatrix::subset(std::span<const std::size_t> indices) const {
  SimilarityMatrix out;
  out.n_ = indices.size();
  out.data_.resize(out.n_ * out.n_);
  for (std::size_t i = 0; i < out.n_; ++i) {
    for (std::size_t j = 0; j < out.n_; ++j) {
      out.data_[i * out.n_ + j] = (*this)(indices[i], indices[j]);
    }
  }
  return out;
}

std::vector<FindingCluster> cluster(const SimilarityMatrix& similarities, double theta) {
  require_theta(theta);
  const std::size_t n = similarities.size();
  if (n == 0) throw ValidationError("cannot cluster an empty corpus");

  // Working copy updated in place (Lance-Williams, average linkage). Slot i
  // always holds the cluster whose smallest member is i.
  std::vector<double> sim(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sim[i * n + j] = similarities(i, j);
  }
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<char> active(n, 1);
  std::vector<std::size_t> best(n, kNone);
  std::vector<double> best_sim(n, -std::numeric_limits<double>::infinity());

  auto recompute = [&](std::size_t i) {
    best[i] = kNone;
    best_sim[i] = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (sim[i * n + j] > best_sim[i]) {
        best_sim[i] = sim[i * n + j];
        best[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) recompute(i);

  while (true) {
    std::size_t lo = kNone, hi = kNone;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best[i] == kNone) continue;
      const std::size_t a = std::min(i, best[i]);
      const std::size_t b = std::max(i, best[i]);
      if (best_sim[i] > top || (best_sim[i] == top && std::pair(a, b) < std::pair(lo, hi))) {
        top = best_sim[i];
        lo = a;
        hi = b;
      }
    }
    if (lo == kNone || top < theta) break;

    const double na = static_cast<double>(members[lo].size());
    const double nb = static_cast<double>(members[hi].size());
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == lo || c == hi) continue;
      const double merged = (na * sim[lo * n + c] + nb * sim[hi * n + c]) / (na + nb);
      sim[lo * n + c] = merged;
      sim[c * n + lo] = merged;
    }
    members[lo].insert(members[lo].end(), members[hi].begin(), members[hi].end());
    members[hi].clear();
    active[hi] = 0;

    recompute(lo);
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == lo) continue;
      if (best[c] == lo || best[c] == hi) {
        recompute(c);
      } else if (sim[c * n + lo] > best_sim[c] ||
                 (sim[c * n + lo] == best_sim[c] && lo < best[c])) {
        best_sim[c] = sim[c * n + lo];
        best[c] = lo;
      }
    }
  }

  std::vector<FindingCluster> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    FindingCluster fc;
    fc.members = std::move(members[i]);
    std::sort(fc.members.begin(), fc.members.end());
    double best_total = -std::numeric_limits<double>::infinity();
    for (const auto m : fc.members) {
      double total = 0.0;
      for (const auto o : fc.members) {
        if (o != m) total += similarities(m, o);
      }
      if (total > best_total) {
        best_total = total;
        fc.representative = m;
      }
    }
    out.push_back(std::move(fc));
  }
  return out;
}

std::vector<FindingCluster> cluster(std::span<const EmbeddingVector> vectors, double theta) {
  return cluster(SimilarityMatrix(vectors), theta);
}

double FindingSet::high_impact_share() const {
  if (findings.empty()) return 0.0;
  const auto high = std::count_if(findings.begin(), findings.end(),
                                  [](const Finding& f) { return f.severity == Severity::High; });
  return static_cast<double>(high) / static_cast<double>(findings.size());
}

Finding annotate(const FindingCluster& fc, std::span<const CorpusItem> items) {
  Finding f;
  f.cluster = fc;
  f.representative_text = items[fc.representative].insight.text;
  std::map<Category, std::pair<int, Severity>> votes;
  for (const auto m : fc.members) {
    const auto& ins = items[m].insight;
    auto& [count, max_sev] = votes.try_emplace(ins.category, 0, Severity::Low).first->second;
    ++count;
    max_sev = std::max(max_sev, ins.severity);
    f.severity = std::max(f.severity, ins.severity);
  }
  bool first = true;
  int best_count = 0;
  Severity best_sev = Severity::Low;
  for (const auto& [cat, vote] : votes) {
    const auto& [count, sev] = vote;
    const bool better =
        first || count > best_count ||
        (count == best_count &&
         (sev > best_sev || (sev == best_sev && to_string(cat) < to_string(f.category))));
    if (better) {
      f.category = cat;
      best_count = count;
      best_sev = sev;
      first = false;
    }
  }
  return f;
}

InsightCorpus::InsightCorpus(std::vector<CorpusItem> items, Embedder& embedder)
    : items_(std::move(items)) {
  if (items_.empty()) throw ValidationError("insight corpus is empty");
  std::vector<std::string> texts;
  texts.reserve(items_.size());
  for (const auto& it : items_) texts.push_back(it.insight.text);
  vectors_ = embed_insights(texts, embedder);
  sims_ = SimilarityMatrix(vectors_);
}

FindingSet InsightCorpus::findings(std::span<const std::size_t> indices, double theta) const {
  FindingSet set;
  set.theta = theta;
  if (indices.empty()) {
    require_theta(theta);
    return set;
  }
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const auto local = cluster(sims_.subset(sorted), theta);
  set.findings.reserve(local.size());
  for (const auto& c : local) {
    FindingCluster global;
    global.members.reserve(c.members.size());
    for (const auto m : c.members) global.members.push_back(sorted[m]);
    global.representative = sorted[c.representative];
    set.findings.push_back(annotate(global, items_));
  }
  return set;
}

FindingSet InsightCorpus::findings(double theta) const {
  std::vector<std::size_t> all(items_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return findings(all, theta);
}

std::vector<CorpusItem> pool_insights(std::span<const SessionRecord* const> sessions,
                                      bool include_strengths) {
  std::vector<CorpusItem> items;
  for (const SessionRecord* s : sessions) {
    for (const auto& d : s->diary) {
      for (const auto& ins : d.insights) {
        if (ins.polarity == Polarity::Strength && !include_strengths) continue;
        items.push_back({ins, s->session_id, s->persona_id, s->task_id});
      }
    }
  }
  return items;
}

std::vector<CorpusItem> pool_insights(std::span<const SessionRecord> sessions,
                                      bool include_strengths) {
  std::vector<const SessionRecord*> ptrs;
  ptrs.reserve(sessions.size());
  for (const auto& s : sessions) ptrs.push_back(&s);
  return pool_insights(std::span<const SessionRecord* const>(ptrs), include_strengths);
}

FindingSet unique_findings(std::span<const SessionRecord> sessions, double theta,
                           Embedder& embedder, bool include_strengths) {
  require_theta(theta);
  auto items = pool_insights(sessions, include_strengths);
  if (items.empty()) throw ValidationError("sessions contain no insights");
  const InsightCorpus corpus(std::move(items), embedder);
  return corpus.findings(theta);
}

std::vector<double> default_sweep_thetas() {
  std::vector<double> thetas;
  for (int i = 0; i <= 6; ++i) thetas.push_back((50 + 5 * i) / 100.0);
  return thetas;
}

std::vector<SweepRow> threshold_sweep(const InsightCorpus& corpus,
                                      std::span<const std::vector<std::size_t>> panel_items,
                                      std::span<const int> sizes,
                                      std::span<const double> thetas) {
  if (panel_items.size() != sizes.size()) {
    throw ValidationError("threshold sweep needs one item list per panel size");
  }
  std::vector<SweepRow> rows;
  for (const double theta : thetas) {
    if (!(theta >= 0.50 - 1e-12 && theta <= 0.80 + 1e-12)) {
      std::ostringstream msg;
      msg << "sweep threshold " << theta << " outside [0.50, 0.80]";
      throw RangeError(msg.str());
    }
    SweepRow row;
    row.theta = theta;
    row.sizes.assign(sizes.begin(), sizes.end());
    row.recommended = theta >= 0.60 - 1e-12 && theta <= 0.70 + 1e-12;
    std::vector<ScalingPoint> points;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const auto set = corpus.findings(panel_items[i], theta);
      row.unique_counts.push_back(set.unique_count());
      // Empty panels carry no information for a log-log fit.
      if (set.unique_count() > 0) {
        points.push_back({static_cast<double>(sizes[i]), static_cast<double>(set.unique_count())});
      }
    }
    row.fit.family = ModelFamily::Power;
    if (points.size() >= 2) row.fit = fit_power_law(points);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace agentpanel
