// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "agentpanel/error.hpp"
#include "agentpanel/session_runtime.hpp"
#include "agentpanel/stats_engine.hpp"

namespace agentpanel {

/// Unit-norm embedding.
using EmbeddingVector = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per text, same order. Implementations throw EmbeddingError.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
  virtual std::size_t dimension() const = 0;
};

class EmbeddingError : public Error {
 public:
  EmbeddingError(const std::string& what, std::vector<std::size_t> failed)
      : Error(what), failed_indices(std::move(failed)) {}
  std::vector<std::size_t> failed_indices;
};

/// Deterministic offline embedder: lower-cased alphanumeric tokens hashed
/// (FNV-1a) into a fixed number of buckets, counted, then L2-normalized.
class HashedBagEmbedder final : public Embedder {
 public:
  explicit HashedBagEmbedder(std::size_t dimension = 256);
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }

  static std::vector<std::string> tokenize(const std::string& text);

 private:
  std::size_t dimension_;
};

/// Embeds texts and checks the unit-norm contract.
std::vector<EmbeddingVector> embed_insights(std::span<const std::string> texts,
                                            Embedder& embedder);

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Symmetric pairwise cosine similarities, row-major n x n.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::span<const EmbeddingVector> vectors);
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  /// Restriction to the given indices, in that order.
  SimilarityMatrix subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct FindingCluster {
  std::vector<std::size_t> members;  // ascending item ids
  std::size_t representative = 0;    // medoid: max summed similarity, ties to lowest id
};

/// Greedy average-linkage agglomeration: repeatedly merge the cluster pair
/// with the highest mean pairwise similarity while it is >= theta. Ties go to
/// the pair with the smallest (min member id, min member id). Output is
/// ordered by smallest member id.
std::vector<FindingCluster> cluster(const SimilarityMatrix& similarities, double theta);
std::vector<FindingCluster> cluster(std::span<const EmbeddingVector> vectors, double theta);

/// One pooled insight with provenance.
struct CorpusItem {
  Insight insight;
  std::string session_id;
  int persona_id = 0;
  std::string task_id;
};

struct Finding {
  FindingCluster cluster;
  std::string representative_text;
  Category category = Category::Functionality;
  Severity severity = Severity::Low;
};

struct FindingSet {
  double theta = 0.65;
  std::vector<Finding> findings;
  std::size_t unique_count() const { return findings.size(); }
  /// Fraction of findings whose severity is high.
  double high_impact_share() const;
};

/// Pooled insights from many sessions with their embeddings and similarity
/// matrix computed once; clusterings over subsets reuse them.
class InsightCorpus {
 public:
  InsightCorpus(std::vector<CorpusItem> items, Embedder& embedder);

  const std::vector<CorpusItem>& items() const { return items_; }
  const std::vector<EmbeddingVector>& vectors() const { return vectors_; }
  const SimilarityMatrix& similarities() const { return sims_; }

  /// Clusters the items at `indices` (ids in the result refer to corpus items).
  FindingSet findings(std::span<const std::size_t> indices, double theta) const;
  FindingSet findings(double theta) const;

 private:
  std::vector<CorpusItem> items_;
  std::vector<EmbeddingVector> vectors_;
  SimilarityMatrix sims_;
};

/// Collects insights from sessions; strengths are skipped unless requested.
std::vector<CorpusItem> pool_insights(std::span<const SessionRecord> sessions,
                                      bool include_strengths = false);
std::vector<CorpusItem> pool_insights(std::span<const SessionRecord* const> sessions,
                                      bool include_strengths = false);

/// Category by majority vote (ties: higher max member severity, then name);
/// severity = max over members.
Finding annotate(const FindingCluster& cluster, std::span<const CorpusItem> items);

FindingSet unique_findings(std::span<const SessionRecord> sessions, double theta,
                           Embedder& embedder, bool include_strengths = false);

inline constexpr double kDefaultTheta = 0.65;

/// theta = 0.50, 0.55, ..., 0.80.
std::vector<double> default_sweep_thetas();

struct SweepRow {
  double theta = 0.0;
  std::vector<int> sizes;
  std::vector<std::size_t> unique_counts;  // one per size
  ModelFit fit;                            // power law over (size, count)
  bool recommended = false;                // theta within [0.60, 0.70]
};

/// Unique-finding counts per nested panel size for every theta, each with a
/// fitted discovery exponent. `panel_items[i]` holds the corpus indices
/// pooled by the panel of size `sizes[i]`. Thetas must lie in [0.50, 0.80].
std::vector<SweepRow> threshold_sweep(const InsightCorpus& corpus,
                                      std::span<const std::vector<std::size_t>> panel_items,
                                      std::span<const int> sizes,
                                      std::span<const double> thetas);

}  // namespace agentpanel
