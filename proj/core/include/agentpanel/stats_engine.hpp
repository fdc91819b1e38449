// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agentpanel {

/// n tasks (rows) x k judges (columns) of session scores.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Row-major nested vectors; every row must have the same length.
  static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  /// Matrix built from the given rows (repetition allowed).
  ScoreMatrix select_rows(std::span<const std::size_t> rows) const;
  ScoreMatrix first_cols(std::size_t k) const;

  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Two-way random-effects decomposition (one observation per cell).
struct VarianceComponents {
  double task = 0.0;      // sigma^2_tau, clamped at 0
  double judge = 0.0;     // sigma^2_pi, clamped at 0
  double residual = 0.0;  // sigma^2_eps = MSE
  double raw_task = 0.0;  // unclamped estimates
  double raw_judge = 0.0;
  double msr = 0.0;
  double msc = 0.0;
  double mse = 0.0;
  int df_rows = 0;
  int df_cols = 0;
  int df_error = 0;
  std::size_t n = 0;
  std::size_t k = 0;

  double total() const { return task + judge + residual; }
  /// Percentage shares; all zero for a zero-variance matrix.
  double task_share() const;
  double judge_share() const;
  double residual_share() const;
};

VarianceComponents variance_components(const ScoreMatrix& m);

struct StatResult {
  std::string name;
  double value = 0.0;
  std::optional<double> df;
  double p_value = 1.0;
};

enum class IccBand { Poor, Moderate, Good, Excellent };
std::string_view to_string(IccBand band);
/// Koo & Li: < .50 poor, .50-.75 moderate, .75-.90 good, > .90 excellent.
IccBand interpret_icc(double icc);

struct BootstrapOptions {
  int resamples = 2000;
  std::uint64_t seed = 0;
  double confidence = 0.95;
};

struct IccResult {
  StatResult stat;  // ICC(2,k)
  double ci_low = 0.0;
  double ci_high = 0.0;
  IccBand band = IccBand::Poor;
  bool degenerate = false;  // zero-variance input; ICC reported as 0
  VarianceComponents components;
};

/// ICC(2,k) = (MSR - MSE) / (MSR + (MSC - MSE)/n) from clamped components,
/// with a percentile bootstrap CI over tasks.
IccResult icc2k(const ScoreMatrix& m, const BootstrapOptions& bootstrap = {});

/// ICC(2,k) value only, no CI.
double icc2k_value(const VarianceComponents& vc);
/// Reliability of the mean of `raters` judges implied by the components:
/// sigma_tau / (sigma_tau + (sigma_pi + sigma_eps) / raters). Equal to
/// icc2k_value at raters = k and to ICC(2,1) at raters = 1.
double projected_icc(const VarianceComponents& vc, double raters);
/// Spearman-Brown: m r / (1 + (m - 1) r).
double spearman_brown(double single_rater, double raters);

enum class ModelFamily { Logarithmic, Linear, Power, Hyperbolic };
std::string_view to_string(ModelFamily f);

struct ScalingPoint {
  double k = 0.0;
  double value = 0.0;
};

/// value = a + b ln k | a + b k | a k^b | 1 - a/k
struct ModelFit {
  ModelFamily family = ModelFamily::Logarithmic;
  double a = 0.0;
  double b = 0.0;
  int parameters = 2;
  double rss = 0.0;
  double r_squared = 0.0;
  double aic = 0.0;

  double predict(double k) const;
};

/// Least-squares fits of the four families ranked by ascending AIC
/// (AIC = m ln(RSS/m) + 2p, RSS floored at 1e-300). The power family is fit
/// in log-log space and is omitted when any value is non-positive. RSS and
/// R^2 are always measured on the original scale.
std::vector<ModelFit> fit_scaling_models(std::span<const ScalingPoint> points);

/// count = a N^b by log-log least squares.
ModelFit fit_power_law(std::span<const ScalingPoint> points);

StatResult omega_squared(std::span<const std::vector<double>> groups);
/// (mean1 - mean2) / pooled SD.
StatResult cohen_d(std::span<const double> g1, std::span<const double> g2);
StatResult paired_t(std::span<const double> diffs);
StatResult welch_t(std::span<const double> g1, std::span<const double> g2);
/// min(1, p * comparisons).
double bonferroni(double p, std::size_t comparisons);

enum class CorrelationMethod { Pearson, Spearman };
StatResult correlation(std::span<const double> x, std::span<const double> y,
                       CorrelationMethod method = CorrelationMethod::Pearson);
/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> x);

StatResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value for a Student t statistic.
double student_t_two_sided_p(double t, double df);
/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double stddev(std::span<const double> x);

}  // namespace agentpanel
