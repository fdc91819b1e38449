// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/stats_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "agentpanel/error.hpp"
#include "agentpanel/rng.hpp"

namespace agentpanel {
namespace {

double clamp_p(double p) {
  if (std::isnan(p)) return 1.0;
  return std::clamp(p, 0.0, 1.0);
}

double sum_sq_dev(std::span<const double> x, double m) {
  double s = 0.0;
  for (const double v : x) s += (v - m) * (v - m);
  return s;
}

// Simple least squares y = a + b x.
struct LineFit {
  double a = 0.0;
  double b = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("cannot fit a line: all x values identical");
  LineFit f;
  f.b = sxy / sxx;
  f.a = my - f.b * mx;
  return f;
}

void finish_fit(ModelFit& fit, std::span<const ScalingPoint> points) {
  std::vector<double> ys;
  ys.reserve(points.size());
  for (const auto& p : points) ys.push_back(p.value);
  const double my = mean(ys);
  double rss = 0.0, tss = 0.0;
  for (const auto& p : points) {
    const double r = p.value - fit.predict(p.k);
    rss += r * r;
    tss += (p.value - my) * (p.value - my);
  }
  const double m = static_cast<double>(points.size());
  fit.rss = rss;
  if (tss > 0.0) {
    fit.r_squared = 1.0 - rss / tss;
  } else {
    fit.r_squared = rss == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  fit.aic = m * std::log(std::max(rss, 1e-300) / m) + 2.0 * fit.parameters;
}

void require_points(std::span<const ScalingPoint> points, std::size_t min_count) {
  if (points.size() < min_count) {
    throw ValidationError("need at least " + std::to_string(min_count) + " points to fit, got " +
                          std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!(p.k > 0.0) || !std::isfinite(p.value)) {
      std::ostringstream msg;
      msg << "invalid scaling point (" << p.k << ", " << p.value << ")";
      throw RangeError(msg.str());
    }
  }
}

ModelFit fit_log_log(std::span<const ScalingPoint> points) {
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    lx.push_back(std::log(p.k));
    ly.push_back(std::log(p.value));
  }
  const auto line = least_squares(lx, ly);
  ModelFit fit;
  fit.family = ModelFamily::Power;
  fit.a = std::exp(line.a);
  fit.b = line.b;
  fit.parameters = 2;
  finish_fit(fit, points);
  return fit;
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

ScoreMatrix ScoreMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  ScoreMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) {
      throw ValidationError("score matrix row " + std::to_string(r) + " has " +
                            std::to_string(rows[r].size()) + " cells, expected " +
                            std::to_string(m.cols_));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + r * m.cols_);
  }
  return m;
}

ScoreMatrix ScoreMatrix::select_rows(std::span<const std::size_t> rows) const {
  ScoreMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw RangeError("row index out of range");
    std::copy_n(data_.begin() + rows[i] * cols_, cols_, out.data_.begin() + i * cols_);
    if (rows[i] < row_labels.size()) out.row_labels.push_back(row_labels[rows[i]]);
  }
  out.col_labels = col_labels;
  return out;
}

ScoreMatrix ScoreMatrix::first_cols(std::size_t k) const {
  if (k > cols_) throw RangeError("requested more columns than the matrix has");
  ScoreMatrix out(rows_, k);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < k; ++c) out(r, c) = (*this)(r, c);
  }
  out.row_labels = row_labels;
  out.col_labels.assign(col_labels.begin(),
                        col_labels.begin() + static_cast<std::ptrdiff_t>(std::min(k, col_labels.size())));
  return out;
}

double VarianceComponents::task_share() const {
  const double t = total();
  return t > 0.0 ? 100.0 * task / t : 0.0;
}
double VarianceComponents::judge_share() const {
  const double t = total();
  return t > 0.0 ? 100.0 * judge / t : 0.0;
}
double VarianceComponents::residual_share() const {
  const double t = total();
  return t > 0.0 ? 100.0 * residual / t : 0.0;
}

VarianceComponents variance_components(const ScoreMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  if (n < 2 || k < 2) {
    throw ValidationError("variance decomposition needs at least 2 tasks and 2 judges, got " +
                          std::to_string(n) + "x" + std::to_string(k));
  }
  // Work on offsets from one cell: sums of squares are shift invariant and a
  // constant matrix then yields exact zeros instead of rounding residue.
  const double shift = m(0, 0);
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double v = m(r, c) - shift;
      if (!std::isfinite(v)) throw ValidationError("score matrix has a non-finite cell");
      row_mean[r] += v;
      col_mean[c] += v;
      grand += v;
    }
  }
  for (auto& v : row_mean) v /= static_cast<double>(k);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ssr = 0.0, ssc = 0.0, sse = 0.0;
  for (std::size_t r = 0; r < n; ++r) ssr += (row_mean[r] - grand) * (row_mean[r] - grand);
  ssr *= static_cast<double>(k);
  for (std::size_t c = 0; c < k; ++c) ssc += (col_mean[c] - grand) * (col_mean[c] - grand);
  ssc *= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const double e = (m(r, c) - shift) - row_mean[r] - col_mean[c] + grand;
      sse += e * e;
    }
  }

  VarianceComponents vc;
  vc.n = n;
  vc.k = k;
  vc.df_rows = static_cast<int>(n - 1);
  vc.df_cols = static_cast<int>(k - 1);
  vc.df_error = static_cast<int>((n - 1) * (k - 1));
  vc.msr = ssr / vc.df_rows;
  vc.msc = ssc / vc.df_cols;
  vc.mse = sse / vc.df_error;
  vc.raw_task = (vc.msr - vc.mse) / static_cast<double>(k);
  vc.raw_judge = (vc.msc - vc.mse) / static_cast<double>(n);
  vc.task = std::max(0.0, vc.raw_task);
  vc.judge = std::max(0.0, vc.raw_judge);
  vc.residual = vc.mse;
  return vc;
}

std::string_view to_string(IccBand band) {
  switch (band) {
    case IccBand::Poor: return "poor";
    case IccBand::Moderate: return "moderate";
    case IccBand::Good: return "good";
    case IccBand::Excellent: return "excellent";
  }
  return "poor";
}

IccBand interpret_icc(double icc) {
  if (icc < 0.50) return IccBand::Poor;
  if (icc < 0.75) return IccBand::Moderate;
  if (icc <= 0.90) return IccBand::Good;
  return IccBand::Excellent;
}

double projected_icc(const VarianceComponents& vc, double raters) {
  if (!(raters > 0.0)) throw RangeError("rater count must be positive");
  const double denom = vc.task + (vc.judge + vc.residual) / raters;
  if (denom <= 0.0) return 0.0;
  return std::clamp(vc.task / denom, 0.0, 1.0);
}

double icc2k_value(const VarianceComponents& vc) {
  return projected_icc(vc, static_cast<double>(vc.k));
}

double spearman_brown(double single_rater, double raters) {
  const double denom = 1.0 + (raters - 1.0) * single_rater;
  if (denom == 0.0) throw RangeError("Spearman-Brown denominator is zero");
  return raters * single_rater / denom;
}

IccResult icc2k(const ScoreMatrix& m, const BootstrapOptions& bootstrap) {
  IccResult out;
  out.components = variance_components(m);
  const auto& vc = out.components;
  out.stat.name = "ICC(2,k)";
  out.degenerate = vc.total() <= 0.0;
  out.stat.value = out.degenerate ? 0.0 : icc2k_value(vc);
  out.stat.df = static_cast<double>(vc.df_rows);
  if (!out.degenerate && vc.mse > 0.0) {
    boost::math::fisher_f dist(vc.df_rows, vc.df_error);
    out.stat.p_value = clamp_p(boost::math::cdf(boost::math::complement(dist, vc.msr / vc.mse)));
  } else {
    out.stat.p_value = out.degenerate ? 1.0 : 0.0;
  }
  out.band = interpret_icc(out.stat.value);

  out.ci_low = out.ci_high = out.stat.value;
  if (bootstrap.resamples > 0) {
    const std::size_t n = m.rows();
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(bootstrap.resamples));
    std::vector<std::size_t> idx(n);
    for (int r = 0; r < bootstrap.resamples; ++r) {
      Rng rng(mix_seed(bootstrap.seed, static_cast<std::uint64_t>(r)));
      for (auto& i : idx) i = rng.index(n);
      const auto bvc = variance_components(m.select_rows(idx));
      draws.push_back(bvc.total() > 0.0 ? icc2k_value(bvc) : 0.0);
    }
    std::sort(draws.begin(), draws.end());
    const double alpha = (1.0 - bootstrap.confidence) / 2.0;
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(draws.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, draws.size() - 1);
      return draws[lo] + (pos - static_cast<double>(lo)) * (draws[hi] - draws[lo]);
    };
    out.ci_low = quantile(alpha);
    out.ci_high = quantile(1.0 - alpha);
  }
  return out;
}

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Logarithmic: return "logarithmic";
    case ModelFamily::Linear: return "linear";
    case ModelFamily::Power: return "power";
    case ModelFamily::Hyperbolic: return "hyperbolic";
  }
  return "logarithmic";
}

double ModelFit::predict(double k) const {
  switch (family) {
    case ModelFamily::Logarithmic: return a + b * std::log(k);
    case ModelFamily::Linear: return a + b * k;
    case ModelFamily::Power: return a * std::pow(k, b);
    case ModelFamily::Hyperbolic: return 1.0 - a / k;
  }
  return 0.0;
}

std::vector<ModelFit> fit_scaling_models(std::span<const ScalingPoint> points) {
  require_points(points, 3);
  std::vector<double> ks, lks, ys;
  for (const auto& p : points) {
    ks.push_back(p.k);
    lks.push_back(std::log(p.k));
    ys.push_back(p.value);
  }
  std::vector<ModelFit> fits;

  const auto log_line = least_squares(lks, ys);
  ModelFit lg{ModelFamily::Logarithmic, log_line.a, log_line.b, 2};
  finish_fit(lg, points);
  fits.push_back(lg);

  const auto lin_line = least_squares(ks, ys);
  ModelFit lin{ModelFamily::Linear, lin_line.a, lin_line.b, 2};
  finish_fit(lin, points);
  fits.push_back(lin);

  if (std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; })) {
    fits.push_back(fit_log_log(points));
  }

  // 1 - y = a / k: one-parameter least squares through the origin in 1/k.
  double num = 0.0, den = 0.0;
  for (const auto& p : points) {
    num += (1.0 - p.value) / p.k;
    den += 1.0 / (p.k * p.k);
  }
  ModelFit hyp{ModelFamily::Hyperbolic, num / den, 0.0, 1};
  finish_fit(hyp, points);
  fits.push_back(hyp);

  std::stable_sort(fits.begin(), fits.end(),
                   [](const ModelFit& x, const ModelFit& y) { return x.aic < y.aic; });
  return fits;
}

ModelFit fit_power_law(std::span<const ScalingPoint> points) {
  require_points(points, 2);
  for (const auto& p : points) {
    if (!(p.value > 0.0)) throw RangeError("power-law fit needs positive counts");
  }
  return fit_log_log(points);
}

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least 2 values");
  return sum_sq_dev(x, mean(x)) / static_cast<double>(x.size() - 1);
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

StatResult omega_squared(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw ValidationError("omega squared needs at least 2 groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("omega squared group is empty");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double grand = mean(all);
  const double ss_total = sum_sq_dev(all, grand);
  double ss_between = 0.0;
  for (const auto& g : groups) {
    const double gm = mean(g);
    ss_between += static_cast<double>(g.size()) * (gm - grand) * (gm - grand);
  }
  const double ss_within = ss_total - ss_between;
  const double df_between = static_cast<double>(groups.size() - 1);
  const double df_within = static_cast<double>(all.size() - groups.size());

  StatResult out;
  out.name = "omega_squared";
  out.df = df_between;
  if (ss_total <= 0.0) return out;
  const double ms_within = df_within > 0.0 ? ss_within / df_within : 0.0;
  out.value = std::max(0.0, (ss_between - df_between * ms_within) / (ss_total + ms_within));
  if (df_within > 0.0) {
    if (ms_within > 0.0) {
      boost::math::fisher_f dist(df_between, df_within);
      const double f = (ss_between / df_between) / ms_within;
      out.p_value = clamp_p(boost::math::cdf(boost::math::complement(dist, f)));
    } else {
      out.p_value = ss_between > 0.0 ? 0.0 : 1.0;
    }
  }
  return out;
}

StatResult cohen_d(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() < 2 || g2.size() < 2) throw ValidationError("Cohen's d needs 2+ values per group");
  const double n1 = static_cast<double>(g1.size());
  const double n2 = static_cast<double>(g2.size());
  const double pooled =
      std::sqrt(((n1 - 1.0) * variance(g1) + (n2 - 1.0) * variance(g2)) / (n1 + n2 - 2.0));
  const double diff = mean(g1) - mean(g2);
  StatResult out;
  out.name = "cohen_d";
  if (pooled == 0.0) {
    if (diff == 0.0) return out;
    throw ValidationError("Cohen's d undefined: pooled standard deviation is zero");
  }
  out.value = diff / pooled;
  return out;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (!(df > 0.0)) throw RangeError("t distribution needs positive degrees of freedom");
  boost::math::students_t dist(df);
  return clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

StatResult paired_t(std::span<const double> diffs) {
  if (diffs.size() < 2) throw ValidationError("paired t needs at least 2 differences");
  const double m = static_cast<double>(diffs.size());
  const double mu = mean(diffs);
  const double sd = stddev(diffs);
  StatResult out;
  out.name = "paired_t";
  out.df = m - 1.0;
  if (sd == 0.0) {
    if (mu == 0.0) return out;
    throw ValidationError("paired t undefined: differences are constant and nonzero");
  }
  out.value = mu / (sd / std::sqrt(m));
  out.p_value = student_t_two_sided_p(out.value, *out.df);
  return out;
}

StatResult welch_t(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() < 2 || g2.size() < 2) throw ValidationError("Welch t needs 2+ values per group");
  const double n1 = static_cast<double>(g1.size());
  const double n2 = static_cast<double>(g2.size());
  const double v1 = variance(g1) / n1;
  const double v2 = variance(g2) / n2;
  const double diff = mean(g1) - mean(g2);
  StatResult out;
  out.name = "welch_t";
  if (v1 + v2 == 0.0) {
    out.df = n1 + n2 - 2.0;
    if (diff == 0.0) return out;
    out.value = diff > 0.0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
    return out;
  }
  out.value = diff / std::sqrt(v1 + v2);
  out.df = (v1 + v2) * (v1 + v2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
  out.p_value = student_t_two_sided_p(out.value, *out.df);
  return out;
}

double bonferroni(double p, std::size_t comparisons) {
  if (comparisons == 0) throw ValidationError("Bonferroni needs at least one comparison");
  return std::min(1.0, p * static_cast<double>(comparisons));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

StatResult correlation(std::span<const double> x, std::span<const double> y,
                       CorrelationMethod method) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 3) throw ValidationError("correlation needs at least 3 pairs");
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  if (method == CorrelationMethod::Spearman) {
    xs = average_ranks(x);
    ys = average_ranks(y);
  }
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("correlation undefined: an input has zero variance");
  }
  StatResult out;
  out.name = method == CorrelationMethod::Pearson ? "pearson_r" : "spearman_rho";
  out.value = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(xs.size()) - 2.0;
  out.df = df;
  if (std::abs(out.value) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.value * std::sqrt(df / (1.0 - out.value * out.value));
    out.p_value = student_t_two_sided_p(t, df);
  }
  return out;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series converges poorly for tiny lambda; Q is 1 there.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return clamp_p(2.0 * sum);
}

StatResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS test needs non-empty samples");
  std::vector<double> xs(a.begin(), a.end()), ys(b.begin(), b.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double na = static_cast<double>(xs.size());
  const double nb = static_cast<double>(ys.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  StatResult out;
  out.name = "ks_d";
  out.value = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  out.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
  return out;
}

}  // namespace agentpanel
