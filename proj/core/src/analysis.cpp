#include "albench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "albench/error.hpp"
#include "albench/rng.hpp"

namespace albench::analysis {

namespace {

// Caps for the quadratic pool baselines; larger pools are represented by a
// fixed-seed sample so results stay deterministic and cheap.
constexpr std::size_t kBaselineCap = 2000;

std::vector<Index> sampled_rows(std::size_t n, std::size_t cap,
                                std::string_view tag) {
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  if (n <= cap) return rows;
  Rng rng = Rng::stream(0, tag);
  auto picked =
      rng.sample_without_replacement(std::span<const Index>(rows), cap);
  std::sort(picked.begin(), picked.end());
  return picked;
}

double mean_pairwise_over(const Matrix& m, std::span<const Index> rows) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    auto ri = m.row(static_cast<std::size_t>(rows[i]));
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      sum += euclidean_distance(ri, m.row(static_cast<std::size_t>(rows[j])));
    }
  }
  const double pairs =
      static_cast<double>(rows.size()) * static_cast<double>(rows.size() - 1) / 2.0;
  return sum / pairs;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double mean_pairwise_distance(const Matrix& m) {
  if (m.rows() < 2) {
    fail(Errc::undefined_metric,
         "mean pairwise distance needs at least 2 rows");
  }
  std::vector<Index> rows(m.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return mean_pairwise_over(m, rows);
}

double diversity(const Matrix& batch_reprs, const Matrix& pool_reprs) {
  if (batch_reprs.rows() < 2) {
    fail(Errc::undefined_metric, "diversity needs a batch of at least 2");
  }
  if (pool_reprs.rows() < 2) {
    fail(Errc::undefined_metric, "diversity needs a pool of at least 2");
  }
  const double numer = mean_pairwise_distance(batch_reprs);
  auto rows = sampled_rows(pool_reprs.rows(), kBaselineCap, "diversity-baseline");
  const double denom = mean_pairwise_over(pool_reprs, rows);
  if (denom == 0.0) {
    fail(Errc::undefined_metric, "pool has zero mean pairwise distance");
  }
  return numer / denom;
}

double mean_knn_distance(const Matrix& reprs, Index self,
                         std::span<const Index> candidates, int k) {
  if (k < 1) fail(Errc::config, "k must be >= 1");
  std::vector<double> dists;
  dists.reserve(candidates.size());
  auto srow = reprs.row(static_cast<std::size_t>(self));
  for (Index c : candidates) {
    if (c == self) continue;
    dists.push_back(
        euclidean_distance(srow, reprs.row(static_cast<std::size_t>(c))));
  }
  if (dists.size() < static_cast<std::size_t>(k)) {
    fail(Errc::undefined_metric,
         "need at least k=" + std::to_string(k) + " neighbors, have " +
             std::to_string(dists.size()));
  }
  std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += dists[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(k);
}

double representativeness(std::span<const Index> batch_indices,
                          const Pool& pool, const Matrix& reprs, int k) {
  if (k < 1) fail(Errc::config, "k must be >= 1");
  if (batch_indices.empty()) {
    fail(Errc::empty_selection, "representativeness of an empty batch");
  }
  const auto& unlabeled = pool.unlabeled();
  if (unlabeled.size() < static_cast<std::size_t>(k) + 1) {
    fail(Errc::undefined_metric,
         "unlabeled pool smaller than k+1 = " + std::to_string(k + 1));
  }

  std::vector<Index> candidates(unlabeled);
  if (candidates.size() > kBaselineCap) {
    Rng rng = Rng::stream(0, "representativeness-sample");
    candidates = rng.sample_without_replacement(
        std::span<const Index>(candidates), kBaselineCap);
    std::sort(candidates.begin(), candidates.end());
  }

  double baseline = 0.0;
  for (Index c : candidates) {
    baseline += mean_knn_distance(reprs, c, candidates, k);
  }
  baseline /= static_cast<double>(candidates.size());

  bool floored = false;
  double density_sum = 0.0;
  for (Index i : batch_indices) {
    double d = mean_knn_distance(reprs, i, candidates, k);
    if (d < 1e-12) {
      d = 1e-12;
      floored = true;
    }
    density_sum += 1.0 / d;
  }
  if (floored) {
    log_warning("representativeness: coincident points floored at 1e-12");
  }
  return density_sum / static_cast<double>(batch_indices.size()) * baseline;
}

double label_entropy(const LabelDistribution& dist) {
  dist.validate();
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double kl_divergence(const LabelDistribution& p, const LabelDistribution& q,
                     double epsilon) {
  p.validate();
  q.validate();
  if (p.probs.size() != q.probs.size()) {
    fail(Errc::shape, "distributions have different class counts");
  }
  if (!(epsilon > 0.0)) fail(Errc::value, "epsilon must be > 0");
  double qsum = 0.0;
  for (double v : q.probs) qsum += v + epsilon;
  double kl = 0.0;
  for (std::size_t c = 0; c < p.probs.size(); ++c) {
    if (p.probs[c] <= 0.0) continue;
    kl += p.probs[c] * std::log(p.probs[c] * qsum / (q.probs[c] + epsilon));
  }
  return std::max(kl, 0.0);
}

namespace {

struct F1Counts {
  std::vector<double> tp, fp, fn;
};

F1Counts confusion_counts(std::span<const Index> predicted,
                          std::span<const Index> actual, Index num_classes) {
  if (predicted.size() != actual.size()) {
    fail(Errc::shape, "predicted and actual lengths differ");
  }
  if (predicted.empty()) {
    fail(Errc::insufficient_data, "f1 of empty label lists");
  }
  if (num_classes < 1) fail(Errc::value, "num_classes must be >= 1");
  F1Counts counts;
  counts.tp.assign(static_cast<std::size_t>(num_classes), 0.0);
  counts.fp.assign(static_cast<std::size_t>(num_classes), 0.0);
  counts.fn.assign(static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    Index p = predicted[i], a = actual[i];
    if (p < 0 || p >= num_classes || a < 0 || a >= num_classes) {
      fail(Errc::value, "label outside [0, " + std::to_string(num_classes) + ")");
    }
    if (p == a) {
      counts.tp[static_cast<std::size_t>(p)] += 1.0;
    } else {
      counts.fp[static_cast<std::size_t>(p)] += 1.0;
      counts.fn[static_cast<std::size_t>(a)] += 1.0;
    }
  }
  return counts;
}

}  // namespace

double macro_f1(std::span<const Index> predicted, std::span<const Index> actual,
                Index num_classes) {
  auto counts = confusion_counts(predicted, actual, num_classes);
  double sum = 0.0;
  bool absent = false;
  for (std::size_t c = 0; c < counts.tp.size(); ++c) {
    const double tp = counts.tp[c], fp = counts.fp[c], fn = counts.fn[c];
    if (tp + fp + fn == 0.0) {
      absent = true;  // class absent from both sides contributes F1 = 0
      continue;
    }
    if (tp > 0.0) sum += 2.0 * tp / (2.0 * tp + fp + fn);
  }
  if (absent) {
    log_warning("macro_f1: class absent from predictions and actuals scored 0");
  }
  return sum / static_cast<double>(num_classes);
}

double micro_f1(std::span<const Index> predicted, std::span<const Index> actual,
                Index num_classes) {
  auto counts = confusion_counts(predicted, actual, num_classes);
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t c = 0; c < counts.tp.size(); ++c) {
    tp += counts.tp[c];
    fp += counts.fp[c];
    fn += counts.fn[c];
  }
  if (tp == 0.0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(Errc::shape, "paired samples have different lengths");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < 5) {
    fail(Errc::insufficient_data,
         "wilcoxon needs >= 5 nonzero differences, have " + std::to_string(n));
  }

  // Average ranks of |d|, ties averaged.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });
  std::vector<double> ranks(n, 0.0);
  std::vector<double> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg_rank;
    if (j - i > 1) tie_sizes.push_back(static_cast<double>(j - i));
    i = j;
  }

  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w += ranks[i];
  }

  WilcoxonResult result;
  result.statistic = w;
  result.n = n;

  if (n <= 20) {
    // Exact null: every sign pattern equally likely. Doubled ranks are
    // integers even with average ranks, so a subset-sum table is exact.
    std::vector<long long> r2(n);
    long long total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * ranks[i]);
      total2 += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = count.size(); s-- > static_cast<std::size_t>(r2[i]);) {
        count[s] += count[s - static_cast<std::size_t>(r2[i])];
      }
    }
    const double total_mass = std::ldexp(1.0, static_cast<int>(n));
    const long long w2 = std::llround(2.0 * w);
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s < count.size(); ++s) {
      if (static_cast<long long>(s) <= w2) le += count[s];
      if (static_cast<long long>(s) >= w2) ge += count[s];
    }
    result.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / total_mass);
    result.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (double t : tie_sizes) var -= (t * t * t - t) / 48.0;
    if (var <= 0.0) {
      fail(Errc::insufficient_data, "wilcoxon variance vanished under ties");
    }
    double num = w - mean;
    if (num > 0.5) {
      num -= 0.5;  // continuity correction
    } else if (num < -0.5) {
      num += 0.5;
    } else {
      num = 0.0;
    }
    const double z = num / std::sqrt(var);
    result.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    result.exact = false;
  }
  return result;
}

EntropyAggregates aggregate_entropies(std::span<const double> per_iteration,
                                      const LabelDistribution& final_pool) {
  if (per_iteration.empty()) {
    fail(Errc::insufficient_data, "no per-iteration entropies to aggregate");
  }
  EntropyAggregates agg;
  double sum = 0.0;
  for (double v : per_iteration) sum += v;
  agg.per_query_mean = sum / static_cast<double>(per_iteration.size());
  double sq = 0.0;
  for (double v : per_iteration) {
    const double d = v - agg.per_query_mean;
    sq += d * d;
  }
  agg.per_query_std = std::sqrt(sq / static_cast<double>(per_iteration.size()));
  agg.final_pool_entropy = label_entropy(final_pool);
  return agg;
}

}  // namespace albench::analysis
