#pragma once

#include <span>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/pool.hpp"

namespace albench::analysis {

struct BatchMetrics {
  double diversity = 0.0;
  double representativeness = 0.0;
  double label_entropy = 0.0;
  double kl_to_ground_truth = 0.0;
  double selection_runtime_s = 0.0;
};

struct EntropyAggregates {
  double per_query_mean = 0.0;
  double per_query_std = 0.0;  // population std
  double final_pool_entropy = 0.0;
};

// Mean pairwise Euclidean distance between the rows of `m` (needs >= 2 rows).
double mean_pairwise_distance(const Matrix& m);

// (mean pairwise distance within the batch) / (mean pairwise distance within
// the pool). The pool baseline is exact up to 2000 rows, otherwise estimated
// over a fixed-seed sample of 2000 rows. Throws Errc::undefined_metric for a
// batch or pool of fewer than 2 rows.
double diversity(const Matrix& batch_reprs, const Matrix& pool_reprs);

// Mean distance from reprs[self] to its k nearest rows among `candidates`,
// excluding self.
double mean_knn_distance(const Matrix& reprs, Index self,
                         std::span<const Index> candidates, int k);

// KNN-density of the selected instances within the unlabeled pool, normalized
// by the pool's own mean k-NN distance so the figure is scale-free. Densities
// are floored at distance 1e-12 (with a warning) for coincident points.
// Throws Errc::undefined_metric when the unlabeled pool has fewer than k+1
// instances.
double representativeness(std::span<const Index> batch_indices,
                          const Pool& pool, const Matrix& reprs, int k);

// H = -sum p ln p with 0 ln 0 = 0. Natural log.
double label_entropy(const LabelDistribution& dist);

// KL(p || q') with q' = (q + epsilon) / sum(q + epsilon); zero p entries
// contribute 0.
double kl_divergence(const LabelDistribution& p, const LabelDistribution& q,
                     double epsilon = 1e-9);

// Unweighted mean of per-class F1. A class absent from both predicted and
// actual contributes 0 (logged).
double macro_f1(std::span<const Index> predicted, std::span<const Index> actual,
                Index num_classes);
double micro_f1(std::span<const Index> predicted, std::span<const Index> actual,
                Index num_classes);

struct WilcoxonResult {
  double statistic = 0.0;    // W, rank sum of positive differences
  double p_two_sided = 1.0;
  std::size_t n = 0;         // pairs used after dropping zero differences
  bool exact = false;        // exact null distribution (n <= 20)
};

// Signed-rank test with average ranks for tied |differences|. Exact null
// distribution for n <= 20, normal approximation with tie correction above.
// Throws Errc::insufficient_data when fewer than 5 nonzero differences
// remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y);

EntropyAggregates aggregate_entropies(std::span<const double> per_iteration,
                                      const LabelDistribution& final_pool);

}  // namespace albench::analysis
