#include "albench/pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "albench/error.hpp"

namespace albench {

void LabelDistribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      fail(Errc::value, "label distribution has a negative or NaN entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(Errc::value,
         "label distribution sums to " + std::to_string(sum) + ", not 1");
  }
}

Pool Pool::of_unlabeled(std::vector<Index> oracle_labels, Index num_classes) {
  if (num_classes < 2) {
    fail(Errc::value, "pool needs at least 2 classes");
  }
  for (Index label : oracle_labels) {
    if (label < 0 || label >= num_classes) {
      fail(Errc::value, "oracle label " + std::to_string(label) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  Pool pool;
  pool.oracle_labels_ = std::move(oracle_labels);
  pool.num_classes_ = num_classes;
  pool.unlabeled_.resize(pool.oracle_labels_.size());
  std::iota(pool.unlabeled_.begin(), pool.unlabeled_.end(), Index{0});
  return pool;
}

bool Pool::is_unlabeled(Index i) const {
  return std::binary_search(unlabeled_.begin(), unlabeled_.end(), i);
}

bool Pool::is_labeled(Index i) const {
  return std::binary_search(labeled_.begin(), labeled_.end(), i);
}

Pool label_instances(const Pool& pool, std::span<const Index> batch) {
  std::vector<Index> sorted_batch(batch.begin(), batch.end());
  std::sort(sorted_batch.begin(), sorted_batch.end());
  for (std::size_t i = 0; i + 1 < sorted_batch.size(); ++i) {
    if (sorted_batch[i] == sorted_batch[i + 1]) {
      fail(Errc::invalid_batch,
           "duplicate index " + std::to_string(sorted_batch[i]) + " in batch");
    }
  }
  for (Index i : sorted_batch) {
    if (!pool.is_unlabeled(i)) {
      fail(Errc::invalid_batch,
           "index " + std::to_string(i) + " is not in the unlabeled set");
    }
  }

  Pool out;
  out.oracle_labels_ = pool.oracle_labels_;
  out.num_classes_ = pool.num_classes_;

  out.labeled_.reserve(pool.labeled_.size() + sorted_batch.size());
  std::merge(pool.labeled_.begin(), pool.labeled_.end(), sorted_batch.begin(),
             sorted_batch.end(), std::back_inserter(out.labeled_));

  out.unlabeled_.reserve(pool.unlabeled_.size() - sorted_batch.size());
  std::set_difference(pool.unlabeled_.begin(), pool.unlabeled_.end(),
                      sorted_batch.begin(), sorted_batch.end(),
                      std::back_inserter(out.unlabeled_));
  return out;
}

LabelDistribution empirical_label_distribution(const Pool& pool,
                                               std::span<const Index> indices,
                                               double smoothing) {
  if (indices.empty()) {
    fail(Errc::empty_selection,
         "empirical label distribution over an empty selection");
  }
  if (smoothing < 0.0) {
    fail(Errc::value, "smoothing must be non-negative");
  }
  const auto num_classes = static_cast<std::size_t>(pool.num_classes());
  std::vector<double> counts(num_classes, 0.0);
  for (Index i : indices) {
    counts[static_cast<std::size_t>(pool.oracle_labels()[static_cast<std::size_t>(i)])] += 1.0;
  }
  double denom = static_cast<double>(indices.size()) +
                 static_cast<double>(num_classes) * smoothing;
  LabelDistribution dist;
  dist.probs.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    dist.probs[c] = (counts[c] + smoothing) / denom;
  }
  return dist;
}

}  // namespace albench
