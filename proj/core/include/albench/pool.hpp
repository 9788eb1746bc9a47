#pragma once

#include <span>
#include <vector>

#include "albench/matrix.hpp"

namespace albench {

struct LabelDistribution {
  std::vector<double> probs;

  std::size_t num_classes() const { return probs.size(); }

  // Throws Errc::value unless entries are non-negative and sum to 1
  // within 1e-9.
  void validate() const;
};

// Partition of instance indices 0..N-1 into a labeled and an unlabeled set,
// with the hidden ground-truth labels playing the oracle. Both index sets are
// kept sorted so iteration order is deterministic. Pools are immutable;
// labeling produces a new Pool.
class Pool {
 public:
  Pool() = default;

  static Pool of_unlabeled(std::vector<Index> oracle_labels, Index num_classes);

  const std::vector<Index>& labeled() const { return labeled_; }
  const std::vector<Index>& unlabeled() const { return unlabeled_; }
  const std::vector<Index>& oracle_labels() const { return oracle_labels_; }
  Index num_classes() const { return num_classes_; }
  std::size_t size() const { return oracle_labels_.size(); }

  bool is_unlabeled(Index i) const;
  bool is_labeled(Index i) const;

 private:
  std::vector<Index> labeled_;
  std::vector<Index> unlabeled_;
  std::vector<Index> oracle_labels_;
  Index num_classes_ = 0;

  friend Pool label_instances(const Pool& pool, std::span<const Index> batch);
};

// Moves `batch` from unlabeled to labeled. Throws Errc::invalid_batch on a
// duplicate index or an index that is not currently unlabeled.
Pool label_instances(const Pool& pool, std::span<const Index> batch);

// probs[c] = (count(c) + smoothing) / (|indices| + C * smoothing) over the
// oracle labels of `indices`. Throws Errc::empty_selection on empty input.
LabelDistribution empirical_label_distribution(const Pool& pool,
                                               std::span<const Index> indices,
                                               double smoothing = 0.0);

}  // namespace albench
