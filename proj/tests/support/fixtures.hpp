#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "albench/error.hpp"
#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench::testsupport {

// True iff fn throws albench::Error with exactly this code.
inline bool fails_with(Errc code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  } catch (...) {
    return false;
  }
  return false;
}

// Collects warnings for the duration of a scope.
class WarningCapture {
 public:
  WarningCapture() {
    set_warning_sink([this](const std::string& msg) { messages.push_back(msg); });
  }
  ~WarningCapture() { set_warning_sink({}); }

  bool any_contains(const std::string& needle) const {
    for (const auto& m : messages)
      if (m.find(needle) != std::string::npos) return true;
    return false;
  }

  std::vector<std::string> messages;
};

// Fresh empty directory under the system temp area; wiped if it exists.
std::filesystem::path fresh_dir(const std::string& name);

// Synthetic corpus in the TREC question layout ("COARSE:fine text"): 6
// classes in round-robin order (near-uniform label distribution), texts built
// from class-specific keywords plus shared filler. Deterministic in (n, seed).
std::string trec_corpus(std::size_t n, std::uint64_t seed);

// Synthetic corpus in the AG CSV layout ("idx","title","description") with 4
// round-robin classes.
std::string ag_corpus(std::size_t n, std::uint64_t seed);

struct GaussianData {
  std::string jsonl;       // {"text":"...","label":k} lines
  std::string embeddings;  // CSV, one row per instance
  std::vector<Index> labels;
};

// Gaussian class clusters in `dim` dimensions: class c's mean sits at
// `separation` along axis c, unit noise. Smaller separation = more overlap.
// Labels are round-robin, or drawn with exact largest-remainder counts when
// `class_weights` is given (e.g. to starve some classes).
GaussianData gaussian_clusters(std::size_t n, int classes, int dim,
                               double separation, std::uint64_t seed);
GaussianData gaussian_clusters(std::size_t n, int classes, int dim,
                               double separation, std::uint64_t seed,
                               std::span<const double> class_weights);

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                     double lo = -1.0, double hi = 1.0);

}  // namespace albench::testsupport
