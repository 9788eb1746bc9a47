#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

namespace albench::testsupport {

namespace {

const char* kTrecLabels[6] = {"ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"};
const char* kTrecWords[6] = {"expansion", "definition", "creature",
                             "person",    "city",       "count"};
const char* kAgTitles[4] = {"markets", "league", "cabinet", "telescope"};

std::string filler(Rng& rng, int words) {
  std::string out;
  for (int w = 0; w < words; ++w) {
    out += " w" + std::to_string(rng.bounded(64));
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("albench_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string trec_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "trec-fixture");
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 6;
    out += kTrecLabels[c];
    out += ":fine what ";
    out += kTrecWords[c];
    out += " ";
    out += kTrecWords[c];
    out += filler(rng, 4);
    out += " ?\n";
  }
  return out;
}

std::string ag_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "ag-fixture");
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 4;
    out += "\"" + std::to_string(c + 1) + "\",\"";
    out += kAgTitles[c];
    out += " update\",\"report on ";
    out += kAgTitles[c];
    out += filler(rng, 5);
    out += "\"\n";
  }
  return out;
}

GaussianData gaussian_clusters(std::size_t n, int classes, int dim,
                               double separation, std::uint64_t seed) {
  return gaussian_clusters(n, classes, dim, separation, seed, {});
}

GaussianData gaussian_clusters(std::size_t n, int classes, int dim,
                               double separation, std::uint64_t seed,
                               std::span<const double> class_weights) {
  Rng rng = Rng::stream(seed, "gaussian-fixture");

  // Round-robin by default; with weights, exact largest-remainder counts
  // shuffled into a deterministic order.
  std::vector<Index> labels(n);
  if (class_weights.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = static_cast<Index>(i % static_cast<std::size_t>(classes));
  } else {
    double total = 0.0;
    for (double w : class_weights) total += w;
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
    std::size_t assigned = 0;
    std::vector<std::pair<double, std::size_t>> remainders;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double exact = static_cast<double>(n) * class_weights[c] / total;
      counts[c] = static_cast<std::size_t>(exact);
      assigned += counts[c];
      remainders.emplace_back(-(exact - std::floor(exact)), c);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; assigned < n; ++k, ++assigned)
      ++counts[remainders[k % remainders.size()].second];
    std::size_t i = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
      for (std::size_t k = 0; k < counts[c]; ++k)
        labels[i++] = static_cast<Index>(c);
    rng.shuffle(labels);
  }

  GaussianData data;
  for (std::size_t i = 0; i < n; ++i) {
    const Index c = labels[i];
    data.labels.push_back(c);
    data.jsonl += "{\"text\":\"g" + std::to_string(i) + "\",\"label\":" +
                  std::to_string(c) + "}\n";
    for (int j = 0; j < dim; ++j) {
      double v = rng.normal();
      if (j == c) v += separation;
      if (j > 0) data.embeddings += ",";
      data.embeddings += fmt(v);
    }
    data.embeddings += "\n";
  }
  return data;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo,
                     double hi) {
  Matrix m(rows, cols);
  for (double& v : m.mutable_data()) v = rng.uniform_range(lo, hi);
  return m;
}

}  // namespace albench::testsupport
