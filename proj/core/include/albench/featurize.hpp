#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "albench/dataset.hpp"
#include "albench/matrix.hpp"

namespace albench::featurize {

enum class CorpusFormat { trec6, ag_news_csv, jsonl };

CorpusFormat corpus_format_from_name(std::string_view name);
const char* corpus_format_name(CorpusFormat format);

struct FeaturizerConfig {
  enum class Mode { hashed_tfidf, precomputed };

  Mode mode = Mode::hashed_tfidf;
  int hash_dim = 4096;  // power of two, >= 2
  bool lowercase = true;
  bool sublinear_tf = true;
  bool l2_normalize = true;

  void validate() const;
};

struct ParseStats {
  std::size_t replaced_bytes = 0;  // invalid UTF-8 bytes replaced with U+FFFD
  std::size_t lines = 0;
};

// Parses one corpus file. Labels are mapped to contiguous 0..C-1: trec6 in
// first-appearance order of the coarse label, ag_news_csv from the 1-based
// class index column, jsonl in first-appearance order of the "label" value
// (or the integer value itself when labels are ints).
Dataset parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                     Split split, ParseStats* stats = nullptr);

// Same, but with the label map pinned to `class_names` (for parsing a
// validation split against the train split's classes).
Dataset parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                     Split split, const std::vector<std::string>& class_names,
                     ParseStats* stats = nullptr);

// Tokenization: decode UTF-8 (invalid bytes become U+FFFD), optionally
// ASCII-lowercase, then split into maximal runs of word codepoints. ASCII
// alphanumerics and every codepoint >= U+0080 count as word characters, which
// keeps code-mixed text intact without a full Unicode property table.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

// FNV-1a 64-bit hash of the token, reduced mod hash_dim.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint32_t token_bucket(std::string_view token, int hash_dim);

// Hashed TF-IDF state: per-bucket document frequencies from the train split
// only. IDF(b) = ln((1 + N) / (1 + df(b))) + 1.
class FittedFeaturizer {
 public:
  const FeaturizerConfig& config() const { return config_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t train_docs() const { return train_docs_; }

  FeatureMatrix transform(const Dataset& dataset) const;

 private:
  FeaturizerConfig config_;
  std::vector<double> idf_;
  std::size_t train_docs_ = 0;

  friend FittedFeaturizer fit_featurizer(const Dataset& train,
                                         const FeaturizerConfig& config);
};

FittedFeaturizer fit_featurizer(const Dataset& train,
                                const FeaturizerConfig& config);

FeatureMatrix transform(const FittedFeaturizer& featurizer,
                        const Dataset& dataset);

// Loads precomputed dense embeddings: CSV (comma-separated floats, one row
// per line) or JSONL (one JSON array per line), sniffed from the first
// non-empty line. Dim is inferred from the first row.
FeatureMatrix load_embeddings(const std::filesystem::path& path,
                              std::size_t expected_rows);

}  // namespace albench::featurize
