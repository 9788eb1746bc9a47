#include "albench/featurize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "albench/error.hpp"
#include "albench/io.hpp"

namespace albench::featurize {

namespace {

using json = nlohmann::json;

std::string lower_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

// Replaces ill-formed UTF-8 sequences with U+FFFD, counting replaced bytes.
std::string sanitize_utf8(std::string_view in, std::size_t* replaced) {
  static const char kReplacement[] = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    auto b0 = static_cast<unsigned char>(in[i]);
    std::size_t len = 0;
    std::uint32_t min_cp = 0;
    if (b0 < 0x80) {
      out.push_back(in[i]);
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      min_cp = 0x10000;
    } else {
      if (replaced) ++*replaced;
      out.append(kReplacement);
      ++i;
      continue;
    }
    bool ok = i + len <= in.size();
    std::uint32_t cp = b0 & (0x7Fu >> len);
    for (std::size_t k = 1; ok && k < len; ++k) {
      auto bk = static_cast<unsigned char>(in[i + k]);
      if ((bk & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (bk & 0x3Fu);
      }
    }
    if (ok && (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) {
      ok = false;
    }
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      if (replaced) ++*replaced;
      out.append(kReplacement);
      ++i;  // resync one byte at a time
    }
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& what) {
  fail(Errc::format,
       path.string() + ":" + std::to_string(line_no) + ": " + what);
}

Index map_label(const std::string& name, std::vector<std::string>& names,
                std::unordered_map<std::string, Index>& by_name, bool pinned,
                const std::filesystem::path& path, std::size_t line_no) {
  auto it = by_name.find(name);
  if (it != by_name.end()) return it->second;
  if (pinned) {
    line_error(path, line_no, "unknown class \"" + name + "\"");
  }
  auto id = static_cast<Index>(names.size());
  names.push_back(name);
  by_name.emplace(name, id);
  return id;
}

Dataset parse_trec6(const std::filesystem::path& path,
                    const std::vector<std::string>& lines, Split split,
                    const std::vector<std::string>* pinned_names) {
  Dataset ds;
  ds.split = split;
  std::unordered_map<std::string, Index> by_name;
  if (pinned_names) {
    ds.class_names = *pinned_names;
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
      by_name.emplace(ds.class_names[i], static_cast<Index>(i));
    }
  }
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    std::size_t colon = line.find(':');
    std::size_t space = line.find(' ');
    if (colon == std::string::npos || colon == 0 ||
        (space != std::string::npos && colon > space)) {
      line_error(path, n + 1, "expected \"LABEL:fine text\"");
    }
    std::string coarse = line.substr(0, colon);
    std::string text =
        space == std::string::npos ? std::string{} : line.substr(space + 1);
    Index label = map_label(coarse, ds.class_names, by_name,
                            pinned_names != nullptr, path, n + 1);
    ds.instances.push_back({std::move(text), label});
  }
  ds.num_classes = static_cast<Index>(ds.class_names.size());
  return ds;
}

Dataset parse_ag_news(const std::filesystem::path& path,
                      const std::string& text, Split split,
                      const std::vector<std::string>* pinned_names) {
  Dataset ds;
  ds.split = split;
  auto rows = io::parse_csv_text(text, path.string());
  Index max_class = 0;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != 3) {
      line_error(path, n + 1, "expected 3 columns (class,title,description), got " +
                                  std::to_string(row.size()));
    }
    int cls = 0;
    auto [ptr, ec] =
        std::from_chars(row[0].data(), row[0].data() + row[0].size(), cls);
    if (ec != std::errc{} || ptr != row[0].data() + row[0].size() || cls < 1) {
      line_error(path, n + 1, "bad class index \"" + row[0] + "\"");
    }
    max_class = std::max(max_class, static_cast<Index>(cls));
    ds.instances.push_back({row[1] + " " + row[2], static_cast<Index>(cls - 1)});
  }
  if (pinned_names) {
    ds.class_names = *pinned_names;
    if (max_class > static_cast<Index>(ds.class_names.size())) {
      fail(Errc::format, path.string() + ": class index " +
                             std::to_string(max_class) +
                             " exceeds the train split's class count");
    }
  } else {
    for (Index c = 1; c <= max_class; ++c) {
      ds.class_names.push_back(std::to_string(c));
    }
  }
  ds.num_classes = static_cast<Index>(ds.class_names.size());
  return ds;
}

Dataset parse_jsonl(const std::filesystem::path& path,
                    const std::vector<std::string>& lines, Split split,
                    const std::vector<std::string>* pinned_names) {
  Dataset ds;
  ds.split = split;
  std::unordered_map<std::string, Index> by_name;
  if (pinned_names) {
    ds.class_names = *pinned_names;
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
      by_name.emplace(ds.class_names[i], static_cast<Index>(i));
    }
  }
  bool saw_int_labels = false;
  Index max_int_label = -1;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      line_error(path, n + 1, "not a JSON object");
    }
    if (!obj.contains("text") || !obj["text"].is_string()) {
      line_error(path, n + 1, "missing string field \"text\"");
    }
    if (!obj.contains("label")) {
      line_error(path, n + 1, "missing field \"label\"");
    }
    const json& label = obj["label"];
    Index id;
    if (label.is_string()) {
      id = map_label(label.get<std::string>(), ds.class_names, by_name,
                     pinned_names != nullptr, path, n + 1);
    } else if (label.is_number_integer()) {
      auto v = label.get<std::int64_t>();
      if (v < 0) line_error(path, n + 1, "negative integer label");
      id = static_cast<Index>(v);
      saw_int_labels = true;
      max_int_label = std::max(max_int_label, id);
      if (pinned_names &&
          id >= static_cast<Index>(pinned_names->size())) {
        line_error(path, n + 1, "label " + std::to_string(v) +
                                    " exceeds the train split's class count");
      }
    } else {
      line_error(path, n + 1, "field \"label\" must be a string or an integer");
    }
    ds.instances.push_back({obj["text"].get<std::string>(), id});
  }
  if (saw_int_labels && !ds.class_names.empty() && !pinned_names) {
    fail(Errc::format,
         path.string() + ": labels mix strings and integers");
  }
  if (saw_int_labels && !pinned_names) {
    for (Index c = 0; c <= max_int_label; ++c) {
      ds.class_names.push_back(std::to_string(c));
    }
  }
  ds.num_classes = static_cast<Index>(ds.class_names.size());
  return ds;
}

Dataset parse_corpus_impl(const std::filesystem::path& path, CorpusFormat format,
                          Split split,
                          const std::vector<std::string>* pinned_names,
                          ParseStats* stats) {
  if (!std::filesystem::exists(path)) {
    fail(Errc::io, "corpus file not found: " + path.string());
  }
  std::size_t replaced = 0;
  std::string text = sanitize_utf8(io::read_file(path), &replaced);
  if (replaced > 0) {
    log_warning(path.string() + ": replaced " + std::to_string(replaced) +
                " invalid UTF-8 bytes");
  }

  Dataset ds;
  if (format == CorpusFormat::ag_news_csv) {
    ds = parse_ag_news(path, text, split, pinned_names);
  } else {
    auto lines = split_lines(text);
    if (stats) stats->lines = lines.size();
    ds = format == CorpusFormat::trec6
             ? parse_trec6(path, lines, split, pinned_names)
             : parse_jsonl(path, lines, split, pinned_names);
  }
  if (stats) stats->replaced_bytes = replaced;
  if (ds.instances.empty()) {
    fail(Errc::format, path.string() + ": no instances parsed");
  }
  ds.validate();
  return ds;
}

}  // namespace

CorpusFormat corpus_format_from_name(std::string_view name) {
  std::string n = lower_ascii(std::string(name));
  if (n == "trec6") return CorpusFormat::trec6;
  if (n == "ag_news_csv") return CorpusFormat::ag_news_csv;
  if (n == "jsonl") return CorpusFormat::jsonl;
  fail(Errc::config, "unknown corpus format \"" + std::string(name) + "\"");
}

const char* corpus_format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::trec6: return "trec6";
    case CorpusFormat::ag_news_csv: return "ag_news_csv";
    case CorpusFormat::jsonl: return "jsonl";
  }
  return "unknown";
}

void FeaturizerConfig::validate() const {
  if (hash_dim < 2 || (hash_dim & (hash_dim - 1)) != 0) {
    fail(Errc::config, "hash_dim must be a power of two >= 2, got " +
                           std::to_string(hash_dim));
  }
}

Dataset parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                     Split split, ParseStats* stats) {
  return parse_corpus_impl(path, format, split, nullptr, stats);
}

Dataset parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                     Split split, const std::vector<std::string>& class_names,
                     ParseStats* stats) {
  return parse_corpus_impl(path, format, split, &class_names, stats);
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::string sanitized = sanitize_utf8(text, nullptr);
  text = sanitized;
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char ch : text) {
    auto b = static_cast<unsigned char>(ch);
    bool word = (b >= 0x80) || (b >= '0' && b <= '9') || (b >= 'a' && b <= 'z') ||
                (b >= 'A' && b <= 'Z');
    if (word) {
      if (lowercase && b >= 'A' && b <= 'Z') {
        current.push_back(static_cast<char>(b - 'A' + 'a'));
      } else {
        current.push_back(ch);
      }
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint32_t token_bucket(std::string_view token, int hash_dim) {
  return static_cast<std::uint32_t>(fnv1a64(token) &
                                    static_cast<std::uint64_t>(hash_dim - 1));
}

FittedFeaturizer fit_featurizer(const Dataset& train,
                                const FeaturizerConfig& config) {
  config.validate();
  if (config.mode != FeaturizerConfig::Mode::hashed_tfidf) {
    fail(Errc::config, "fit_featurizer requires mode=hashed_tfidf");
  }
  FittedFeaturizer f;
  f.config_ = config;
  f.train_docs_ = train.size();

  std::vector<std::size_t> df(static_cast<std::size_t>(config.hash_dim), 0);
  std::vector<std::uint32_t> seen;
  for (const auto& inst : train.instances) {
    seen.clear();
    for (const auto& tok : tokenize(inst.text, config.lowercase)) {
      seen.push_back(token_bucket(tok, config.hash_dim));
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (std::uint32_t b : seen) ++df[b];
  }

  const double n = static_cast<double>(train.size());
  f.idf_.resize(df.size());
  for (std::size_t b = 0; b < df.size(); ++b) {
    f.idf_[b] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[b]))) + 1.0;
  }
  return f;
}

FeatureMatrix FittedFeaturizer::transform(const Dataset& dataset) const {
  FeatureMatrix out(dataset.size(), idf_.size());
  std::unordered_map<std::uint32_t, double> counts;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    counts.clear();
    for (const auto& tok : tokenize(dataset.instances[i].text, config_.lowercase)) {
      counts[token_bucket(tok, config_.hash_dim)] += 1.0;
    }
    double* row = out.row_ptr(i);
    double norm_sq = 0.0;
    for (const auto& [bucket, count] : counts) {
      double tf = config_.sublinear_tf ? 1.0 + std::log(count) : count;
      double w = tf * idf_[bucket];
      row[bucket] = w;
      norm_sq += w * w;
    }
    if (config_.l2_normalize && norm_sq > 0.0) {
      double inv = 1.0 / std::sqrt(norm_sq);
      for (const auto& [bucket, count] : counts) {
        (void)count;
        row[bucket] *= inv;
      }
    }
  }
  return out;
}

FeatureMatrix transform(const FittedFeaturizer& featurizer,
                        const Dataset& dataset) {
  return featurizer.transform(dataset);
}

FeatureMatrix load_embeddings(const std::filesystem::path& path,
                              std::size_t expected_rows) {
  if (!std::filesystem::exists(path)) {
    fail(Errc::io, "embedding file not found: " + path.string());
  }
  std::string text = io::read_file(path);
  auto lines = split_lines(text);

  std::vector<std::vector<double>> rows;
  bool jsonl = false;
  for (const auto& line : lines) {
    auto pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;
    jsonl = line[pos] == '[';
    break;
  }

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    if (jsonl) {
      json arr = json::parse(line, nullptr, false);
      if (arr.is_discarded() || !arr.is_array()) {
        line_error(path, n + 1, "not a JSON array");
      }
      for (const auto& v : arr) {
        if (!v.is_number()) line_error(path, n + 1, "non-numeric entry");
        row.push_back(v.get<double>());
      }
    } else {
      std::size_t start = 0;
      const std::string piece_sep = ",";
      while (start <= line.size()) {
        std::size_t end = line.find(piece_sep, start);
        std::string field = line.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        auto b = field.find_first_not_of(" \t");
        auto e = field.find_last_not_of(" \t");
        if (b == std::string::npos) {
          line_error(path, n + 1, "empty numeric field");
        }
        field = field.substr(b, e - b + 1);
        double value = 0.0;
        auto [ptr, ec] =
            std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
          line_error(path, n + 1, "bad number \"" + field + "\"");
        }
        row.push_back(value);
        if (end == std::string::npos) break;
        start = end + 1;
      }
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        fail(Errc::value, path.string() + ":" + std::to_string(n + 1) +
                              ": non-finite value");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(Errc::shape, path.string() + ":" + std::to_string(n + 1) +
                            ": ragged row (got " + std::to_string(row.size()) +
                            " values, expected " +
                            std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }

  if (rows.size() != expected_rows) {
    fail(Errc::shape, path.string() + ": expected " +
                          std::to_string(expected_rows) + " rows, got " +
                          std::to_string(rows.size()));
  }
  FeatureMatrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

}  // namespace albench::featurize
