#include "albench/error.hpp"

#include <iostream>
#include <mutex>

namespace albench {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_batch: return "invalid_batch";
    case Errc::empty_selection: return "empty_selection";
    case Errc::format: return "format";
    case Errc::shape: return "shape";
    case Errc::value: return "value";
    case Errc::divergence: return "divergence";
    case Errc::exhausted_pool: return "exhausted_pool";
    case Errc::needs_seed: return "needs_seed";
    case Errc::config: return "config";
    case Errc::undefined_metric: return "undefined_metric";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::io: return "io";
  }
  return "unknown";
}

namespace {
std::mutex g_warning_mutex;
WarningSink g_warning_sink;
}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(g_warning_mutex);
  g_warning_sink = std::move(sink);
}

void log_warning(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_warning_mutex);
  if (g_warning_sink) {
    g_warning_sink(message);
  } else {
    std::cerr << "[warn] " << message << "\n";
  }
}

}  // namespace albench
