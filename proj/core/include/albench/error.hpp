#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace albench {

enum class Errc {
  invalid_batch,
  empty_selection,
  format,
  shape,
  value,
  divergence,
  exhausted_pool,
  needs_seed,
  config,
  undefined_metric,
  insufficient_data,
  io,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }
  const char* code_name() const { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

// Warnings go to stderr by default; tests may install a sink to capture them.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);  // empty sink restores the default
void log_warning(const std::string& message);

}  // namespace albench
