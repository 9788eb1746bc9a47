#include "albench/dataset.hpp"

#include <string>

#include "albench/error.hpp"

namespace albench {

std::vector<Index> Dataset::labels() const {
  std::vector<Index> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(inst.label);
  return out;
}

void Dataset::validate() const {
  if (instances.empty()) {
    fail(Errc::format, "dataset has no instances");
  }
  if (num_classes < 2) {
    fail(Errc::format, "dataset needs at least 2 classes, got " +
                           std::to_string(num_classes));
  }
  if (!class_names.empty() &&
      class_names.size() != static_cast<std::size_t>(num_classes)) {
    fail(Errc::format, "class_names size does not match num_classes");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    Index label = instances[i].label;
    if (label < 0 || label >= num_classes) {
      fail(Errc::format, "instance " + std::to_string(i) +
                             " has label " + std::to_string(label) +
                             " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace albench
