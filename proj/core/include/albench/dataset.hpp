#pragma once

#include <string>
#include <vector>

#include "albench/matrix.hpp"

namespace albench {

enum class Split { train, validation };

struct Instance {
  std::string text;
  Index label = 0;
};

struct Dataset {
  std::vector<Instance> instances;
  Index num_classes = 0;
  Split split = Split::train;
  std::vector<std::string> class_names;

  std::size_t size() const { return instances.size(); }
  std::vector<Index> labels() const;

  // Throws Errc::format if the invariants do not hold: non-empty instance
  // list, num_classes >= 2, every label in [0, num_classes).
  void validate() const;
};

}  // namespace albench
