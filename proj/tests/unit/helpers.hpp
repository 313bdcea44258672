#pragma once

#include <string>

#include "iotstage/scenario.hpp"

namespace testutil {

inline std::string source_path(const std::string& relative) {
  return std::string(IOTSTAGE_SOURCE_DIR) + "/" + relative;
}

inline iotstage::Scenario load(const std::string& relative) {
  return iotstage::load_scenario(source_path(relative));
}

inline iotstage::Duration ms(double v) {
  return iotstage::Duration(static_cast<std::int64_t>(v * 1e6));
}

}  // namespace testutil
