#pragma once

#include "clp/types.hpp"

#include <string>
#include <vector>

namespace clp::test {

/// Collects warnings for the lifetime of the object, then restores the
/// previous handler.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages;

 private:
  WarningHandler previous_;
};

}  // namespace clp::test
