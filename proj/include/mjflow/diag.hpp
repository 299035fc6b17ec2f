#pragma once

#include <string>
#include <vector>

namespace mjflow {

enum class DiagPhase { Parse, Bind, Config };

struct Diagnostic {
  DiagPhase phase = DiagPhase::Parse;
  std::string file;
  int line = 0;
  int column = 0;
  std::string message;

  std::string to_string() const;
};

using DiagList = std::vector<Diagnostic>;

} // namespace mjflow
