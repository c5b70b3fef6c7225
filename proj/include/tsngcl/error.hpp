#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsngcl {

enum class ErrorCode {
  NoFlowsOnPort,
  WindowTooSmall,
  NonHarmonicPeriod,
  UnstableQueue,
  EmptyDomain,
  NoWindows,
  NoFeasibleSolutionFound,
  Infeasible,
  Timeout,
  TopologyTooSmall,
  ParseError,
  ValidationFailed,
  ConfigError,
  FileNotFound,
  Usage,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoFlowsOnPort: return "NoFlowsOnPort";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::NonHarmonicPeriod: return "NonHarmonicPeriod";
    case ErrorCode::UnstableQueue: return "UnstableQueue";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::NoWindows: return "NoWindows";
    case ErrorCode::NoFeasibleSolutionFound: return "NoFeasibleSolutionFound";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TopologyTooSmall: return "TopologyTooSmall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsngcl
