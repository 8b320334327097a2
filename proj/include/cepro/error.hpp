#pragma once

#include <stdexcept>
#include <string>

namespace cepro {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or OS level failure (missing path, unreadable file).
struct IoError : Error {
  using Error::Error;
};

// Malformed input text; message carries a line/field locator.
struct ParseError : Error {
  using Error::Error;
};

// Invalid configuration or domain-rule violation (bad thresholds,
// duplicate ids, out-of-bounds parameters, broken pipeline typing).
struct ConfigError : Error {
  using Error::Error;
};

// Model endpoint failure; retriable distinguishes transient transport
// errors from permanent rejections.
struct EndpointError : Error {
  explicit EndpointError(const std::string& msg, bool retriable_ = true)
      : Error(msg), retriable(retriable_) {}
  bool retriable;
};

// Scripted stub ran out of responses for an (agent, turn) pair.
struct ScriptError : Error {
  using Error::Error;
};

// Tool invocation rejected (unauthorized or repeatedly unknown).
struct ToolError : Error {
  using Error::Error;
};

}  // namespace cepro
