#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/core/error.hpp"

namespace derivmine::agentflow {

// Error{ParseFailed} carrying the 1-based line of the raw response that
// failed.
class ParseFailure : public Error {
 public:
  ParseFailure(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A single repair pass: surrounding code fences are stripped, and lines of
// prose before the first '{' line and after the last '}' line are dropped.
// No bracket surgery.
std::string repair_jsonl(std::string_view raw);

// Parses every non-blank line of the repaired response as a JSON object
// holding all expected keys. Any bad line fails the whole response.
// An empty (or all-blank) response yields no records; prose that repairs to
// nothing fails at line 1.
std::vector<nlohmann::json> parse_agent_jsonl(std::string_view raw, const std::vector<std::string>& expected_keys);

}  // namespace derivmine::agentflow
