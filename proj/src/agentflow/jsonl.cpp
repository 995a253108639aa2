#include "derivmine/agentflow/jsonl.hpp"

#include <optional>

namespace derivmine::agentflow {

ParseFailure::ParseFailure(std::size_t line, const std::string& message)
    : Error(Errc::ParseFailed, "line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<Line> split_lines(std::string_view raw) {
  std::vector<Line> out;
  std::size_t start = 0, n = 1;
  while (start <= raw.size()) {
    auto nl = raw.find('\n', start);
    if (nl == std::string_view::npos) nl = raw.size();
    out.push_back({n++, raw.substr(start, nl - start)});
    start = nl + 1;
  }
  return out;
}

bool is_fence(std::string_view line) { return trim(line).starts_with("```"); }

std::vector<Line> repaired_lines(std::string_view raw) {
  auto lines = split_lines(raw);
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i].text)) continue;
    if (!first) first = i;
    last = i;
  }
  std::size_t b = 0, e = lines.size();
  if (first && last && *first != *last) {
    b = *first + 1;
    e = *last;
  } else if (first) {
    // A lone fence: keep whichever side carries the records.
    if (*first == 0 || trim(lines[*first - 1].text).empty()) b = *first + 1;
    else e = *first;
  }
  while (b < e && !trim(lines[b].text).starts_with("{")) ++b;
  while (e > b) {
    const auto t = trim(lines[e - 1].text);
    if (t.ends_with("}") || t.starts_with("{")) break;
    --e;
  }
  return {lines.begin() + static_cast<std::ptrdiff_t>(b), lines.begin() + static_cast<std::ptrdiff_t>(e)};
}

}  // namespace

std::string repair_jsonl(std::string_view raw) {
  std::string out;
  for (const auto& l : repaired_lines(raw)) {
    out.append(l.text);
    out += '\n';
  }
  return out;
}

std::vector<nlohmann::json> parse_agent_jsonl(std::string_view raw, const std::vector<std::string>& expected_keys) {
  std::vector<nlohmann::json> out;
  const auto lines = repaired_lines(raw);
  if (lines.empty()) {
    for (const auto& l : split_lines(raw))
      if (!trim(l.text).empty()) throw ParseFailure(l.number, "no JSON records in response");
    return out;
  }
  for (const auto& l : lines) {
    const auto text = trim(l.text);
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseFailure(l.number, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseFailure(l.number, "record is not a JSON object");
    for (const auto& k : expected_keys)
      if (!j.contains(k)) throw ParseFailure(l.number, "missing key \"" + k + "\"");
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace derivmine::agentflow
