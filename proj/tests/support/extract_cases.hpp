#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "derivmine/core/files.hpp"
#include "derivmine/texmath/extract.hpp"
#include "support/support.hpp"

namespace dmtest {

using derivmine::texmath::ExtractionReport;
using derivmine::texmath::SourceText;

// One annotated input: a .tex file or a directory of files read in name order.
struct ExtractCase {
  std::filesystem::path input;
  std::vector<std::string> names;
  std::vector<std::string> texts;

  std::vector<SourceText> sources() const {
    std::vector<SourceText> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({names[i], texts[i]});
    return out;
  }
};

inline std::vector<ExtractCase> load_cases() {
  std::vector<std::filesystem::path> items;
  for (const auto& e : std::filesystem::directory_iterator(fixtures() / "extract"))
    if (e.path().extension() == ".tex" || e.is_directory()) items.push_back(e.path());
  std::sort(items.begin(), items.end());
  std::vector<ExtractCase> cases;
  for (const auto& p : items) {
    ExtractCase c{p, {}, {}};
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::directory_iterator(p)) files.push_back(e.path());
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(p);
    }
    for (const auto& f : files) {
      c.names.push_back(f.filename().string());
      c.texts.push_back(derivmine::read_file(f));
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

inline nlohmann::json summarize(const ExtractionReport& r) {
  using nlohmann::json;
  json got{{"skipped_inline", r.skipped_inline},
           {"duplicates_merged", r.duplicates_merged},
           {"diagnostics", r.diagnostics.size()},
           {"expressions", json::array()}};
  for (const auto& e : r.expressions)
    got["expressions"].push_back({{"kind", derivmine::texmath::to_string(e.kind)},
                                  {"latex", e.latex},
                                  {"number", e.number_label ? json(*e.number_label) : json(nullptr)}});
  return got;
}

// The annotation stored next to a case.
inline nlohmann::json expected_for(const ExtractCase& c) {
  return nlohmann::json::parse(
      derivmine::read_file(c.input.parent_path() / (c.input.stem().string() + ".expected.json")));
}

}  // namespace dmtest
