#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/core/clock.hpp"

namespace derivmine::cli {

enum class Stage { ingest, filter, extract, generate, serve, export_, eval };

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

struct RunManifest {
  std::string config_path;
  std::string corpus_path;
  std::vector<Stage> stages;
  std::string run_id;
  std::string started_at;

  nlohmann::json to_json() const;
};

// Throws Error{UsageError} for an empty list, a repeated stage or stages out
// of pipeline order.
RunManifest make_manifest(std::string config_path, std::string corpus_path, std::vector<Stage> stages,
                          const Clock& clock);

// "ingest,filter,extract" -> stages. Throws Error{UsageError}.
std::vector<Stage> parse_stage_list(std::string_view list);

}  // namespace derivmine::cli
