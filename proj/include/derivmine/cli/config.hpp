#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/agentflow/binding.hpp"
#include "derivmine/corpus/types.hpp"
#include "derivmine/curation/service.hpp"

namespace derivmine::cli {

using json = nlohmann::json;

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};

struct EvalOptions {
  int responses_per_item = 3;
  int concurrency = 1;
  // Grader binding; the main provider when absent.
  std::optional<agentflow::ProviderBinding> grader;
};

// Relative paths are resolved against the config file's directory.
struct Config {
  std::filesystem::path source;  // the config file, empty for defaults
  std::filesystem::path corpus_dir = "corpus";
  std::filesystem::path store_dir = "store";
  std::filesystem::path export_dir = "exports";
  std::filesystem::path scores_dir = "scores";
  corpus::FilterPolicy filter;
  agentflow::ProviderBinding provider;
  // False when the file has no provider section.
  bool provider_configured = false;
  std::map<std::string, std::filesystem::path> prompts;
  std::size_t concurrency = 1;
  curation::CurationOptions curation;
  ServeOptions serve;
  EvalOptions eval;

  // Fully defaulted form, as written to run manifests.
  json to_json() const;
};

// Every problem found, one "<field>: <message>" per entry.
std::vector<std::string> config_errors(const json& j);

// Throws Error{ConfigError} listing every problem at once.
Config config_from_json(const json& j, const std::filesystem::path& base_dir = {});
// Throws Error{ConfigError} for a missing or unparsable file.
Config validate_config(const std::filesystem::path& path);

}  // namespace derivmine::cli
