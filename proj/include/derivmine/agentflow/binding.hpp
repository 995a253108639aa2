#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace derivmine::agentflow {

enum class ProviderKind { live_http, deterministic_mock, replay };

std::string_view to_string(ProviderKind k) noexcept;
std::optional<ProviderKind> parse_provider_kind(std::string_view s) noexcept;

struct ProviderBinding {
  std::string name = "mock";
  ProviderKind kind = ProviderKind::deterministic_mock;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_name;
  std::chrono::milliseconds timeout{120000};
  int max_attempts = 3;
  // Delay before attempt n+1 is backoff_initial * backoff_factor^(n-1).
  std::chrono::milliseconds backoff_initial{2000};
  double backoff_factor = 2.0;
  // Context budget for one prompt; larger payloads fail with PayloadTooLarge.
  std::size_t max_prompt_bytes = 512 * 1024;
  // live_http: name of the environment variable holding the bearer token.
  std::optional<std::string> api_key_env;
  // deterministic_mock: scripted responses file. replay: transcripts file.
  std::optional<std::string> script_path;
  std::optional<std::string> replay_path;

  std::vector<std::string> validate() const;
  std::chrono::milliseconds backoff_before(int next_attempt) const;

  nlohmann::json to_json() const;
  // Missing keys take the defaults above; type errors are collected as
  // "provider.<key>: ..." messages in *errors.
  static ProviderBinding from_json(const nlohmann::json& j, std::vector<std::string>* errors = nullptr);
};

}  // namespace derivmine::agentflow
