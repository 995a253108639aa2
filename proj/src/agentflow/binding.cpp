#include "derivmine/agentflow/binding.hpp"

#include <cmath>

namespace derivmine::agentflow {

using nlohmann::json;

std::string_view to_string(ProviderKind k) noexcept {
  switch (k) {
    case ProviderKind::live_http: return "live_http";
    case ProviderKind::deterministic_mock: return "deterministic_mock";
    case ProviderKind::replay: return "replay";
  }
  return "deterministic_mock";
}

std::optional<ProviderKind> parse_provider_kind(std::string_view s) noexcept {
  for (auto k : {ProviderKind::live_http, ProviderKind::deterministic_mock, ProviderKind::replay})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::vector<std::string> ProviderBinding::validate() const {
  std::vector<std::string> errors;
  if (name.empty()) errors.emplace_back("provider.name: must not be empty");
  if (max_attempts < 1) errors.emplace_back("provider.max_attempts: must be >= 1");
  if (timeout.count() <= 0) errors.emplace_back("provider.timeout_ms: must be > 0");
  if (backoff_initial.count() < 0) errors.emplace_back("provider.backoff_initial_ms: must be >= 0");
  if (backoff_factor < 1.0) errors.emplace_back("provider.backoff_factor: must be >= 1");
  if (max_prompt_bytes == 0) errors.emplace_back("provider.max_prompt_bytes: must be > 0");
  if (kind == ProviderKind::live_http) {
    if (!endpoint || endpoint->empty()) errors.emplace_back("provider.endpoint: required for live_http");
    if (!model_name || model_name->empty()) errors.emplace_back("provider.model_name: required for live_http");
  }
  if (kind == ProviderKind::deterministic_mock && (!script_path || script_path->empty()))
    errors.emplace_back("provider.script: required for deterministic_mock");
  if (kind == ProviderKind::replay && (!replay_path || replay_path->empty()))
    errors.emplace_back("provider.replay: required for replay");
  return errors;
}

std::chrono::milliseconds ProviderBinding::backoff_before(int next_attempt) const {
  if (next_attempt <= 1) return std::chrono::milliseconds{0};
  const double ms = static_cast<double>(backoff_initial.count()) * std::pow(backoff_factor, next_attempt - 2);
  return std::chrono::milliseconds{static_cast<std::int64_t>(ms)};
}

json ProviderBinding::to_json() const {
  auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"name", name},
              {"kind", to_string(kind)},
              {"endpoint", opt(endpoint)},
              {"model_name", opt(model_name)},
              {"timeout_ms", timeout.count()},
              {"max_attempts", max_attempts},
              {"backoff_initial_ms", backoff_initial.count()},
              {"backoff_factor", backoff_factor},
              {"max_prompt_bytes", max_prompt_bytes},
              {"api_key_env", opt(api_key_env)},
              {"script", opt(script_path)},
              {"replay", opt(replay_path)}};
}

ProviderBinding ProviderBinding::from_json(const json& j, std::vector<std::string>* errors) {
  ProviderBinding b;
  std::vector<std::string> local;
  auto& errs = errors ? *errors : local;
  if (!j.is_object()) {
    errs.emplace_back("provider: must be an object");
    return b;
  }
  auto field = [&](const char* key, auto& out, auto check) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!check(j.at(key))) {
      errs.push_back(std::string("provider.") + key + ": wrong type");
      return;
    }
    out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
  };
  auto is_str = [](const json& v) { return v.is_string(); };
  auto is_int = [](const json& v) { return v.is_number_integer(); };
  auto is_num = [](const json& v) { return v.is_number(); };

  field("name", b.name, is_str);
  if (j.contains("kind")) {
    const auto kind = j.at("kind").is_string() ? parse_provider_kind(j.at("kind").get<std::string>()) : std::nullopt;
    if (kind) b.kind = *kind;
    else errs.emplace_back("provider.kind: expected live_http, deterministic_mock or replay");
  }
  auto opt_str = [&](const char* key, std::optional<std::string>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) {
      errs.push_back(std::string("provider.") + key + ": wrong type");
      return;
    }
    out = j.at(key).get<std::string>();
  };
  opt_str("endpoint", b.endpoint);
  opt_str("model_name", b.model_name);
  opt_str("api_key_env", b.api_key_env);
  opt_str("script", b.script_path);
  opt_str("replay", b.replay_path);
  std::int64_t timeout = b.timeout.count();
  std::int64_t backoff = b.backoff_initial.count();
  std::int64_t max_bytes = static_cast<std::int64_t>(b.max_prompt_bytes);
  field("timeout_ms", timeout, is_int);
  field("backoff_initial_ms", backoff, is_int);
  field("max_attempts", b.max_attempts, is_int);
  field("backoff_factor", b.backoff_factor, is_num);
  field("max_prompt_bytes", max_bytes, is_int);
  b.timeout = std::chrono::milliseconds{timeout};
  b.backoff_initial = std::chrono::milliseconds{backoff};
  if (max_bytes < 0) {
    errs.emplace_back("provider.max_prompt_bytes: must be > 0");
    max_bytes = 0;
  }
  b.max_prompt_bytes = static_cast<std::size_t>(max_bytes);
  return b;
}

}  // namespace derivmine::agentflow
