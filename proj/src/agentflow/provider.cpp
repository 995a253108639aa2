#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "derivmine/agentflow/provider.hpp"

#include <cstdlib>

#include <httplib.h>

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::agentflow {

using nlohmann::json;

ProviderResponse Provider::complete(const ProviderRequest& request, const CancelToken* cancel) {
  if (cancel && cancel->cancelled()) throw Error(Errc::Cancelled, "provider call cancelled");
  ++calls_;
  return do_complete(request, cancel);
}

namespace {

std::optional<TokenCounts> token_counts_from(const json& j) {
  if (!j.is_object()) return std::nullopt;
  return TokenCounts{j.value("prompt", std::int64_t{0}), j.value("completion", std::int64_t{0})};
}

}  // namespace

ScriptEntry script_entry_from_json(const json& j) {
  ScriptEntry e;
  const auto role = store::parse_agent_role(j.at("role").get<std::string>());
  if (!role) throw Error(Errc::ConfigError, "script: unknown role " + j.at("role").dump());
  e.role = *role;
  if (j.contains("sample_id")) e.key = j.at("sample_id").get<std::string>();
  else if (j.contains("key")) e.key = j.at("key").get<std::string>();
  if (j.contains("attempt") && !j.at("attempt").is_null()) e.attempt = j.at("attempt").get<int>();
  if (j.contains("error") && !j.at("error").is_null()) e.error = j.at("error").get<std::string>();
  if (j.contains("text")) {
    e.text = j.at("text").get<std::string>();
  } else if (j.contains("lines")) {
    for (const auto& line : j.at("lines")) {
      e.text += line.dump();
      e.text += '\n';
    }
  } else if (j.contains("response")) {
    e.text = j.at("response").dump();
  } else if (!e.error) {
    throw Error(Errc::ConfigError, "script entry for " + e.key + " has no text, lines, response or error");
  }
  if (j.contains("token_counts")) e.token_counts = token_counts_from(j.at("token_counts"));
  return e;
}

std::vector<ScriptEntry> load_script(const std::filesystem::path& path) {
  std::vector<ScriptEntry> out;
  for (const auto& j : read_jsonl(path)) out.push_back(script_entry_from_json(j));
  return out;
}

MockProvider::MockProvider(std::vector<ScriptEntry> script, std::string name)
    : name_(std::move(name)), script_(std::move(script)) {}

MockProvider MockProvider::from_file(const std::filesystem::path& path, std::string name) {
  return MockProvider(load_script(path), std::move(name));
}

void MockProvider::add(ScriptEntry e) { script_.push_back(std::move(e)); }

const ScriptEntry* MockProvider::find(const ProviderRequest& r) const {
  const ScriptEntry* best = nullptr;
  int best_rank = 0;
  for (const auto& e : script_) {
    if (e.role != r.role) continue;
    const bool key_exact = e.key == r.key;
    if (!key_exact && e.key != "*") continue;
    if (e.attempt && *e.attempt != r.attempt) continue;
    const int rank = (key_exact ? 2 : 0) + (e.attempt ? 1 : 0) + 1;
    if (rank > best_rank) {
      best = &e;
      best_rank = rank;
    }
  }
  return best;
}

ProviderResponse MockProvider::do_complete(const ProviderRequest& request, const CancelToken*) {
  const auto* e = find(request);
  if (!e)
    throw Error(Errc::ProviderError, "no scripted response for " + std::string(to_string(request.role)) + " " +
                                         request.key + " attempt " + std::to_string(request.attempt));
  if (e->error) throw Error(Errc::ProviderError, *e->error);
  return ProviderResponse{e->text, e->token_counts};
}

ReplayProvider::ReplayProvider(std::vector<store::AgentTranscript> transcripts, bool strict_prompts, std::string name)
    : name_(std::move(name)), strict_(strict_prompts) {
  for (auto& t : transcripts) by_key_[{t.agent_role, t.key, t.attempt}] = std::move(t);
}

namespace {

std::vector<store::AgentTranscript> load_transcripts(const std::filesystem::path& path) {
  std::vector<store::AgentTranscript> ts;
  for (const auto& j : read_jsonl(path)) ts.push_back(store::transcript_from_json(j));
  return ts;
}

}  // namespace

ReplayProvider ReplayProvider::from_file(const std::filesystem::path& path, bool strict_prompts) {
  return ReplayProvider(load_transcripts(path), strict_prompts);
}

ProviderResponse ReplayProvider::do_complete(const ProviderRequest& request, const CancelToken*) {
  const auto it = by_key_.find({request.role, request.key, request.attempt});
  if (it == by_key_.end())
    throw Error(Errc::ProviderError, "no recorded transcript for " + store::transcript_id(request.key, request.role,
                                                                                           request.attempt));
  const auto& t = it->second;
  if (strict_ && t.prompt_text != request.prompt_text)
    throw Error(Errc::ProviderError, "prompt differs from recording " + t.transcript_id);
  if (t.outcome == store::Outcome::provider_error)
    throw Error(Errc::ProviderError, t.error_message.value_or("recorded provider error"));
  return ProviderResponse{t.raw_response, t.token_counts};
}

HttpProvider::HttpProvider(ProviderBinding binding) : binding_(std::move(binding)) {}

ProviderResponse HttpProvider::do_complete(const ProviderRequest& request, const CancelToken* cancel) {
  const std::string& url = binding_.endpoint.value();
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(base);
  client.set_connection_timeout(binding_.timeout);
  client.set_read_timeout(binding_.timeout);
  client.set_write_timeout(binding_.timeout);
  if (binding_.api_key_env) {
    if (const char* token = std::getenv(binding_.api_key_env->c_str())) client.set_bearer_token_auth(token);
  }
  const json body{{"role", to_string(request.role)},
                  {"prompt_text", request.prompt_text},
                  {"model_name", request.model_name}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (cancel && cancel->cancelled()) throw Error(Errc::Cancelled, "provider call cancelled");
  if (!res) throw Error(Errc::ProviderError, "request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw Error(Errc::ProviderError, "HTTP " + std::to_string(res->status) + " from " + url);
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(Errc::ProviderError, std::string("response is not JSON: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("text") || !reply.at("text").is_string())
    throw Error(Errc::ProviderError, "response lacks a text field");
  ProviderResponse out{reply.at("text").get<std::string>(), std::nullopt};
  if (reply.contains("token_counts")) out.token_counts = token_counts_from(reply.at("token_counts"));
  return out;
}

std::unique_ptr<Provider> make_provider(const ProviderBinding& binding) {
  const auto errors = binding.validate();
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(Errc::ConfigError, msg);
  }
  switch (binding.kind) {
    case ProviderKind::deterministic_mock:
      return std::make_unique<MockProvider>(load_script(*binding.script_path), binding.name);
    case ProviderKind::replay: return std::make_unique<ReplayProvider>(load_transcripts(*binding.replay_path), true, binding.name);
    case ProviderKind::live_http: return std::make_unique<HttpProvider>(binding);
  }
  throw Error(Errc::ConfigError, "unknown provider kind");
}

}  // namespace derivmine::agentflow
