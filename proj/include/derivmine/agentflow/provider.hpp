#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "derivmine/agentflow/binding.hpp"
#include "derivmine/core/clock.hpp"
#include "derivmine/store/sample.hpp"

namespace derivmine::agentflow {

using store::AgentRole;
using store::TokenCounts;

struct ProviderRequest {
  AgentRole role = AgentRole::query_draft;
  // Sample id (or draft unit / eval item) the call is made for.
  std::string key;
  int attempt = 1;
  std::string prompt_text;
  std::string model_name;
};

struct ProviderResponse {
  std::string text;
  std::optional<TokenCounts> token_counts;
};

// Model endpoint boundary. Failures throw Error{ProviderError}.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  ProviderResponse complete(const ProviderRequest& request, const CancelToken* cancel = nullptr);
  std::size_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual ProviderResponse do_complete(const ProviderRequest& request, const CancelToken* cancel) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// One scripted reply. An entry without an attempt applies to every attempt;
// key "*" applies to every key of the role. Exact matches win.
struct ScriptEntry {
  AgentRole role = AgentRole::query_draft;
  std::string key = "*";
  std::optional<int> attempt;
  std::string text;
  std::optional<std::string> error;  // simulate a transport failure
  std::optional<TokenCounts> token_counts;
};

// Script lines are JSON objects with keys role, sample_id (or key), attempt,
// and one of text (raw response), lines (records emitted as JSONL),
// response (one record) or error.
std::vector<ScriptEntry> load_script(const std::filesystem::path& path);
ScriptEntry script_entry_from_json(const nlohmann::json& j);

class MockProvider final : public Provider {
 public:
  explicit MockProvider(std::vector<ScriptEntry> script, std::string name = "mock");
  static MockProvider from_file(const std::filesystem::path& path, std::string name = "mock");

  std::string name() const override { return name_; }
  void add(ScriptEntry e);

 protected:
  ProviderResponse do_complete(const ProviderRequest& request, const CancelToken* cancel) override;

 private:
  const ScriptEntry* find(const ProviderRequest& r) const;

  std::string name_;
  std::vector<ScriptEntry> script_;
};

// Plays stored transcripts back. With strict prompts the rendered prompt
// must match the recorded one byte for byte.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::vector<store::AgentTranscript> transcripts, bool strict_prompts = true,
                          std::string name = "replay");
  static ReplayProvider from_file(const std::filesystem::path& path, bool strict_prompts = true);

  std::string name() const override { return name_; }

 protected:
  ProviderResponse do_complete(const ProviderRequest& request, const CancelToken* cancel) override;

 private:
  std::string name_;
  bool strict_;
  std::map<std::tuple<AgentRole, std::string, int>, store::AgentTranscript> by_key_;
};

// POST {role, prompt_text, model_name} as JSON to the endpoint; expects
// {text, token_counts?}. A bearer token is read from api_key_env if set.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(ProviderBinding binding);

  std::string name() const override { return binding_.name; }

 protected:
  ProviderResponse do_complete(const ProviderRequest& request, const CancelToken* cancel) override;

 private:
  ProviderBinding binding_;
};

// Throws Error{ConfigError} if the binding is invalid.
std::unique_ptr<Provider> make_provider(const ProviderBinding& binding);

}  // namespace derivmine::agentflow
