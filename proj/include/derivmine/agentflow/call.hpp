#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/agentflow/binding.hpp"
#include "derivmine/agentflow/provider.hpp"
#include "derivmine/core/clock.hpp"
#include "derivmine/core/error.hpp"
#include "derivmine/store/sample_store.hpp"

namespace derivmine::agentflow {

// Everything an agent call needs besides its prompt. The store, when set,
// receives each transcript as soon as the attempt finishes.
struct AgentEnv {
  Provider& provider;
  const ProviderBinding& binding;
  Clock& clock;
  store::SampleStore* store = nullptr;
  const CancelToken* cancel = nullptr;
};

// Turns a raw response into the parsed payload or throws an Error. Errors
// named ParseFailed, SchemaViolation, SelfContainmentFailed or
// GradeOutOfRange mark the attempt parse_failed and are retried.
using ResponseCheck = std::function<nlohmann::json(const std::string& raw)>;

struct AgentCall {
  std::string raw_response;
  nlohmann::json value;
  std::vector<store::AgentTranscript> transcripts;
};

// Error{ExhaustedRetries} with the error of the last attempt and every
// transcript made.
class RetriesExhausted : public Error {
 public:
  RetriesExhausted(Errc last, std::string last_message, std::vector<store::AgentTranscript> transcripts,
                   std::optional<nlohmann::json> last_detail = std::nullopt);

  Errc last_code() const noexcept { return last_; }
  const std::string& last_message() const noexcept { return last_message_; }
  const std::vector<store::AgentTranscript>& transcripts() const noexcept { return transcripts_; }
  // Structured detail of the last failure (a self-containment report).
  const std::optional<nlohmann::json>& last_detail() const noexcept { return detail_; }

 private:
  Errc last_;
  std::string last_message_;
  std::vector<store::AgentTranscript> transcripts_;
  std::optional<nlohmann::json> detail_;
};

// Error carrying a JSON detail, thrown by response checks.
class DetailedError : public Error {
 public:
  DetailedError(Errc code, const std::string& message, nlohmann::json detail)
      : Error(code, message), detail_(std::move(detail)) {}
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  nlohmann::json detail_;
};

bool is_contract_error(Errc code) noexcept;

// Sends the prompt up to binding.max_attempts times, sleeping
// backoff_before(n) on the env clock before attempt n. One transcript per
// attempt. Throws Error{PayloadTooLarge} before any attempt when the prompt
// exceeds binding.max_prompt_bytes, RetriesExhausted after the last failed
// attempt, and Error{Cancelled} when the token fires.
AgentCall call_agent(const AgentEnv& env, store::AgentRole role, const std::string& key,
                     const std::string& prompt_text, const ResponseCheck& check);

}  // namespace derivmine::agentflow
