#include "derivmine/agentflow/call.hpp"

namespace derivmine::agentflow {

RetriesExhausted::RetriesExhausted(Errc last, std::string last_message,
                                   std::vector<store::AgentTranscript> transcripts,
                                   std::optional<nlohmann::json> last_detail)
    : Error(Errc::ExhaustedRetries, "retries exhausted after " + std::to_string(transcripts.size()) +
                                        " attempts; last: " + std::string(errc_name(last)) + ": " + last_message),
      last_(last),
      last_message_(std::move(last_message)),
      transcripts_(std::move(transcripts)),
      detail_(std::move(last_detail)) {}

bool is_contract_error(Errc code) noexcept {
  return code == Errc::ParseFailed || code == Errc::SchemaViolation || code == Errc::SelfContainmentFailed ||
         code == Errc::GradeOutOfRange;
}

AgentCall call_agent(const AgentEnv& env, store::AgentRole role, const std::string& key,
                     const std::string& prompt_text, const ResponseCheck& check) {
  const auto& b = env.binding;
  if (prompt_text.size() > b.max_prompt_bytes)
    throw Error(Errc::PayloadTooLarge, "prompt for " + key + " is " + std::to_string(prompt_text.size()) +
                                           " bytes; the provider budget is " + std::to_string(b.max_prompt_bytes));
  AgentCall call;
  Errc last = Errc::ProviderError;
  std::string last_message;
  std::optional<nlohmann::json> last_detail;
  for (int attempt = 1; attempt <= b.max_attempts; ++attempt) {
    if (attempt > 1) env.clock.sleep_for(b.backoff_before(attempt), env.cancel);
    if (env.cancel && env.cancel->cancelled()) throw Error(Errc::Cancelled, "cancelled before attempt " + std::to_string(attempt));

    store::AgentTranscript t;
    t.transcript_id = store::transcript_id(key, role, attempt);
    t.key = key;
    t.agent_role = role;
    t.prompt_text = prompt_text;
    t.attempt = attempt;
    t.provider_name = env.provider.name();

    bool ok = false;
    try {
      const auto response = env.provider.complete(
          ProviderRequest{role, key, attempt, prompt_text, b.model_name.value_or("")}, env.cancel);
      t.raw_response = response.text;
      t.token_counts = response.token_counts;
      try {
        call.value = check(response.text);
        call.raw_response = response.text;
        t.outcome = store::Outcome::ok;
        ok = true;
      } catch (const Error& e) {
        if (!is_contract_error(e.code())) throw;
        t.outcome = store::Outcome::parse_failed;
        t.error_code = std::string(e.name());
        t.error_message = e.what();
        last = e.code();
        last_message = e.what();
        const auto* d = dynamic_cast<const DetailedError*>(&e);
        last_detail = d ? std::optional<nlohmann::json>(d->detail()) : std::nullopt;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::ProviderError) throw;
      t.outcome = store::Outcome::provider_error;
      t.error_code = std::string(e.name());
      t.error_message = e.what();
      last = e.code();
      last_message = e.what();
      last_detail.reset();
    }
    if (env.store) env.store->append_transcript(t);
    call.transcripts.push_back(std::move(t));
    if (ok) return call;
  }
  throw RetriesExhausted(last, std::move(last_message), std::move(call.transcripts), std::move(last_detail));
}

}  // namespace derivmine::agentflow
