#include "derivmine/agentflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "derivmine/agentflow/jsonl.hpp"
#include "derivmine/agentflow/selfcontain.hpp"
#include "derivmine/corpus/store.hpp"
#include "derivmine/texmath/canonical.hpp"

namespace derivmine::agentflow {

using nlohmann::json;
using store::AgentRole;
using store::Sample;
using store::Stage;

namespace {

std::vector<std::string> ids_of(const std::vector<store::AgentTranscript>& ts) {
  std::vector<std::string> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t.transcript_id);
  return out;
}

void add_refs(Sample& s, const std::vector<std::string>& refs) {
  for (const auto& r : refs)
    if (std::find(s.transcripts.begin(), s.transcripts.end(), r) == s.transcripts.end()) s.transcripts.push_back(r);
}

bool same_text(const json& v, const std::string& expected) {
  return v.is_string() && texmath::squash_whitespace(v.get<std::string>()) == texmath::squash_whitespace(expected);
}

std::string lower(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

std::string non_empty_string(const json& rec, const std::string& key, Errc code) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_string() || it->get<std::string>().empty())
    throw Error(code, "\"" + key + "\" must be a non-empty string");
  return it->get<std::string>();
}

std::string note_for(const RetriesExhausted& e, AgentRole role) {
  return std::string(to_string(role)) + ": " + std::string(errc_name(e.last_code())) + ": " + e.last_message();
}

}  // namespace

json PipelineReport::to_json() const {
  return json{{"paper_id", paper_id},
              {"expressions", expressions},
              {"samples", samples},
              {"by_stage", by_stage},
              {"reject_reasons", reject_reasons},
              {"parked", parked},
              {"over_filtered", over_filtered},
              {"enqueued", enqueued},
              {"resumed", resumed},
              {"provider_calls", provider_calls},
              {"extraction_diagnostics", extraction_diagnostics}};
}

Pipeline::Pipeline(Provider& provider, const ProviderBinding& binding, const PromptSet& prompts,
                   store::SampleStore& store, Clock& clock, PipelineOptions options, const CancelToken* cancel)
    : provider_(provider),
      binding_(binding),
      prompts_(prompts),
      store_(store),
      clock_(clock),
      options_(std::move(options)),
      cancel_(cancel) {}

AgentEnv Pipeline::env() const { return AgentEnv{provider_, binding_, clock_, &store_, cancel_}; }

Sample Pipeline::reject(Sample s, const std::string& reason, const std::vector<std::string>& refs,
                        const std::string& note) {
  add_refs(s, refs);
  s.stage = Stage::rejected;
  s.reject_reason = reason;
  store_.record(s, "transition", refs, std::nullopt, note);
  return s;
}

json Pipeline::check_draft(const std::string& raw, const texmath::MathExpression& expression) {
  const auto records = parse_agent_jsonl(raw, {"query"});
  if (records.empty()) throw Error(Errc::SchemaViolation, "no query record in response");
  const bool theorem = texmath::is_theorem_like(expression.kind);
  json queries = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto q = non_empty_string(records[i], "query", Errc::SchemaViolation);
    const std::string where = "query " + std::to_string(i + 1);
    if (!embeds_latex(q, expression.latex))
      throw Error(Errc::SchemaViolation, where + " does not contain the LaTeX of the target expression");
    const auto refs = check_self_containment(q, "").unresolved_references;
    if (!refs.empty())
      throw Error(Errc::SchemaViolation, where + " cites " + refs.front() + " without its content");
    const auto l = lower(q);
    const bool asks = theorem ? (l.find("prov") != std::string::npos || l.find("proof") != std::string::npos ||
                                 l.find("show") != std::string::npos)
                              : (l.find("deriv") != std::string::npos || l.find("obtain") != std::string::npos ||
                                 l.find("show") != std::string::npos || l.find("prov") != std::string::npos);
    if (!asks)
      throw Error(Errc::SchemaViolation, where + (theorem ? " does not ask for a proof" : " does not ask for a derivation"));
    queries.push_back(q);
  }
  return queries;
}

json Pipeline::check_retrieval(const std::string& raw, const texmath::MathExpression& expression,
                               const std::string& query) {
  const auto records = parse_agent_jsonl(raw, {});
  if (records.empty()) return json{{"answerable", false}};
  const std::string kind(to_string(expression.kind));
  const auto& rec = records.front();
  if (!rec.contains("query") || !same_text(rec.at("query"), query))
    throw Error(Errc::SchemaViolation, "original key \"query\" is missing or was modified");
  if (!rec.contains(kind) || !same_text(rec.at(kind), expression.latex))
    throw Error(Errc::SchemaViolation, "original key \"" + kind + "\" is missing or was modified");
  if (!rec.contains("whole_label")) throw Error(Errc::SchemaViolation, "missing key \"whole_label\"");
  const auto& label = rec.at("whole_label");
  if (label.is_null() || (label.is_string() && label.get<std::string>().empty()))
    return json{{"answerable", false}};
  if (!label.is_string()) throw Error(Errc::SchemaViolation, "\"whole_label\" must be a string");
  return json{{"answerable", true}, {"whole_label", label}};
}

json Pipeline::check_context(const std::string& raw) {
  const auto records = parse_agent_jsonl(raw, {"evidence"});
  if (records.size() != 1) throw Error(Errc::SchemaViolation, "expected exactly one evidence record");
  const auto& ev = records.front().at("evidence");
  if (!ev.is_array()) throw Error(Errc::SchemaViolation, "\"evidence\" must be a list");
  json out = json::array();
  for (const auto& item : ev) {
    if (!item.is_object()) throw Error(Errc::SchemaViolation, "evidence items must be objects");
    const auto text = non_empty_string(item, "text", Errc::SchemaViolation);
    std::string locator;
    if (item.contains("locator")) {
      if (!item.at("locator").is_string()) throw Error(Errc::SchemaViolation, "\"locator\" must be a string");
      locator = item.at("locator").get<std::string>();
    }
    out.push_back(json{{"text", text}, {"locator", locator}});
  }
  return out;
}

json Pipeline::check_refinement(const std::string& raw, const texmath::MathExpression& expression) {
  const auto records = parse_agent_jsonl(raw, {"question", "answer"});
  if (records.size() != 1) throw Error(Errc::SchemaViolation, "expected exactly one question/answer record");
  const auto question = non_empty_string(records.front(), "question", Errc::SchemaViolation);
  const auto answer = non_empty_string(records.front(), "answer", Errc::SchemaViolation);
  if (!embeds_latex(question, expression.latex))
    throw Error(Errc::SchemaViolation, "question no longer contains the target expression");
  const auto report = check_self_containment(question, answer);
  json out{{"question", question}, {"answer", answer}, {"report", report.to_json()}};
  if (!report.passed()) throw DetailedError(Errc::SelfContainmentFailed, report.summary(), out);
  return out;
}

json Pipeline::check_filter(const std::string& raw) {
  const auto records = parse_agent_jsonl(raw, {"answer"});
  if (records.size() != 1) throw Error(Errc::SchemaViolation, "expected exactly one answer record");
  return non_empty_string(records.front(), "answer", Errc::SchemaViolation);
}

std::vector<Sample> Pipeline::draft_queries(const corpus::PaperRecord& paper, const texmath::MathExpression& expression,
                                            std::int64_t expression_index) {
  const std::string unit = paper.paper_id + ":" + expression.expr_id;
  const auto prompt = render_query_draft(prompts_, paper.body_text, expression);
  Sample base;
  base.paper_id = paper.paper_id;
  base.expression = expression;
  base.expression_index = expression_index;
  try {
    const auto call = call_agent(env(), AgentRole::query_draft, unit, prompt.text,
                                 [&](const std::string& raw) { return check_draft(raw, expression); });
    const auto refs = ids_of(call.transcripts);
    std::vector<Sample> out;
    for (std::size_t k = 0; k < call.value.size(); ++k) {
      Sample s = base;
      s.sample_id = unit + ":q" + std::to_string(k + 1);
      s.query_index = static_cast<std::int64_t>(k + 1);
      s.query = call.value[k].get<std::string>();
      s.transcripts = refs;
      s.stage = Stage::drafted;
      store_.create(s, refs);
      out.push_back(std::move(s));
    }
    return out;
  } catch (const RetriesExhausted& e) {
    Sample s = base;
    s.sample_id = unit + ":q0";
    s.transcripts = ids_of(e.transcripts());
    s.stage = Stage::rejected;
    s.reject_reason = kExhaustedRetries;
    store_.create(s, s.transcripts, note_for(e, AgentRole::query_draft));
    return {s};
  }
}

Sample Pipeline::retrieve_answer(const corpus::PaperRecord& paper, Sample s) {
  const auto prompt = render_answer_retriever(prompts_, paper.body_text, s.expression, s.query.value());
  try {
    const auto call = call_agent(env(), AgentRole::answer_retriever, s.sample_id, prompt.text, [&](const std::string& raw) {
      return check_retrieval(raw, s.expression, *s.query);
    });
    const auto refs = ids_of(call.transcripts);
    if (!call.value.at("answerable").get<bool>())
      return reject(std::move(s), kNoAnswerInPaper, refs, "answer_retriever: no answer in the paper");
    add_refs(s, refs);
    s.whole_label = call.value.at("whole_label").get<std::string>();
    s.stage = Stage::retrieved;
    store_.record(s, "transition", refs);
    return s;
  } catch (const RetriesExhausted& e) {
    return reject(std::move(s), kExhaustedRetries, ids_of(e.transcripts()), note_for(e, AgentRole::answer_retriever));
  }
}

Sample Pipeline::collect_context(const corpus::PaperRecord& paper, Sample s) {
  const auto report = check_self_containment(*s.query, *s.whole_label);
  if (report.passed()) {
    s.evidence = std::vector<store::ContextSnippet>{};
    s.stage = Stage::contextualized;
    store_.record(s, "transition", {}, std::nullopt, "context_collector: nothing missing");
    return s;
  }
  const auto prompt =
      render_context_collector(prompts_, paper.body_text, *s.query, *s.whole_label, report.undefined_symbols);
  try {
    const auto call = call_agent(env(), AgentRole::context_collector, s.sample_id, prompt.text, check_context);
    const auto refs = ids_of(call.transcripts);
    std::vector<store::ContextSnippet> evidence;
    for (const auto& e : call.value) evidence.push_back(store::snippet_from_json(e));
    add_refs(s, refs);
    s.evidence = std::move(evidence);
    s.stage = Stage::contextualized;
    store_.record(s, "transition", refs);
    return s;
  } catch (const RetriesExhausted& e) {
    return reject(std::move(s), kExhaustedRetries, ids_of(e.transcripts()), note_for(e, AgentRole::context_collector));
  }
}

Sample Pipeline::refine_question(Sample s) {
  const auto& evidence = s.evidence.value();
  if (evidence.empty()) {
    const auto report = check_self_containment(*s.query, *s.whole_label);
    if (report.passed()) {
      s.question = s.query;
      s.answer = s.whole_label;
      s.stage = Stage::refined;
      store_.record(s, "transition", {}, std::nullopt, "question_refiner: already self-contained");
      return s;
    }
  }
  const auto prompt = render_question_refiner(prompts_, *s.query, *s.whole_label, evidence);
  try {
    const auto call = call_agent(env(), AgentRole::question_refiner, s.sample_id, prompt,
                                 [&](const std::string& raw) { return check_refinement(raw, s.expression); });
    const auto refs = ids_of(call.transcripts);
    add_refs(s, refs);
    s.question = call.value.at("question").get<std::string>();
    s.answer = call.value.at("answer").get<std::string>();
    s.stage = Stage::refined;
    store_.record(s, "transition", refs);
    return s;
  } catch (const RetriesExhausted& e) {
    const auto refs = ids_of(e.transcripts());
    if (e.last_code() != Errc::SelfContainmentFailed || !e.last_detail())
      return reject(std::move(s), kExhaustedRetries, refs, note_for(e, AgentRole::question_refiner));
    const auto& d = *e.last_detail();
    add_refs(s, refs);
    s.question = d.at("question").get<std::string>();
    s.answer = d.at("answer").get<std::string>();
    s.self_containment_report = d.at("report");
    s.parked = true;
    s.stage = Stage::refined;
    store_.record(s, "transition", refs, std::nullopt, note_for(e, AgentRole::question_refiner));
    return s;
  }
}

Sample Pipeline::filter_answer(Sample s) {
  const auto prompt = render_answer_filter(prompts_, *s.question, *s.answer);
  try {
    const auto call = call_agent(env(), AgentRole::answer_filter, s.sample_id, prompt, check_filter);
    const auto refs = ids_of(call.transcripts);
    add_refs(s, refs);
    const auto filtered = call.value.get<std::string>();
    const std::optional<std::string_view> target =
        s.expression.kind == texmath::ExpressionKind::formula ? std::optional<std::string_view>(s.expression.latex)
                                                              : std::nullopt;
    const auto dropped = dropped_needed_equations(*s.answer, filtered, *s.question, target);
    const auto report = check_self_containment(*s.question, filtered);
    if (!dropped.empty() || !report.passed()) {
      s.over_filtered = true;
      json detail = report.to_json();
      detail["dropped_equations"] = dropped;
      s.self_containment_report = detail;
      std::string note = "OverFiltered: ";
      note += dropped.empty() ? report.summary() : "dropped " + std::to_string(dropped.size()) + " needed equation(s)";
      store_.record(s, "update", refs, std::nullopt, note);
      return s;
    }
    s.answer = filtered;
    s.stage = Stage::filtered;
    store_.record(s, "transition", refs);
    return s;
  } catch (const RetriesExhausted& e) {
    return reject(std::move(s), kExhaustedRetries, ids_of(e.transcripts()), note_for(e, AgentRole::answer_filter));
  }
}

Sample Pipeline::advance(const corpus::PaperRecord& paper, Sample s) {
  while (true) {
    if (cancel_ && cancel_->cancelled()) throw Error(Errc::Cancelled, "pipeline cancelled");
    switch (s.stage) {
      case Stage::extracted: return s;
      case Stage::drafted: s = retrieve_answer(paper, std::move(s)); break;
      case Stage::retrieved: s = collect_context(paper, std::move(s)); break;
      case Stage::contextualized: s = refine_question(std::move(s)); break;
      case Stage::refined:
        if (s.parked || s.over_filtered) return s;
        s = filter_answer(std::move(s));
        if (s.stage == Stage::refined) return s;
        break;
      default: return s;
    }
  }
}

std::vector<texmath::SourceText> latex_sources(const corpus::PaperRecord& paper) {
  std::vector<texmath::SourceText> tex, all;
  for (const auto& f : paper.source_files) {
    all.push_back({f.path, f.text});
    if (f.path.ends_with(".tex") || f.path.ends_with(".ltx")) tex.push_back({f.path, f.text});
  }
  return tex.empty() ? all : tex;
}

PipelineReport Pipeline::run(const corpus::PaperRecord& paper) {
  if (!paper.verdict || !paper.verdict->accepted)
    throw Error(Errc::PaperNotAccepted, "paper " + paper.paper_id + " has not passed the reasoning-density filter");
  const std::size_t calls_before = provider_.calls();
  const auto sources = latex_sources(paper);
  const auto extraction = texmath::extract_document(sources, options_.extract);
  const auto& exprs = extraction.expressions;

  std::map<std::int64_t, std::vector<Sample>> existing;
  for (auto& s : store_.samples())
    if (s.paper_id == paper.paper_id) existing[s.expression_index].push_back(std::move(s));

  PipelineReport report;
  report.paper_id = paper.paper_id;
  report.expressions = exprs.size();
  report.extraction_diagnostics = extraction.diagnostics.size();

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> resumed{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= exprs.size()) return;
      try {
        const auto index = static_cast<std::int64_t>(i);
        std::vector<Sample> samples;
        if (auto it = existing.find(index); it != existing.end()) {
          samples = it->second;
          resumed += samples.size();
        } else {
          samples = draft_queries(paper, exprs[i], index);
        }
        for (auto& s : samples) advance(paper, std::move(s));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options_.concurrency, 1, std::max<std::size_t>(exprs.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) {
    store_.flush();
    std::rethrow_exception(failure);
  }

  std::vector<std::string> to_queue;
  for (const auto& s : store_.samples()) {
    if (s.paper_id != paper.paper_id) continue;
    if (s.stage == Stage::filtered || (s.stage == Stage::refined && (s.parked || s.over_filtered)))
      to_queue.push_back(s.sample_id);
  }
  report.enqueued = store_.enqueue(to_queue);
  store_.flush();

  for (const auto& s : store_.samples()) {
    if (s.paper_id != paper.paper_id) continue;
    ++report.samples;
    ++report.by_stage[std::string(to_string(s.stage))];
    if (s.reject_reason) ++report.reject_reasons[*s.reject_reason];
    if (s.parked) ++report.parked;
    if (s.over_filtered) ++report.over_filtered;
  }
  report.resumed = resumed.load();
  report.provider_calls = provider_.calls() - calls_before;
  return report;
}

PipelineReport run_pipeline(const corpus::CorpusStore& corpus, const std::string& paper_id, Pipeline& pipeline) {
  const auto paper = corpus.get(paper_id);
  if (!paper) throw Error(Errc::UnknownPaper, "unknown paper " + paper_id);
  return pipeline.run(*paper);
}

}  // namespace derivmine::agentflow
