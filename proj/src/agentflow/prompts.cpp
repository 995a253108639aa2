#include "derivmine/agentflow/prompts.hpp"

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::agentflow {

PromptSet PromptSet::defaults() {
  PromptSet set;
  for (const auto& p : detail::embedded_prompts())
    set.templates_[std::string(p.role)] = PromptTemplate{std::string(p.role), std::string(p.text), p.canonical, "embedded"};
  return set;
}

void PromptSet::override_from(const std::map<std::string, std::filesystem::path>& files) {
  for (const auto& [role, path] : files) {
    const auto it = templates_.find(role);
    if (it == templates_.end()) throw Error(Errc::ConfigError, "prompts." + role + ": unknown role");
    std::string text;
    try {
      text = read_file(path);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, "prompts." + role + ": " + e.what());
    }
    it->second = PromptTemplate{role, std::move(text), false, path.string()};
  }
}

const PromptTemplate& PromptSet::get(std::string_view role) const {
  const auto it = templates_.find(role);
  if (it == templates_.end()) throw Error(Errc::ConfigError, "no prompt for role " + std::string(role));
  return it->second;
}

std::vector<std::string> PromptSet::roles() const {
  std::vector<std::string> out;
  for (const auto& [r, t] : templates_) out.push_back(r);
  return out;
}

std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    const auto it = values.find(name);
    if (it == values.end()) throw Error(Errc::ConfigError, "template slot {{" + name + "}} has no value");
    out.append(it->second);
    i = close + 2;
  }
  return out;
}

nlohmann::json dataset_record(const texmath::MathExpression& e) {
  return nlohmann::json{{std::string(to_string(e.kind)), e.latex}};
}

namespace {

RenderedPrompt framed(std::string_view paper, std::string_view body) {
  RenderedPrompt r;
  r.text = "<paper>\n";
  r.paper_offset = r.text.size();
  r.text.append(paper);
  r.paper_length = paper.size();
  r.text += "\n</paper>\n\n";
  r.text.append(body);
  return r;
}

}  // namespace

RenderedPrompt render_query_draft(const PromptSet& prompts, std::string_view paper,
                                  const texmath::MathExpression& expression) {
  std::string body = prompts.get("query_draft").text;
  body += '\n';
  body += dataset_record(expression).dump();
  body += '\n';
  return framed(paper, body);
}

RenderedPrompt render_answer_retriever(const PromptSet& prompts, std::string_view paper,
                                       const texmath::MathExpression& expression, std::string_view query) {
  auto record = dataset_record(expression);
  record["query"] = std::string(query);
  std::string body = prompts.get("answer_retriever").text;
  body += '\n';
  body += record.dump();
  body += '\n';
  return framed(paper, body);
}

RenderedPrompt render_context_collector(const PromptSet& prompts, std::string_view paper, std::string_view query,
                                        std::string_view whole_label, const std::vector<std::string>& undefined) {
  std::string symbols;
  for (const auto& s : undefined) symbols += (symbols.empty() ? "" : ", ") + s;
  if (symbols.empty()) symbols = "(none)";
  RenderedPrompt r;
  const std::string marker = "\x01paper\x01";
  r.text = fill_slots(prompts.get("context_collector").text, {{"query", std::string(query)},
                                                              {"whole_label", std::string(whole_label)},
                                                              {"undefined_symbols", symbols},
                                                              {"paper", marker}});
  const auto at = r.text.find(marker);
  if (at != std::string::npos) {
    r.text.replace(at, marker.size(), paper);
    r.paper_offset = at;
    r.paper_length = paper.size();
  }
  return r;
}

std::string render_question_refiner(const PromptSet& prompts, std::string_view query, std::string_view whole_label,
                                    const std::vector<store::ContextSnippet>& evidence) {
  std::string lines;
  for (const auto& e : evidence) lines += store::to_json(e).dump() + "\n";
  if (lines.empty()) lines = "(none)\n";
  return fill_slots(prompts.get("question_refiner").text,
                    {{"query", std::string(query)}, {"whole_label", std::string(whole_label)}, {"evidence", lines}});
}

std::string render_answer_filter(const PromptSet& prompts, std::string_view question, std::string_view answer) {
  return fill_slots(prompts.get("answer_filter").text,
                    {{"question", std::string(question)}, {"answer", std::string(answer)}});
}

std::string render_solver(const PromptSet& prompts, std::string_view question) {
  return fill_slots(prompts.get("solver").text, {{"question", std::string(question)}});
}

std::string render_grader(const PromptSet& prompts, std::string_view problem, std::string_view ground_truth,
                          std::string_view solution) {
  std::string out = prompts.get("grader").text;
  out += "\nProblem:\n";
  out.append(problem);
  out += "\n\nGround truth proof:\n";
  out.append(ground_truth);
  out += "\n\nProposed solution:\n";
  out.append(solution);
  out += '\n';
  return out;
}

}  // namespace derivmine::agentflow
