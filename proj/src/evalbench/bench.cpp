#include "derivmine/evalbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::evalbench {

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

Rational parse_rational(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto slash = s.find('/');
    const std::int64_t num = std::stoll(s.substr(0, slash), &used);
    if (used != (slash == std::string::npos ? s.size() : slash)) throw std::invalid_argument(s);
    if (slash == std::string::npos) return Rational(num);
    const std::string rest = s.substr(slash + 1);
    const std::int64_t den = std::stoll(rest, &used);
    if (used != rest.size() || den == 0) throw std::invalid_argument(s);
    return Rational(num, den);
  } catch (const std::logic_error&) {
    throw Error(Errc::RangeError, "not a rational number: " + s);
  }
}

std::vector<EvalItem> load_items(const std::filesystem::path& path) {
  std::vector<EvalItem> out;
  std::set<std::string> seen;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    const auto where = path.string() + " record " + std::to_string(line);
    if (!j.is_object()) throw Error(Errc::MalformedMetadata, where + ": not an object");
    for (const char* key : {"item_id", "question", "answer"})
      if (!j.contains(key) || !j.at(key).is_string())
        throw Error(Errc::MalformedMetadata, where + ": " + key + " must be a string");
    EvalItem item{j.at("item_id").get<std::string>(), j.at("question").get<std::string>(),
                  j.at("answer").get<std::string>()};
    if (!seen.insert(item.item_id).second) throw Error(Errc::DuplicateId, where + ": duplicate item " + item.item_id);
    out.push_back(std::move(item));
  }
  return out;
}

json ModelResponse::to_json() const {
  return json{{"model", model},   {"item_id", item_id}, {"response_index", response_index},
              {"text", text},     {"failed", failed},   {"error", error}};
}

ModelResponse ModelResponse::from_json(const json& j) {
  ModelResponse r;
  r.model = j.value("model", std::string());
  r.item_id = j.at("item_id").get<std::string>();
  r.response_index = j.at("response_index").get<int>();
  r.text = j.value("text", std::string());
  r.failed = j.value("failed", false);
  r.error = j.value("error", std::string());
  return r;
}

json GradeCard::to_json() const {
  return json{{"model", model},
              {"item_id", item_id},
              {"response_index", response_index},
              {"correctness", correctness},
              {"completeness", completeness},
              {"similarity", similarity},
              {"grader", grader == GraderKind::model ? "model" : "human"},
              {"grader_id", grader_id}};
}

namespace {

int axis_value(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw Error(Errc::ParseFailed, std::string("grade needs an integer ") + key);
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 0 || v > 2) throw Error(Errc::GradeOutOfRange, std::string(key) + " = " + std::to_string(v) + " is outside 0..2");
  return static_cast<int>(v);
}

}  // namespace

GradeCard GradeCard::from_json(const json& j) {
  GradeCard c;
  c.model = j.value("model", std::string());
  c.item_id = j.at("item_id").get<std::string>();
  c.response_index = j.at("response_index").get<int>();
  c.correctness = axis_value(j, "correctness");
  c.completeness = axis_value(j, "completeness");
  c.similarity = axis_value(j, "similarity");
  c.grader = j.value("grader", std::string("model")) == "human" ? GraderKind::human : GraderKind::model;
  c.grader_id = j.value("grader_id", std::string());
  return c;
}

json HumanScore::to_json() const {
  return json{{"model", model},
              {"item_id", item_id},
              {"response_index", response_index},
              {"key_steps_total", key_steps_total},
              {"key_steps_completed", key_steps_completed},
              {"score", evalbench::to_string(score)},
              {"grader_id", grader_id}};
}

HumanScore HumanScore::from_json(const json& j) {
  auto h = record_human_score(j.at("item_id").get<std::string>(), j.at("response_index").get<int>(),
                              j.at("key_steps_completed").get<std::int64_t>(), j.at("key_steps_total").get<std::int64_t>(),
                              j.value("model", std::string()), j.value("grader_id", std::string()));
  if (j.contains("score") && parse_rational(j.at("score").get<std::string>()) != h.score)
    throw Error(Errc::RangeError, "stored score of " + h.item_id + " disagrees with its key steps");
  return h;
}

std::vector<ModelResponse> generate_responses(const EvalItem& item, const std::string& model,
                                              const agentflow::AgentEnv& env, const agentflow::PromptSet& prompts,
                                              int k) {
  if (k < 1) throw Error(Errc::UsageError, "k must be at least 1");
  const auto prompt = agentflow::render_solver(prompts, item.question);
  std::vector<ModelResponse> out;
  for (int i = 0; i < k; ++i) {
    ModelResponse r;
    r.model = model;
    r.item_id = item.item_id;
    r.response_index = i;
    try {
      const auto call = agentflow::call_agent(env, store::AgentRole::solver, item.item_id + "#r" + std::to_string(i), prompt,
                                              [](const std::string& raw) { return json(raw); });
      r.text = call.raw_response;
    } catch (const Error& e) {
      if (e.code() == Errc::Cancelled) throw;
      r.failed = true;
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

// End of the balanced object starting at `open`, honouring JSON strings.
std::size_t object_end(const std::string& s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

}  // namespace

GradeCard parse_grade(const std::string& raw) {
  std::optional<json> last;
  std::size_t pos = 0;
  while ((pos = raw.find('{', pos)) != std::string::npos) {
    const auto end = object_end(raw, pos);
    if (end != std::string::npos) {
      const auto parsed = json::parse(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                                      raw.begin() + static_cast<std::ptrdiff_t>(end), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        last = parsed;
        pos = end;
        continue;
      }
    }
    ++pos;
  }
  if (!last) throw Error(Errc::ParseFailed, "grader reply has no JSON object");
  GradeCard c;
  c.correctness = axis_value(*last, "correctness");
  c.completeness = axis_value(*last, "completeness");
  c.similarity = axis_value(*last, "similarity");
  return c;
}

GradeCard grade_rubric(const EvalItem& item, const ModelResponse& response, const agentflow::AgentEnv& env,
                       const agentflow::PromptSet& prompts) {
  GradeCard card;
  const auto grader_id = env.provider.name();
  if (response.text.find_first_not_of(" \t\r\n") != std::string::npos) {
    const auto call = agentflow::call_agent(
        env, store::AgentRole::grader, item.item_id + "#r" + std::to_string(response.response_index),
        agentflow::render_grader(prompts, item.question, item.answer, response.text),
        [](const std::string& raw) { return parse_grade(raw).to_json(); });
    card = parse_grade(call.raw_response);
  }
  card.model = response.model;
  card.item_id = item.item_id;
  card.response_index = response.response_index;
  card.grader = GraderKind::model;
  card.grader_id = grader_id;
  return card;
}

GradeRun grade_all(const std::vector<EvalItem>& items, const std::vector<ModelResponse>& responses,
                   const agentflow::AgentEnv& env, const agentflow::PromptSet& prompts, int concurrency) {
  std::map<std::string, const EvalItem*> by_id;
  for (const auto& i : items) by_id.emplace(i.item_id, &i);
  for (const auto& r : responses)
    if (!by_id.count(r.item_id)) throw Error(Errc::UnknownSample, "response for unknown item " + r.item_id);

  std::vector<std::optional<GradeCard>> cards(responses.size());
  std::vector<std::optional<std::string>> failures(responses.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < responses.size();) {
      try {
        cards[i] = grade_rubric(*by_id.at(responses[i].item_id), responses[i], env, prompts);
      } catch (const agentflow::RetriesExhausted& e) {
        failures[i] = e.what();
      } catch (...) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        next.store(responses.size());
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, concurrency));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n, responses.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  GradeRun run;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (cards[i]) run.cards.push_back(std::move(*cards[i]));
    else if (failures[i]) run.failures.push_back({responses[i].item_id, responses[i].response_index, *failures[i]});
  }
  return run;
}

HumanScore record_human_score(const std::string& item_id, int response_index, std::int64_t completed,
                              std::int64_t total, const std::string& model, const std::string& grader_id) {
  if (total < 1) throw Error(Errc::RangeError, "key_steps_total must be at least 1, got " + std::to_string(total));
  if (completed < 0 || completed > total)
    throw Error(Errc::RangeError, "key_steps_completed " + std::to_string(completed) + " is outside 0.." +
                                      std::to_string(total));
  HumanScore h;
  h.model = model;
  h.item_id = item_id;
  h.response_index = response_index;
  h.key_steps_total = total;
  h.key_steps_completed = completed;
  h.score = Rational(completed, total);
  h.grader_id = grader_id;
  return h;
}

ScoreStore::ScoreStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  for (const auto& e : read_jsonl(*path_)) {
    const auto kind = e.value("kind", std::string());
    const auto& rec = e.at("record");
    if (kind == "response") responses_.push_back(ModelResponse::from_json(rec));
    else if (kind == "grade") cards_.push_back(GradeCard::from_json(rec));
    else if (kind == "human") humans_.push_back(HumanScore::from_json(rec));
    else throw Error(Errc::IoError, path_->string() + ": unknown score event " + kind);
  }
}

void ScoreStore::append(const json& event) {
  if (path_) append_line(*path_, event.dump());
}

void ScoreStore::add(const ModelResponse& r) {
  std::lock_guard lock(mu_);
  append(json{{"kind", "response"}, {"record", r.to_json()}});
  responses_.push_back(r);
}

void ScoreStore::add(const GradeCard& c) {
  std::lock_guard lock(mu_);
  append(json{{"kind", "grade"}, {"record", c.to_json()}});
  cards_.push_back(c);
}

void ScoreStore::add(const HumanScore& h) {
  std::lock_guard lock(mu_);
  append(json{{"kind", "human"}, {"record", h.to_json()}});
  humans_.push_back(h);
}

std::vector<std::string> ScoreStore::models() const {
  std::set<std::string> names;
  for (const auto& r : responses_) names.insert(r.model);
  for (const auto& c : cards_) names.insert(c.model);
  for (const auto& h : humans_) names.insert(h.model);
  return {names.begin(), names.end()};
}

namespace {

AxisMeans means_of(const std::vector<const GradeCard*>& cards) {
  AxisMeans m;
  m.cards = cards.size();
  const auto n = static_cast<std::int64_t>(cards.size());
  std::int64_t c = 0, p = 0, s = 0;
  Rational avg_sum;
  for (const auto* g : cards) {
    c += g->correctness;
    p += g->completeness;
    s += g->similarity;
    avg_sum += g->average();
  }
  m.correctness = Rational(c, n);
  m.completeness = Rational(p, n);
  m.similarity = Rational(s, n);
  m.overall = avg_sum / n;
  return m;
}

json means_json(const AxisMeans& m) {
  return json{{"cards", m.cards},
              {"correctness", to_string(m.correctness)},
              {"completeness", to_string(m.completeness)},
              {"similarity", to_string(m.similarity)},
              {"average", to_string(m.overall)},
              {"average_value", to_double(m.overall)}};
}

std::string fixed(const Rational& r, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, to_double(r));
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

BenchReport aggregate(const std::string& model_name, const std::vector<HumanScore>& human,
                      const std::vector<GradeCard>& cards) {
  BenchReport r;
  r.model_name = model_name;
  for (const auto& h : human) {
    if (h.model != model_name) continue;
    auto [it, inserted] = r.best.emplace(h.item_id, h.score);
    if (!inserted) it->second = std::max(it->second, h.score);
  }
  std::vector<const GradeCard*> all;
  std::map<std::string, std::vector<const GradeCard*>> by_item;
  for (const auto& c : cards) {
    if (c.model != model_name) continue;
    all.push_back(&c);
    by_item[c.item_id].push_back(&c);
  }
  if (r.best.empty() && all.empty()) throw Error(Errc::NoScores, "no scores recorded for model " + model_name);

  r.n_items = r.best.empty() ? by_item.size() : r.best.size();
  r.solved_count = static_cast<std::size_t>(
      std::count_if(r.best.begin(), r.best.end(), [](const auto& kv) { return kv.second == Rational(1); }));
  r.solved_rate = Rational(static_cast<std::int64_t>(r.solved_count), static_cast<std::int64_t>(r.n_items));
  if (!all.empty()) {
    r.rubric = means_of(all);
    for (const auto& [item, list] : by_item) r.rubric_by_item.emplace(item, means_of(list));
  }
  return r;
}

BenchReport aggregate(const std::string& model_name, const ScoreStore& store) {
  return aggregate(model_name, store.human_scores(), store.cards());
}

std::string BenchReport::to_jsonl() const {
  json summary{{"kind", "summary"},
               {"model", model_name},
               {"n_items", n_items},
               {"solved_count", solved_count},
               {"solved_rate", to_string(solved_rate)},
               {"solved_rate_value", to_double(solved_rate)}};
  summary["rubric"] = rubric ? means_json(*rubric) : json(nullptr);
  std::string out = summary.dump() + "\n";
  std::set<std::string> items;
  for (const auto& [id, _] : best) items.insert(id);
  for (const auto& [id, _] : rubric_by_item) items.insert(id);
  for (const auto& id : items) {
    json line{{"kind", "item"}, {"model", model_name}, {"item_id", id}};
    const auto b = best.find(id);
    line["best_score"] = b == best.end() ? json(nullptr) : json(to_string(b->second));
    line["solved"] = b != best.end() && b->second == Rational(1);
    const auto m = rubric_by_item.find(id);
    line["rubric"] = m == rubric_by_item.end() ? json(nullptr) : means_json(m->second);
    out += line.dump() + "\n";
  }
  return out;
}

std::string BenchReport::to_table() const {
  std::ostringstream os;
  os << "model: " << model_name << "\n";
  os << "items: " << n_items << "   solved: " << solved_count << "   solved rate: " << to_string(solved_rate) << " ("
     << fixed(solved_rate) << ")\n";
  if (rubric) {
    os << "rubric over " << rubric->cards << " responses: correctness " << fixed(rubric->correctness) << ", completeness "
       << fixed(rubric->completeness) << ", similarity " << fixed(rubric->similarity) << ", average "
       << fixed(rubric->overall) << "\n";
  }
  char line[256];
  std::snprintf(line, sizeof line, "%-32s %10s %8s %8s %8s %8s\n", "item", "best", "corr", "compl", "sim", "avg");
  os << "\n" << line;
  std::set<std::string> items;
  for (const auto& [id, _] : best) items.insert(id);
  for (const auto& [id, _] : rubric_by_item) items.insert(id);
  for (const auto& id : items) {
    const auto b = best.find(id);
    const auto m = rubric_by_item.find(id);
    const bool has_m = m != rubric_by_item.end();
    std::snprintf(line, sizeof line, "%-32s %10s %8s %8s %8s %8s\n", id.c_str(),
                  b == best.end() ? "-" : to_string(b->second).c_str(),
                  has_m ? fixed(m->second.correctness, 2).c_str() : "-",
                  has_m ? fixed(m->second.completeness, 2).c_str() : "-",
                  has_m ? fixed(m->second.similarity, 2).c_str() : "-",
                  has_m ? fixed(m->second.overall, 2).c_str() : "-");
    os << line;
  }
  return os.str();
}

std::string BenchReport::to_csv(bool header) const {
  std::string out = header ? "model,item_id,best_score,correctness,completeness,similarity,average\n" : "";
  std::set<std::string> items;
  for (const auto& [id, _] : best) items.insert(id);
  for (const auto& [id, _] : rubric_by_item) items.insert(id);
  for (const auto& id : items) {
    const auto b = best.find(id);
    const auto m = rubric_by_item.find(id);
    out += csv_field(model_name) + "," + csv_field(id) + ",";
    out += b == best.end() ? "" : fixed(b->second);
    if (m != rubric_by_item.end()) {
      out += "," + fixed(m->second.correctness) + "," + fixed(m->second.completeness) + "," +
             fixed(m->second.similarity) + "," + fixed(m->second.overall);
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  return out;
}

}  // namespace derivmine::evalbench
