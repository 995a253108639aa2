#include "derivmine/cli/config.hpp"

#include <set>

#include "derivmine/agentflow/prompts.hpp"
#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::cli {

namespace fs = std::filesystem;

namespace {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& field, const std::string& message) { errors_.push_back(field + ": " + message); }

  bool object(const json& j, const std::string& field, const std::set<std::string>& known) {
    if (!j.is_object()) {
      error(field.empty() ? "config" : field, "must be an object");
      return false;
    }
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) error(field.empty() ? key : field + "." + key, "unknown key");
    return true;
  }

  template <class T, class Check>
  void get(const json& j, const char* key, const std::string& field, T& out, Check check, const char* expected) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!check(j.at(key))) {
      error(field, std::string("expected ") + expected);
      return;
    }
    out = j.at(key).get<T>();
  }

  void path(const json& j, const char* key, const std::string& field, fs::path& out) {
    std::string s = out.string();
    get(j, key, field, s, [](const json& v) { return v.is_string() && !v.get<std::string>().empty(); },
        "a non-empty string");
    out = s;
  }

  void integer(const json& j, const char* key, const std::string& field, std::int64_t& out, std::int64_t min,
               std::int64_t max = std::numeric_limits<std::int64_t>::max()) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_number_integer()) {
      error(field, "expected an integer");
      return;
    }
    const auto v = j.at(key).get<std::int64_t>();
    if (v < min || v > max) {
      error(field, "must be between " + std::to_string(min) + " and " + std::to_string(max) + ", got " + std::to_string(v));
      return;
    }
    out = v;
  }

 private:
  std::vector<std::string>& errors_;
};

// Binding errors arrive as "provider.<key>: ..."; rename them for other slots.
void add_binding_errors(std::vector<std::string>& out, std::vector<std::string> errs, const std::string& slot) {
  for (auto& e : errs) {
    if (e.rfind("provider", 0) == 0) e = slot + e.substr(8);
    out.push_back(std::move(e));
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

agentflow::ProviderBinding read_binding(const json& j, const std::string& slot, const fs::path& base,
                                        std::vector<std::string>& errors) {
  std::vector<std::string> errs;
  auto b = agentflow::ProviderBinding::from_json(j, &errs);
  if (errs.empty()) {
    auto v = b.validate();
    errs.insert(errs.end(), v.begin(), v.end());
  }
  add_binding_errors(errors, std::move(errs), slot);
  if (b.script_path) b.script_path = resolve(base, *b.script_path).string();
  if (b.replay_path) b.replay_path = resolve(base, *b.replay_path).string();
  return b;
}

struct Parsed {
  Config config;
  std::vector<std::string> errors;
};

Parsed parse(const json& j, const fs::path& base) {
  Parsed p;
  auto& c = p.config;
  auto& errors = p.errors;
  Reader r(errors);
  if (!r.object(j, "", {"corpus_dir", "store_dir", "export_dir", "scores_dir", "filter", "provider", "prompts",
                        "concurrency", "curation", "serve", "eval"}))
    return p;

  r.path(j, "corpus_dir", "corpus_dir", c.corpus_dir);
  r.path(j, "store_dir", "store_dir", c.store_dir);
  r.path(j, "export_dir", "export_dir", c.export_dir);
  r.path(j, "scores_dir", "scores_dir", c.scores_dir);

  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    if (r.object(f, "filter", {"marker_lexicon", "min_marker_total", "require_score", "date_window"})) {
      if (f.contains("marker_lexicon")) {
        const auto& lex = f.at("marker_lexicon");
        if (!lex.is_array() || !std::all_of(lex.begin(), lex.end(), [](const json& v) { return v.is_string(); }))
          r.error("filter.marker_lexicon", "expected an array of strings");
        else
          c.filter.marker_lexicon = lex.get<std::set<std::string>>();
      }
      std::int64_t min_total = c.filter.min_marker_total;
      r.integer(f, "min_marker_total", "filter.min_marker_total", min_total, std::numeric_limits<std::int64_t>::min());
      c.filter.min_marker_total = min_total;
      r.get(f, "require_score", "filter.require_score", c.filter.require_score,
            [](const json& v) { return v.is_boolean(); }, "a boolean");
      if (f.contains("date_window")) {
        const auto& w = f.at("date_window");
        if (r.object(w, "filter.date_window", {"start", "end"})) {
          for (auto [key, slot] : {std::pair{"start", &c.filter.date_window.start}, std::pair{"end", &c.filter.date_window.end}}) {
            if (!w.contains(key)) continue;
            const std::string field = std::string("filter.date_window.") + key;
            const auto d = w.at(key).is_string() ? Date::parse(w.at(key).get<std::string>()) : std::nullopt;
            if (!d) r.error(field, "expected an ISO-8601 date");
            else *slot = *d;
          }
        }
      }
      for (const auto& e : c.filter.validate()) errors.push_back("filter." + e);
    }
  }

  if (j.contains("provider")) {
    c.provider_configured = true;
    c.provider = read_binding(j.at("provider"), "provider", base, errors);
  }

  if (j.contains("prompts")) {
    const auto& pr = j.at("prompts");
    if (!pr.is_object()) {
      r.error("prompts", "must be an object of role to file");
    } else {
      const auto roles = agentflow::PromptSet::defaults().roles();
      for (const auto& [role, file] : pr.items()) {
        const std::string field = "prompts." + role;
        if (std::find(roles.begin(), roles.end(), role) == roles.end()) r.error(field, "unknown agent role");
        else if (!file.is_string()) r.error(field, "expected a file path");
        else {
          const auto path = resolve(base, file.get<std::string>());
          if (!fs::is_regular_file(path)) r.error(field, "file not found: " + path.string());
          else c.prompts[role] = path;
        }
      }
    }
  }

  std::int64_t conc = static_cast<std::int64_t>(c.concurrency);
  r.integer(j, "concurrency", "concurrency", conc, 1, 1024);
  c.concurrency = static_cast<std::size_t>(conc);

  if (j.contains("curation")) {
    const auto& cu = j.at("curation");
    if (r.object(cu, "curation", {"lease_minutes", "consensus"})) {
      std::int64_t lease = std::chrono::duration_cast<std::chrono::minutes>(c.curation.lease).count();
      std::int64_t consensus = c.curation.consensus;
      r.integer(cu, "lease_minutes", "curation.lease_minutes", lease, 1, 7 * 24 * 60);
      r.integer(cu, "consensus", "curation.consensus", consensus, 1, 100);
      c.curation.lease = std::chrono::minutes{lease};
      c.curation.consensus = static_cast<int>(consensus);
    }
  }

  if (j.contains("serve")) {
    const auto& s = j.at("serve");
    if (r.object(s, "serve", {"host", "port", "static_dir"})) {
      r.get(s, "host", "serve.host", c.serve.host, [](const json& v) { return v.is_string(); }, "a string");
      std::int64_t port = c.serve.port;
      r.integer(s, "port", "serve.port", port, 0, 65535);
      c.serve.port = static_cast<int>(port);
      if (s.contains("static_dir") && !s.at("static_dir").is_null()) {
        fs::path dir;
        r.path(s, "static_dir", "serve.static_dir", dir);
        if (!dir.empty()) c.serve.static_dir = resolve(base, dir);
      }
    }
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (r.object(e, "eval", {"responses_per_item", "concurrency", "grader"})) {
      std::int64_t k = c.eval.responses_per_item;
      std::int64_t ec = c.eval.concurrency;
      r.integer(e, "responses_per_item", "eval.responses_per_item", k, 1, 100);
      r.integer(e, "concurrency", "eval.concurrency", ec, 1, 1024);
      c.eval.responses_per_item = static_cast<int>(k);
      c.eval.concurrency = static_cast<int>(ec);
      if (e.contains("grader") && !e.at("grader").is_null()) c.eval.grader = read_binding(e.at("grader"), "eval.grader", base, errors);
    }
  }

  c.corpus_dir = resolve(base, c.corpus_dir);
  c.store_dir = resolve(base, c.store_dir);
  c.export_dir = resolve(base, c.export_dir);
  c.scores_dir = resolve(base, c.scores_dir);
  return p;
}

std::string joined(const std::vector<std::string>& errors) {
  std::string msg = std::to_string(errors.size()) + (errors.size() == 1 ? " problem" : " problems");
  for (const auto& e : errors) msg += "\n  " + e;
  return msg;
}

}  // namespace

json Config::to_json() const {
  json prompt_files = json::object();
  for (const auto& [role, path] : prompts) prompt_files[role] = path.string();
  json j{{"corpus_dir", corpus_dir.string()},
         {"store_dir", store_dir.string()},
         {"export_dir", export_dir.string()},
         {"scores_dir", scores_dir.string()},
         {"filter", filter.to_json()},
         {"prompts", prompt_files},
         {"concurrency", concurrency},
         {"curation",
          {{"lease_minutes", std::chrono::duration_cast<std::chrono::minutes>(curation.lease).count()},
           {"consensus", curation.consensus}}},
         {"serve", {{"host", serve.host}, {"port", serve.port}}},
         {"eval", {{"responses_per_item", eval.responses_per_item}, {"concurrency", eval.concurrency}}}};
  if (provider_configured) j["provider"] = provider.to_json();
  if (serve.static_dir) j["serve"]["static_dir"] = serve.static_dir->string();
  if (eval.grader) j["eval"]["grader"] = eval.grader->to_json();
  return j;
}

std::vector<std::string> config_errors(const json& j) { return parse(j, {}).errors; }

Config config_from_json(const json& j, const fs::path& base_dir) {
  auto p = parse(j, base_dir);
  if (!p.errors.empty()) throw Error(Errc::ConfigError, joined(p.errors));
  return std::move(p.config);
}

Config validate_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(Errc::ConfigError, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + " is not valid JSON: " + e.what());
  }
  auto c = config_from_json(j, path.parent_path());
  c.source = path;
  return c;
}

}  // namespace derivmine::cli
