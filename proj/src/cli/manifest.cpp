#include "derivmine/cli/manifest.hpp"

#include <algorithm>
#include <cctype>

#include "derivmine/core/error.hpp"
#include "derivmine/core/hash.hpp"

namespace derivmine::cli {

namespace {

constexpr std::pair<Stage, std::string_view> kStages[] = {
    {Stage::ingest, "ingest"},     {Stage::filter, "filter"}, {Stage::extract, "extract"}, {Stage::generate, "generate"},
    {Stage::serve, "serve"},       {Stage::export_, "export"}, {Stage::eval, "eval"},
};

}  // namespace

std::string_view to_string(Stage s) noexcept {
  for (const auto& [stage, name] : kStages)
    if (stage == s) return name;
  return "ingest";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
  for (const auto& [stage, name] : kStages)
    if (name == s) return stage;
  return std::nullopt;
}

std::vector<Stage> parse_stage_list(std::string_view list) {
  std::vector<Stage> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = std::min(list.find(',', pos), list.size());
    const auto name = list.substr(pos, comma - pos);
    const auto stage = parse_stage(name);
    if (!stage) throw Error(Errc::UsageError, "unknown stage '" + std::string(name) + "'");
    out.push_back(*stage);
    pos = comma + 1;
  }
  return out;
}

nlohmann::json RunManifest::to_json() const {
  auto names = nlohmann::json::array();
  for (auto s : stages) names.push_back(to_string(s));
  return nlohmann::json{{"run_id", run_id},
                        {"started_at", started_at},
                        {"config", config_path},
                        {"corpus", corpus_path},
                        {"stages", names}};
}

RunManifest make_manifest(std::string config_path, std::string corpus_path, std::vector<Stage> stages,
                          const Clock& clock) {
  if (stages.empty()) throw Error(Errc::UsageError, "no stages requested");
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (stages[i] == stages[i - 1]) throw Error(Errc::UsageError, "stage " + std::string(to_string(stages[i])) + " requested twice");
    if (stages[i] < stages[i - 1])
      throw Error(Errc::UsageError, "stage " + std::string(to_string(stages[i])) + " cannot run after " +
                                        std::string(to_string(stages[i - 1])));
  }
  RunManifest m;
  m.config_path = std::move(config_path);
  m.corpus_path = std::move(corpus_path);
  m.stages = std::move(stages);
  m.started_at = format_timestamp(clock.now());
  std::string seed = m.started_at + "|" + m.config_path + "|" + m.corpus_path;
  for (auto s : m.stages) seed += "|" + std::string(to_string(s));
  std::string stamp;
  for (char c : m.started_at)
    if (std::isdigit(static_cast<unsigned char>(c))) stamp += c;
  m.run_id = stamp.substr(0, 14) + "-" + content_hash(seed).substr(0, 8);
  return m;
}

}  // namespace derivmine::cli
