#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "derivmine/cli/config.hpp"
#include "derivmine/cli/dispatch.hpp"
#include "derivmine/cli/manifest.hpp"
#include "derivmine/core/hash.hpp"
#include "support/dpo.hpp"

using namespace derivmine;
using namespace derivmine::cli;
namespace fs = std::filesystem;

namespace {

// A workspace with a config pointing at the DPO fixture and a counting
// provider factory.
struct Workspace {
  Workspace() {
    const json cfg{{"corpus_dir", "corpus"},
                   {"store_dir", "store"},
                   {"export_dir", "exports"},
                   {"scores_dir", "scores"},
                   {"provider",
                    {{"kind", "deterministic_mock"},
                     {"script", (dmtest::dpo_dir() / "mock_script.jsonl").string()},
                     {"backoff_initial_ms", 0}}}};
    write_file_atomic(dir / "derivmine.json", cfg.dump(2));
    write_file_atomic(dir / "meta.jsonl", json::parse(read_file(dmtest::dpo_dir() / "meta.json")).dump() + "\n");
  }

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    args.insert(args.begin(), {"--config", (dir / "derivmine.json").string()});
    Context ctx{out, err, clock, nullptr, [this](const agentflow::ProviderBinding& b) {
                  ++providers;
                  auto p = std::make_unique<agentflow::MockProvider>(agentflow::load_script(*b.script_path));
                  last = p.get();
                  return std::unique_ptr<agentflow::Provider>(std::move(p));
                }, {}};
    const int code = dispatch(args, ctx);
    if (last) calls += last->calls();
    last = nullptr;
    return code;
  }

  int ingest() { return run({"ingest", "--corpus", dmtest::dpo_dir().string(), "--meta", (dir / "meta.jsonl").string()}); }

  std::string tree_hash(const fs::path& root) const {
    if (!fs::exists(root)) return "absent";
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, root).string() + "\n" + read_file(f) + "\n";
    return content_hash(all);
  }

  dmtest::TempDir dir;
  ManualClock clock;
  std::ostringstream out, err;
  std::size_t providers = 0;
  std::size_t calls = 0;
  agentflow::Provider* last = nullptr;
};

}  // namespace

TEST_CASE("exit codes") {
  Workspace w;
  CHECK(w.run({"--bogus"}) == kExitUsage);
  CHECK(w.err.str().find("UsageError") != std::string::npos);
  CHECK(w.run({}) == kExitUsage);
  CHECK(w.run({"generate"}) == kExitUsage);
  CHECK(w.ingest() == kExitOk);
  CHECK(w.ingest() == kExitStageError);
  CHECK(w.err.str().find("DuplicateId") != std::string::npos);
  write_file_atomic(w.dir / "derivmine.json", "{\"concurrency\": 0}");
  CHECK(w.run({"filter"}) == kExitConfig);
  CHECK(exit_code_for(Errc::ConfigError) == kExitConfig);
  CHECK(exit_code_for(Errc::UsageError) == kExitUsage);
  CHECK(exit_code_for(Errc::ExhaustedRetries) == kExitStageError);
}

TEST_CASE("minimal config takes defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.filter.min_marker_total == 6);
  CHECK(c.provider.max_attempts == 3);
  CHECK_FALSE(c.provider_configured);
  CHECK(c.concurrency == 1);
  CHECK(c.serve.port == 8080);
  CHECK(c.eval.responses_per_item == 3);
  CHECK(config_from_json(c.to_json()).to_json() == c.to_json());
  const auto full = config_from_json(json{{"provider", {{"kind", "deterministic_mock"}, {"script", "s.jsonl"}}},
                                          {"serve", {{"port", 0}}}});
  CHECK(config_from_json(full.to_json()).to_json() == full.to_json());
}

TEST_CASE("config errors are all reported") {
  CHECK_THROWS_WITH_AS(config_from_json(json{{"filter", {{"min_marker_total", 0}}}}), doctest::Contains("ConfigError"),
                       Error);
  const auto errors = config_errors(json{{"filter", {{"min_marker_total", 0}}}, {"serve", {{"port", 70000}}},
                                         {"colour", "blue"}});
  CHECK(errors.size() == 3);
  try {
    config_from_json(json{{"filter", {{"min_marker_total", 0}}}, {"concurrency", "many"}});
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 problems") != std::string::npos);
    CHECK(msg.find("filter.min_marker_total") != std::string::npos);
    CHECK(msg.find("concurrency") != std::string::npos);
  }
  dmtest::TempDir dir;
  CHECK_THROWS_WITH_AS(validate_config(dir / "none.json"), doctest::Contains("ConfigError"), Error);
  write_file_atomic(dir / "c.json", "{\"store_dir\": \"s\"}");
  CHECK(validate_config(dir / "c.json").store_dir == dir.path() / "s");
}

TEST_CASE("stage lists and manifests") {
  CHECK(parse_stage_list("ingest,filter,extract") == std::vector<Stage>{Stage::ingest, Stage::filter, Stage::extract});
  CHECK_THROWS_WITH_AS(parse_stage_list("ingest,fly"), doctest::Contains("UsageError"), Error);
  ManualClock clock;
  const auto m = make_manifest("c.json", "corpus", {Stage::filter, Stage::generate}, clock);
  CHECK(m.run_id.rfind("20231114221320-", 0) == 0);
  CHECK(m.to_json()["stages"] == json{"filter", "generate"});
  CHECK_THROWS_AS(make_manifest("c.json", "corpus", {Stage::generate, Stage::filter}, clock), Error);
  CHECK_THROWS_AS(make_manifest("c.json", "corpus", {}, clock), Error);
}

TEST_CASE("dry run makes no provider calls and writes nothing") {
  Workspace w;
  REQUIRE(w.ingest() == kExitOk);
  REQUIRE(w.run({"filter"}) == kExitOk);
  const auto corpus_before = w.tree_hash(w.dir / "corpus");
  const auto empty_store = w.tree_hash(w.dir / "store");
  CHECK(w.run({"--dry-run", "generate", "--paper", "dpo"}) == kExitOk);
  CHECK(w.calls == 0);
  CHECK_FALSE(fs::exists(w.dir / "store/samples"));
  CHECK(w.run({"--dry-run", "run", "--stages", "filter,extract,generate", "--paper", "dpo"}) == kExitOk);
  CHECK(w.calls == 0);
  CHECK(w.tree_hash(w.dir / "store") == empty_store);
  CHECK(w.tree_hash(w.dir / "corpus") == corpus_before);

  REQUIRE(w.run({"generate", "--paper", "dpo"}) == kExitOk);
  CHECK(w.calls > 0);
  const auto store_before = w.tree_hash(w.dir / "store");
  const auto calls_before = w.calls;
  CHECK(w.run({"--dry-run", "generate", "--paper", "dpo"}) == kExitOk);
  CHECK(w.run({"--dry-run", "export", "--name", "d"}) == kExitOk);
  CHECK(w.calls == calls_before);
  CHECK(w.tree_hash(w.dir / "store") == store_before);
  CHECK_FALSE(fs::exists(w.dir / "exports/d.jsonl"));
}

TEST_CASE("generate refuses an unfiltered paper") {
  Workspace w;
  REQUIRE(w.ingest() == kExitOk);
  CHECK(w.run({"generate", "--paper", "dpo"}) == kExitStageError);
  CHECK(w.err.str().find("PaperNotAccepted") != std::string::npos);
  CHECK(w.calls == 0);
  CHECK(w.run({"generate", "--paper", "ghost"}) == kExitStageError);
}

TEST_CASE("stages end to end") {
  Workspace w;
  REQUIRE(w.run({"run", "--stages", "ingest,filter,extract,generate", "--corpus", dmtest::dpo_dir().string(),
                 "--meta", (w.dir / "meta.jsonl").string(), "--paper", "dpo"}) == kExitOk);
  CHECK(fs::exists(w.dir / "store/expressions/dpo.jsonl"));
  CHECK(fs::exists(w.dir / "store/samples/events.jsonl"));
  std::size_t manifests = 0;
  for (const auto& e : fs::directory_iterator(w.dir / "store/runs")) manifests += e.path().extension() == ".json";
  CHECK(manifests == 1);
  CHECK(w.run({"export", "--name", "v1"}) == kExitStageError);
  CHECK(w.err.str().find("NothingAccepted") != std::string::npos);

  write_file_atomic(w.dir / "items.jsonl", "{\"item_id\":\"a\",\"question\":\"Q\",\"answer\":\"A\"}\n");
  CHECK(w.run({"eval", "--model", "m", "--report-only"}) == kExitStageError);
  CHECK(w.err.str().find("NoScores") != std::string::npos);
  CHECK(w.run({"eval", "--model", "m", "--human", "a:0:1/2", "--grader-id", "g"}) == kExitOk);
  CHECK(w.run({"eval", "--model", "m", "--human", "a:0:3/2"}) == kExitStageError);
  CHECK(w.run({"eval", "--model", "m", "--report-only"}) == kExitOk);
  CHECK(w.out.str().find("1/2") != std::string::npos);
  CHECK(fs::exists(w.dir / "scores/m.report.csv"));
}
