#include "derivmine/cli/dispatch.hpp"

#include <algorithm>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "derivmine/agentflow/pipeline.hpp"
#include "derivmine/cli/config.hpp"
#include "derivmine/cli/manifest.hpp"
#include "derivmine/core/files.hpp"
#include "derivmine/corpus/bundle.hpp"
#include "derivmine/corpus/filter.hpp"
#include "derivmine/corpus/store.hpp"
#include "derivmine/curation/http.hpp"
#include "derivmine/curation/service.hpp"
#include "derivmine/evalbench/bench.hpp"

namespace derivmine::cli {

namespace fs = std::filesystem;

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::UsageError: return kExitUsage;
    case Errc::ConfigError: return kExitConfig;
    default: return kExitStageError;
  }
}

namespace {

struct Options {
  std::string config_path;
  bool dry_run = false;
  bool verbose = false;

  std::string corpus;
  std::string meta;
  std::vector<std::string> papers;
  std::string stages;

  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> static_dir;

  std::string export_name;
  std::string policy = "all_accepted";
  std::optional<std::size_t> k;

  std::string items;
  std::string model;
  std::optional<int> responses;
  std::vector<std::string> human;
  std::string grader_id;
  bool report_only = false;
};

class Runner {
 public:
  Runner(Context& ctx, const Options& opt, Config config) : ctx_(ctx), opt_(opt), config_(std::move(config)) {}

  void run(const std::vector<Stage>& stages) {
    const auto manifest = make_manifest(config_.source.string(), corpus_root().string(), stages, ctx_.clock);
    if (opt_.dry_run) {
      ctx_.out << "dry run; plan:\n" << manifest.to_json().dump(2) << "\n";
      if (opt_.verbose) ctx_.out << "config:\n" << config_.to_json().dump(2) << "\n";
    } else {
      const auto path = config_.store_dir / "runs" / (manifest.run_id + ".json");
      fs::create_directories(path.parent_path());
      write_file_atomic(path, manifest.to_json().dump(2) + "\n");
      ctx_.out << "manifest: " << path.string() << "\n";
    }
    for (auto s : stages) {
      check_cancel();
      switch (s) {
        case Stage::ingest: ingest(); break;
        case Stage::filter: filter(); break;
        case Stage::extract: extract(); break;
        case Stage::generate: generate(); break;
        case Stage::serve: serve(); break;
        case Stage::export_: export_dataset(); break;
        case Stage::eval: eval(); break;
      }
    }
  }

 private:
  void check_cancel() const {
    if (ctx_.cancel && ctx_.cancel->cancelled()) throw Error(Errc::Cancelled, "interrupted");
  }

  void log(const std::string& line) const {
    if (opt_.verbose) ctx_.err << line << "\n";
  }

  fs::path corpus_root() const { return config_.corpus_dir; }

  // Opens the corpus store; in a dry run only when it already exists, so
  // nothing is created.
  std::unique_ptr<corpus::CorpusStore> open_corpus() const {
    const auto root = config_.corpus_dir;
    if (opt_.dry_run && !fs::is_directory(root / "bodies")) return nullptr;
    return std::make_unique<corpus::CorpusStore>(root);
  }

  std::vector<std::string> selected_papers(const corpus::CorpusStore& store) const {
    if (opt_.papers.empty()) return store.ids();
    for (const auto& id : opt_.papers)
      if (!store.contains(id)) throw Error(Errc::UnknownPaper, "no paper " + id + " in " + store.root().string());
    return opt_.papers;
  }

  std::unique_ptr<agentflow::Provider> provider_for(const agentflow::ProviderBinding& b) const {
    if (ctx_.provider_factory) return ctx_.provider_factory(b);
    return agentflow::make_provider(b);
  }

  const agentflow::ProviderBinding& main_binding() const {
    if (!config_.provider_configured) throw Error(Errc::ConfigError, "provider: no provider configured");
    return config_.provider;
  }

  agentflow::PromptSet prompts() const {
    auto p = agentflow::PromptSet::defaults();
    p.override_from(config_.prompts);
    return p;
  }

  void ingest() {
    if (opt_.corpus.empty() || opt_.meta.empty()) throw Error(Errc::UsageError, "ingest needs --corpus and --meta");
    const fs::path bundles = opt_.corpus;
    const auto metas = read_jsonl(opt_.meta);
    std::unique_ptr<corpus::CorpusStore> store;
    if (!opt_.dry_run) store = std::make_unique<corpus::CorpusStore>(config_.corpus_dir);
    std::size_t failures = 0;
    for (const auto& m : metas) {
      check_cancel();
      try {
        const auto meta = corpus::PaperMetadata::from_json(m);
        const auto bundle = bundles / meta.bundle.value_or(meta.paper_id);
        if (opt_.dry_run) {
          const auto files = corpus::load_bundle(bundle);
          ctx_.out << "would ingest " << meta.paper_id << " from " << bundle.string() << " (" << files.size()
                   << " source files)\n";
          continue;
        }
        const auto record = corpus::ingest_paper(*store, bundle, m, config_.filter.marker_lexicon);
        ctx_.out << "ingested " << record.paper_id << " markers=" << record.marker_profile.total << "\n";
      } catch (const Error& e) {
        ++failures;
        ctx_.err << "error: " << e.what() << "\n";
        if (e.code() == Errc::Cancelled) throw;
      }
    }
    if (!opt_.dry_run) ctx_.out << "corpus: " << (config_.corpus_dir / "corpus.jsonl").string() << "\n";
    if (failures) throw Error(Errc::MalformedMetadata, std::to_string(failures) + " of " + std::to_string(metas.size()) +
                                                           " papers were not ingested");
  }

  void filter() {
    auto store = open_corpus();
    if (!store) {
      ctx_.out << "no corpus at " << config_.corpus_dir.string() << "; nothing to filter\n";
      return;
    }
    std::size_t accepted = 0;
    const auto ids = selected_papers(*store);
    for (const auto& id : ids) {
      auto record = *store->get(id);
      const auto verdict = opt_.dry_run ? corpus::evaluate_filter(record, config_.filter)
                                        : corpus::apply_filter(record, config_.filter);
      if (!opt_.dry_run) store->update(record);
      if (verdict.accepted) ++accepted;
      std::string failed;
      for (auto r : verdict.failed_rules) failed += (failed.empty() ? "" : ",") + std::string(corpus::to_string(r));
      ctx_.out << (opt_.dry_run ? "would mark " : "") << id << (verdict.accepted ? " accepted" : " rejected")
               << " markers=" << record.marker_profile.total << (failed.empty() ? "" : " failed=" + failed) << "\n";
    }
    ctx_.out << accepted << " of " << ids.size() << " papers accepted\n";
    if (!opt_.dry_run) ctx_.out << "corpus: " << (config_.corpus_dir / "corpus.jsonl").string() << "\n";
  }

  void extract() {
    auto store = open_corpus();
    if (!store) throw Error(Errc::UnknownPaper, "no corpus at " + config_.corpus_dir.string());
    for (const auto& id : selected_papers(*store)) {
      const auto record = *store->get(id);
      const auto report = texmath::extract_document(agentflow::latex_sources(record));
      for (const auto& d : report.diagnostics) log(id + ": " + d.file + ": " + d.message);
      const auto path = config_.store_dir / "expressions" / (safe_file_stem(id) + ".jsonl");
      ctx_.out << id << ": " << report.expressions.size() << " expressions, " << report.duplicates_merged
               << " duplicates merged, " << report.diagnostics.size() << " diagnostics\n";
      if (opt_.dry_run) continue;
      fs::create_directories(path.parent_path());
      write_file_atomic(path, texmath::to_jsonl(report));
      ctx_.out << "expressions: " << path.string() << "\n";
    }
  }

  void generate() {
    const auto& binding = main_binding();
    auto corpus_store = open_corpus();
    if (!corpus_store) throw Error(Errc::UnknownPaper, "no corpus at " + config_.corpus_dir.string());
    if (opt_.papers.empty()) throw Error(Errc::UsageError, "generate needs --paper");
    const auto prompt_set = prompts();
    for (const auto& id : selected_papers(*corpus_store)) {
      const auto record = *corpus_store->get(id);
      if (!record.verdict || !record.verdict->accepted)
        throw Error(Errc::PaperNotAccepted, "paper " + id + " has not passed the reasoning-density filter");
    }
    if (opt_.dry_run) {
      for (const auto& id : selected_papers(*corpus_store)) {
        const auto record = *corpus_store->get(id);
        const auto report = texmath::extract_document(agentflow::latex_sources(record));
        ctx_.out << "would generate " << id << ": " << report.expressions.size() << " expressions via provider "
                 << binding.name << " (" << agentflow::to_string(binding.kind) << "), max_attempts "
                 << binding.max_attempts << "\n";
      }
      return;
    }
    auto provider = provider_for(binding);
    store::SampleStore samples(config_.store_dir / "samples", ctx_.clock);
    agentflow::PipelineOptions popt;
    popt.concurrency = config_.concurrency;
    agentflow::Pipeline pipeline(*provider, binding, prompt_set, samples, ctx_.clock, popt, ctx_.cancel);
    for (const auto& id : selected_papers(*corpus_store)) {
      const auto report = agentflow::run_pipeline(*corpus_store, id, pipeline);
      ctx_.out << report.to_json().dump() << "\n";
    }
    samples.flush();
    ctx_.out << "samples: " << (samples.root() / "events.jsonl").string() << "\n";
  }

  void serve() {
    const auto host = opt_.host.value_or(config_.serve.host);
    const int port = opt_.port.value_or(config_.serve.port);
    std::optional<fs::path> static_dir = config_.serve.static_dir;
    if (opt_.static_dir) static_dir = fs::path(*opt_.static_dir);
    if (static_dir && !fs::is_directory(*static_dir))
      throw Error(Errc::ConfigError, "serve.static_dir: not a directory: " + static_dir->string());
    if (opt_.dry_run) {
      ctx_.out << "would serve " << (config_.store_dir / "samples").string() << " on http://" << host << ":" << port
               << (static_dir ? " with ui from " + static_dir->string() : "") << "\n";
      return;
    }
    store::SampleStore samples(config_.store_dir / "samples", ctx_.clock);
    curation::CurationService service(samples, ctx_.clock, config_.export_dir, config_.curation);
    curation::CurationServer server(service, static_dir);
    const int bound = server.bind(host, port);
    ctx_.out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
    std::thread loop([&] { server.listen(); });
    if (ctx_.on_listening) ctx_.on_listening(bound);
    while (!(ctx_.cancel && ctx_.cancel->cancelled())) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    loop.join();
    samples.flush();
    ctx_.out << "stopped; samples: " << (samples.root() / "events.jsonl").string() << "\n";
  }

  void export_dataset() {
    if (opt_.export_name.empty()) throw Error(Errc::UsageError, "export needs --name");
    const auto policy = curation::parse_selection_policy(opt_.policy);
    if (!policy) throw Error(Errc::UsageError, "unknown selection policy " + opt_.policy);
    if (opt_.dry_run) {
      ctx_.out << "would export " << opt_.export_name << " with " << curation::to_string(*policy)
               << (opt_.k ? " k=" + std::to_string(*opt_.k) : "") << " to " << config_.export_dir.string() << "\n";
      return;
    }
    store::SampleStore samples(config_.store_dir / "samples", ctx_.clock);
    curation::CurationService service(samples, ctx_.clock, config_.export_dir, config_.curation);
    const auto ex = service.export_dataset(opt_.export_name, *policy, opt_.k);
    ctx_.out << "exported " << ex.items.size() << " items\n";
    ctx_.out << "dataset: " << (config_.export_dir / (opt_.export_name + ".jsonl")).string() << "\n";
    ctx_.out << "meta: " << (config_.export_dir / (opt_.export_name + ".meta.json")).string() << "\n";
  }

  void eval() {
    if (opt_.model.empty()) throw Error(Errc::UsageError, "eval needs --model");
    const auto scores_path = config_.scores_dir / (safe_file_stem(opt_.model) + ".jsonl");
    std::vector<evalbench::HumanScore> human;
    for (const auto& arg : opt_.human) human.push_back(parse_human(arg));
    const bool generate = !opt_.report_only && human.empty();
    const int k = opt_.responses.value_or(config_.eval.responses_per_item);
    std::vector<evalbench::EvalItem> items;
    if (generate) {
      if (opt_.items.empty()) throw Error(Errc::UsageError, "eval needs --items unless --report-only or --human is given");
      items = evalbench::load_items(opt_.items);
    }
    if (opt_.dry_run) {
      if (generate) {
        const auto& solver = main_binding();
        const auto& grader = config_.eval.grader ? *config_.eval.grader : solver;
        ctx_.out << "would generate " << k << " responses for " << items.size() << " items with " << solver.name
                 << " and grade them with " << grader.name << "\n";
      }
      for (const auto& h : human)
        ctx_.out << "would record " << h.item_id << "#" << h.response_index << " = " << evalbench::to_string(h.score) << "\n";
      ctx_.out << "scores: " << scores_path.string() << "\n";
      return;
    }
    fs::create_directories(config_.scores_dir);
    evalbench::ScoreStore scores(scores_path);
    for (auto& h : human) {
      h.model = opt_.model;
      h.grader_id = opt_.grader_id;
      scores.add(h);
    }
    if (generate) {
      const auto& solver_binding = main_binding();
      const auto& grader_binding = config_.eval.grader ? *config_.eval.grader : solver_binding;
      const auto prompt_set = prompts();
      auto solver = provider_for(solver_binding);
      std::unique_ptr<agentflow::Provider> separate_grader;
      if (config_.eval.grader) separate_grader = provider_for(grader_binding);
      agentflow::Provider& grader = separate_grader ? *separate_grader : *solver;
      agentflow::AgentEnv solve_env{*solver, solver_binding, ctx_.clock, nullptr, ctx_.cancel};
      agentflow::AgentEnv grade_env{grader, grader_binding, ctx_.clock, nullptr, ctx_.cancel};
      std::vector<evalbench::ModelResponse> responses;
      for (const auto& item : items) {
        for (auto& r : evalbench::generate_responses(item, opt_.model, solve_env, prompt_set, k)) {
          if (r.failed) log("response " + r.item_id + "#" + std::to_string(r.response_index) + " failed: " + r.error);
          scores.add(r);
          responses.push_back(std::move(r));
        }
      }
      auto graded = evalbench::grade_all(items, responses, grade_env, prompt_set, config_.eval.concurrency);
      for (const auto& c : graded.cards) scores.add(c);
      for (const auto& f : graded.failures)
        ctx_.err << "grading " << f.item_id << "#" << f.response_index << " failed: " << f.error << "\n";
    }
    ctx_.out << "scores: " << scores_path.string() << "\n";
    const auto report = evalbench::aggregate(opt_.model, scores);
    const auto stem = config_.scores_dir / safe_file_stem(opt_.model);
    write_file_atomic(stem.string() + ".report.txt", report.to_table());
    write_file_atomic(stem.string() + ".report.csv", report.to_csv());
    write_file_atomic(stem.string() + ".report.jsonl", report.to_jsonl());
    ctx_.out << report.to_table();
    for (const char* ext : {".report.txt", ".report.csv", ".report.jsonl"}) ctx_.out << "report: " << stem.string() << ext << "\n";
  }

  // ITEM:INDEX:COMPLETED/TOTAL
  static evalbench::HumanScore parse_human(const std::string& arg) {
    const auto slash = arg.rfind('/');
    const auto c2 = arg.rfind(':', slash);
    const auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : arg.rfind(':', c2 - 1);
    if (slash == std::string::npos || c2 == std::string::npos || c1 == std::string::npos)
      throw Error(Errc::UsageError, "--human expects ITEM:INDEX:COMPLETED/TOTAL, got " + arg);
    try {
      return evalbench::record_human_score(arg.substr(0, c1), std::stoi(arg.substr(c1 + 1, c2 - c1 - 1)),
                                           std::stoll(arg.substr(c2 + 1, slash - c2 - 1)), std::stoll(arg.substr(slash + 1)));
    } catch (const std::logic_error&) {
      throw Error(Errc::UsageError, "--human expects ITEM:INDEX:COMPLETED/TOTAL, got " + arg);
    }
  }

  Context& ctx_;
  const Options& opt_;
  Config config_;
};

Config load_config(const Options& opt) {
  if (!opt.config_path.empty()) return validate_config(opt.config_path);
  if (fs::is_regular_file("derivmine.json")) return validate_config("derivmine.json");
  return config_from_json(json::object());
}

}  // namespace

int dispatch(const std::vector<std::string>& args, Context& ctx) {
  Options opt;
  CLI::App app{"Mines derivations from paper sources into reviewed question/answer samples.", "derivmine"};
  app.set_help_all_flag("--help-all");
  app.require_subcommand(1);
  app.add_option("--config", opt.config_path, "Config file (JSON)");
  app.add_flag("--dry-run", opt.dry_run, "Validate and print the plan without provider calls or writes");
  app.add_flag("-v,--verbose", opt.verbose, "Print diagnostics");

  auto* ingest = app.add_subcommand("ingest", "Read paper bundles and their metadata into the corpus");
  ingest->add_option("--corpus", opt.corpus, "Directory holding one bundle per paper")->required();
  ingest->add_option("--meta", opt.meta, "Metadata JSONL, one paper per line")->required();

  auto* filter = app.add_subcommand("filter", "Apply the reasoning-density filter");
  filter->add_option("--paper", opt.papers, "Paper id (default: all)");

  auto* extract = app.add_subcommand("extract", "Extract formulas and theorem-like statements");
  extract->add_option("--paper", opt.papers, "Paper id (default: all)");

  auto* generate = app.add_subcommand("generate", "Run the agent chain on accepted papers");
  generate->add_option("--paper", opt.papers, "Paper id")->required();

  auto* serve = app.add_subcommand("serve", "Start the curation HTTP service");
  serve->add_option("--host", opt.host, "Bind address");
  serve->add_option("--port", opt.port, "Port (0 picks a free one)");
  serve->add_option("--static", opt.static_dir, "Review UI bundle served under /ui");

  auto* exp = app.add_subcommand("export", "Write accepted samples as a dataset");
  exp->add_option("--name", opt.export_name, "Dataset name")->required();
  exp->add_option("--policy", opt.policy, "all_accepted or top_k_by_difficulty_rank");
  exp->add_option("--k", opt.k, "Items kept by top_k");

  auto* ev = app.add_subcommand("eval", "Generate, grade and report model derivations");
  ev->add_option("--items", opt.items, "Items JSONL (a dataset export works)");
  ev->add_option("--model", opt.model, "Model name the scores are filed under")->required();
  ev->add_option("--k", opt.responses, "Responses per item");
  ev->add_option("--human", opt.human, "Record a human score ITEM:INDEX:COMPLETED/TOTAL");
  ev->add_option("--grader-id", opt.grader_id, "Who recorded the human scores");
  ev->add_flag("--report-only", opt.report_only, "Aggregate stored scores only");

  auto* run = app.add_subcommand("run", "Run several stages in pipeline order");
  run->add_option("--stages", opt.stages, "Comma-separated stages")->required();
  run->add_option("--corpus", opt.corpus, "Bundle directory for ingest");
  run->add_option("--meta", opt.meta, "Metadata JSONL for ingest");
  run->add_option("--paper", opt.papers, "Paper ids");
  run->add_option("--name", opt.export_name, "Dataset name for export");
  run->add_option("--policy", opt.policy, "Selection policy for export");
  run->add_option("--k", opt.k, "Items kept by top_k");
  run->add_option("--items", opt.items, "Items JSONL for eval");
  run->add_option("--model", opt.model, "Model name for eval");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    ctx.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    ctx.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    ctx.err << "error: UsageError: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::vector<Stage> stages;
    const std::pair<CLI::App*, Stage> single[] = {{ingest, Stage::ingest},     {filter, Stage::filter},
                                                  {extract, Stage::extract},   {generate, Stage::generate},
                                                  {serve, Stage::serve},       {exp, Stage::export_},
                                                  {ev, Stage::eval}};
    for (const auto& [cmd, stage] : single)
      if (cmd->parsed()) stages.push_back(stage);
    if (run->parsed()) stages = parse_stage_list(opt.stages);
    auto config = load_config(opt);
    Runner(ctx, opt, std::move(config)).run(stages);
    return kExitOk;
  } catch (const Error& e) {
    ctx.err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kExitStageError;
  }
}

}  // namespace derivmine::cli
