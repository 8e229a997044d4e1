#pragma once

#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxkit/http.hpp"
#include "voxkit/voxkit.hpp"

namespace voxkit::cli {

inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsage = 2;

// Bad input files, flags or config: exit 2.
struct ConfigError : Error {
  using Error::Error;
};

template <class F>
auto as_config(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("pool sizes must be positive integers: " + text);
    const auto n = std::stoul(t);
    if (n == 0) throw ConfigError("pool sizes must be positive integers: " + text);
    out.push_back(n);
  }
  if (out.empty()) throw ConfigError("no pool sizes given");
  return out;
}

// ---------------------------------------------------------------------------
// chat

struct ChatOptions {
  std::string config_path;
  std::string backend = "scripted";
  std::string pool_path;
  std::string script_path;
  std::string tools_path;
  std::string transcript_path;
  std::string local_tools = "all";
  bool show_think = false;
};

inline std::set<ToolId> initial_local(const GlobalToolPool& pool, const std::string& spec) {
  std::set<ToolId> out;
  if (spec == "all") {
    for (auto id : pool.ids()) out.insert(id);
  } else if (spec != "none" && !spec.empty()) {
    std::stringstream ss(spec);
    std::string name;
    while (std::getline(ss, name, ',')) out.insert(pool.id_of(trim(name)));
  }
  return out;
}

inline void print_record(std::ostream& out, const TurnRecord& r, bool show_think) {
  auto think = [&](const ReasoningTrace& t) {
    if (show_think) out << "think: " << t.text << "\n";
  };
  auto action = [&](const AgentAction& a) {
    if (a.is_speak()) out << "assistant: " << a.speak().text << "\n";
    else if (a.is_invoke()) out << "tool: " << serialize_calls(a.invoke().calls) << "\n";
    else out << "retrieve: " << kRetrieveSentinel << "\n";
  };
  think(r.reasoning);
  action(r.action);
  if (r.followup_action) {
    if (!r.candidates_added.empty()) out << "tools added: " << r.candidates_added.size() << "\n";
    if (r.followup_reasoning) think(*r.followup_reasoning);
    action(*r.followup_action);
  }
  if (!r.tool_results.empty()) out << "observation: " << serialize_observation(r.tool_results) << "\n";
}

inline int cmd_chat(const ChatOptions& opt, std::istream& in, std::ostream& out, std::ostream& err) {
  SteadyClock clock;
  json config = json::object();
  if (!opt.config_path.empty()) config = as_config("config", [&] { return load_config(opt.config_path); });

  const std::string pool_path = !opt.pool_path.empty() ? opt.pool_path : config.value("pool", "");
  if (pool_path.empty()) throw ConfigError("--pool is required");
  const GlobalToolPool pool = as_config("pool", [&] { return load_tool_pool(pool_path); });

  std::unique_ptr<PolicyBackend> backend;
  if (opt.backend == "scripted") {
    const std::string script = !opt.script_path.empty() ? opt.script_path : config.value("script", "");
    if (script.empty()) throw ConfigError("the scripted backend needs --script");
    backend = std::make_unique<ScriptedBackend>(as_config("script", [&] { return load_script(script); }),
                                                clock);
  } else if (opt.backend == "http") {
    HttpBackendConfig hc = HttpBackendConfig::from_env();
    if (config.contains("http")) {
      const auto& h = config["http"];
      hc.url = h.value("url", hc.url);
      hc.api_key = h.value("api_key", hc.api_key);
      hc.model = h.value("model", hc.model);
      hc.max_retries = h.value("max_retries", hc.max_retries);
    }
    backend = as_config("http backend", [&] { return std::make_unique<HttpBackend>(hc, clock); });
  } else {
    throw ConfigError("unknown backend: " + opt.backend);
  }

  ToolExecutorRegistry registry;
  const std::string tools = !opt.tools_path.empty() ? opt.tools_path : config.value("tools", "");
  if (!tools.empty()) as_config("tool fixture", [&] { FixtureExecutors::load(tools).install(registry); return 0; });

  TurnConfig tc;
  tc.k = config.value("k", tc.k);
  tc.max_retrieves = config.value("max_retrieves", tc.max_retrieves);
  tc.max_tool_rounds = config.value("max_tool_rounds", tc.max_tool_rounds);
  LexicalProposer lexical;
  std::unique_ptr<LlmProposer> llm;
  const CandidateProposer* proposer = &lexical;
  if (config.value("proposer", "lexical") == "llm") {
    llm = std::make_unique<LlmProposer>(*backend);
    proposer = llm.get();
  }

  SessionState session;
  session.local_tool_ids() = as_config("--local-tools", [&] { return initial_local(pool, opt.local_tools); });
  Orchestrator orch(pool, PolicyBackendSet{*backend, *backend, proposer}, registry, clock, tc);

  std::vector<TurnRecord> transcript;
  int status = kOk;
  std::string line;
  while (true) {
    out << "> " << std::flush;
    if (!std::getline(in, line)) break;
    if (trim(line).empty()) continue;
    out << "user: " << trim(line) << "\n";
    try {
      for (const auto& r : orch.run_session(session, {UserInput{trim(line), std::nullopt}})) {
        print_record(out, r, opt.show_think);
        transcript.push_back(r);
      }
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      status = kRuntimeFailure;
      break;
    }
  }
  out << "\n";
  if (!opt.transcript_path.empty()) write_transcript(opt.transcript_path, transcript);
  return status;
}

// ---------------------------------------------------------------------------
// judge

struct JudgeOptions {
  std::string corpus_path;
  std::string out_path;
  std::string metrics_path;
};

inline int cmd_judge(const JudgeOptions& opt, std::ostream& out, std::ostream&) {
  const auto items = as_config("corpus", [&] { return parse_corpus(read_text_file(opt.corpus_path), opt.corpus_path); });
  std::string verdicts;
  std::vector<ScoredItem> scored;
  for (const auto& item : items) {
    scored.push_back(score_item(item));
    verdicts += verdict_line(scored.back().verdict) + "\n";
  }
  const CorpusMetrics m = aggregate(items, scored);
  const std::string metrics = metrics_json(m).dump(2) + "\n";
  if (opt.out_path.empty()) out << verdicts;
  else atomic_write(opt.out_path, verdicts);
  if (!opt.metrics_path.empty()) atomic_write(opt.metrics_path, metrics);
  out << metrics;
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCliOptions {
  std::string sizes = "10,25,50,75,100";
  std::string compare_sizes = "1,10,25,50,75,100";
  std::string delay_model_path;
  std::size_t trials = 1;
  std::string out_dir;
  std::string clock = "fake";
};

inline int cmd_bench(const BenchCliOptions& opt, std::ostream& out, std::ostream&) {
  const auto sizes = parse_sizes(opt.sizes);
  const auto compare = parse_sizes(opt.compare_sizes);
  if (opt.trials < 1) throw ConfigError("--trials must be >= 1");
  DelayModel model = DelayModel::table7();
  if (!opt.delay_model_path.empty())
    model = as_config("delay model", [&] { return json::parse(read_text_file(opt.delay_model_path)).get<DelayModel>(); });

  std::unique_ptr<Clock> clock;
  if (opt.clock == "fake") clock = std::make_unique<FakeClock>();
  else if (opt.clock == "real") clock = std::make_unique<SteadyClock>();
  else throw ConfigError("--clock must be fake or real");

  const SweepReport sweep = run_latency_sweep(sizes, model, opt.trials, *clock);
  const auto scaling = run_scaling_compare(compare, model, opt.trials, *clock);

  if (!opt.out_dir.empty()) {
    const std::string d = opt.out_dir + "/";
    atomic_write(d + "latency.csv", sweep_csv(sweep));
    atomic_write(d + "latency.json", sweep_json(sweep).dump(2) + "\n");
    atomic_write(d + "scaling.csv", scaling_csv(scaling));
    atomic_write(d + "scaling.json", scaling_json(scaling).dump(2) + "\n");
    atomic_write(d + "plot.json", plot_data(sweep, scaling).dump(2) + "\n");
  }
  out << "pool_size, aux_duration_s, waiting_overhead_s\n" << sweep_summary(sweep);
  out << scaling_csv(scaling);
  return kOk;
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenOptions {
  std::string corpus_path;
  std::string stage = "cot";
  std::string config_path;
  std::string out_path;
  std::string ratio = "1:1";
};

// Deterministic offline strategies, configured from the "stub" object.
struct StubSuite {
  double score = 10;
  std::vector<std::string> necessity_keywords;

  StubGenerator generator{[](const GenerationRequest& r) {
    return think_json("The user asks: " + r.query + " The reply should be: " + r.answer);
  }};
  StubScorer scorer{[this](const std::string&, const std::string&, const ReasoningTrace&) {
    return score_json(score);
  }};
  StubNecessity necessity{[this](const std::string& q) {
    std::string lower;
    for (char c : q) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (const auto& k : necessity_keywords)
      if (lower.find(k) != std::string::npos) return std::string("{\"tool_necessity\": 4}");
    return std::string("{\"tool_necessity\": 0}");
  }};

  StubSuite() = default;
  StubSuite(const StubSuite&) = delete;
};

inline int cmd_datagen(const DatagenOptions& opt, std::ostream& out, std::ostream& err) {
  json config = json::object();
  if (!opt.config_path.empty()) config = as_config("config", [&] { return load_config(opt.config_path); });
  const PipelineConfig pc = as_config("pipeline config", [&] {
    return pipeline_config_from(config.value("pipeline", json::object()));
  });

  SteadyClock clock;
  StubSuite stubs;
  std::unique_ptr<HttpBackend> http;
  std::unique_ptr<BackendStrategies> remote;
  const std::string strategy = config.value("strategy", "stub");
  if (strategy == "stub") {
    const json s = config.value("stub", json::object());
    stubs.score = s.value("score", 10.0);
    for (const auto& k : s.value("necessity_keywords", std::vector<std::string>{})) {
      std::string lower;
      for (char c : k) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      stubs.necessity_keywords.push_back(lower);
    }
  } else if (strategy == "http") {
    HttpBackendConfig hc = HttpBackendConfig::from_env();
    const json h = config.value("http", json::object());
    hc.url = h.value("url", hc.url);
    hc.api_key = h.value("api_key", hc.api_key);
    hc.model = h.value("model", hc.model);
    http = as_config("http backend", [&] { return std::make_unique<HttpBackend>(hc, clock); });
    remote = std::make_unique<BackendStrategies>(*http);
  } else {
    throw ConfigError("unknown strategy: " + strategy);
  }

  auto report_skips = [&](const std::vector<std::pair<std::string, std::string>>& skipped) {
    for (const auto& [id, why] : skipped) err << "skipped " << id << ": " << why << "\n";
  };

  if (opt.stage == "cot") {
    auto rows = as_config("corpus", [&] { return read_corpus_rows(opt.corpus_path); });
    TraceGenerator& gen = remote ? static_cast<TraceGenerator&>(*remote) : stubs.generator;
    TraceScorer& sc = remote ? static_cast<TraceScorer&>(*remote) : stubs.scorer;
    const auto r = run_cot_stage(std::move(rows), gen, sc, pc, remote.get(), remote.get());
    if (!opt.out_path.empty()) atomic_write(opt.out_path, to_jsonl(r.retained));
    out << "retained=" << r.retained.size() << " discarded=" << r.discarded.size()
        << " skipped=" << r.skipped.size() << "\n";
    report_skips(r.skipped);
    return kOk;
  }
  if (opt.stage == "necessity") {
    auto rows = as_config("corpus", [&] { return read_corpus_rows(opt.corpus_path); });
    NecessityScorer& ns = remote ? static_cast<NecessityScorer&>(*remote) : stubs.necessity;
    const std::size_t total = rows.size();
    const auto r = run_necessity_stage(std::move(rows), ns, pc);
    std::string lines;
    for (const auto& row : r.kept) {
      json j{{"id", row.id}, {"query", row.query}, {"answer", row.answer},
             {"category", row.category}, {"duration_seconds", row.duration_seconds},
             {"tool_necessity", r.scores.at(row.id)}};
      lines += j.dump() + "\n";
    }
    if (!opt.out_path.empty()) atomic_write(opt.out_path, lines);
    out << "kept=" << r.kept.size() << " dropped=" << total - r.kept.size() - r.skipped.size()
        << " skipped=" << r.skipped.size() << "\n";
    report_skips(r.skipped);
    return kOk;
  }
  if (opt.stage == "compose") {
    const MixRatio ratio = as_config("--ratio", [&] { return parse_ratio(opt.ratio); });
    std::vector<SourceSample> samples;
    std::set<std::string> tool_cats = default_tool_categories();
    as_config("corpus", [&] {
      const std::string text = read_text_file(opt.corpus_path);
      const std::string head = trim(text).substr(0, 1);
      json whole;
      bool is_stats = false;
      if (head == "{" || head == "[") {
        try {
          whole = json::parse(text);
          is_stats = whole.is_object() ? whole.contains("categories") : whole.is_array();
        } catch (const json::parse_error&) {
          is_stats = false;  // several JSON lines
        }
      }
      if (is_stats) {
        const auto stats = parse_category_stats(whole);
        tool_cats = tool_categories_of(stats);
        samples = expand_stats(stats);
      } else {
        samples = samples_from_rows(read_corpus_rows(opt.corpus_path));
      }
      return 0;
    });
    if (config.contains("tool_categories"))
      tool_cats = config["tool_categories"].get<std::set<std::string>>();
    const DatasetManifest m = compose_manifest(samples, ratio, tool_cats);
    const json j = manifest_json(m);
    if (!opt.out_path.empty()) atomic_write(opt.out_path, j.dump(2) + "\n");
    char line[160];
    std::snprintf(line, sizeof line, "ratio=%s samples=%zu hours=%.2f achieved_ratio=%.4f\n",
                  m.ratio_label.c_str(), m.total_samples(), m.total_hours(),
                  j["achieved_ratio"].get<double>());
    out << line;
    return kOk;
  }
  throw ConfigError("unknown stage: " + opt.stage);
}

// ---------------------------------------------------------------------------
// Entry point shared by the binary and the tests.

inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"voxkit: think-before-speak agent runtime and toolkit"};
  app.require_subcommand(1);

  ChatOptions chat;
  auto* c = app.add_subcommand("chat", "Text chat session through the agent loop");
  c->add_option("--config", chat.config_path, "JSON config file");
  c->add_option("--backend", chat.backend, "scripted or http")->check(CLI::IsMember({"scripted", "http"}));
  c->add_option("--pool", chat.pool_path, "Tool pool JSON");
  c->add_option("--script", chat.script_path, "Scripted backend steps (JSON lines)");
  c->add_option("--tools", chat.tools_path, "Canned tool results (JSON)");
  c->add_option("--transcript", chat.transcript_path, "Write turns here on exit (JSON lines)");
  c->add_option("--local-tools", chat.local_tools, "all, none, or comma-separated tool names");
  c->add_flag("--show-think", chat.show_think, "Print reasoning traces");

  JudgeOptions judge;
  auto* j = app.add_subcommand("judge", "Score a corpus with the strict tool-call matcher");
  j->add_option("corpus", judge.corpus_path, "Corpus (JSON lines)")->required();
  j->add_option("--out", judge.out_path, "Verdict lines output");
  j->add_option("--metrics", judge.metrics_path, "Metrics JSON output");

  BenchCliOptions bench;
  auto* b = app.add_subcommand("bench", "Latency sweep and scaling comparison");
  b->add_option("--sizes", bench.sizes, "Pool sizes for the sweep");
  b->add_option("--compare-sizes", bench.compare_sizes, "Pool sizes for the scaling comparison");
  b->add_option("--delay-model", bench.delay_model_path, "Delay model JSON");
  b->add_option("--trials", bench.trials, "Trials per size");
  b->add_option("--out", bench.out_dir, "Output directory");
  b->add_option("--clock", bench.clock, "fake or real");

  DatagenOptions dg;
  auto* d = app.add_subcommand("datagen", "Reasoning-data pipeline stages");
  d->add_option("corpus", dg.corpus_path, "Corpus (JSON lines) or category stats (JSON)")->required();
  d->add_option("--stage", dg.stage, "cot, necessity or compose")
      ->check(CLI::IsMember({"cot", "necessity", "compose"}));
  d->add_option("--config", dg.config_path, "JSON config file");
  d->add_option("--out", dg.out_path, "Output file");
  d->add_option("--ratio", dg.ratio, "Tool to general duration ratio, e.g. 1:0.5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << sub->help();
    return kUsage;
  }

  try {
    if (app.got_subcommand(c)) return cmd_chat(chat, in, out, err);
    if (app.got_subcommand(j)) return cmd_judge(judge, out, err);
    if (app.got_subcommand(b)) return cmd_bench(bench, out, err);
    if (app.got_subcommand(d)) return cmd_datagen(dg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace voxkit::cli
