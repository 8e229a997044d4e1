#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voxkit/backends.hpp"
#include "voxkit/clock.hpp"
#include "voxkit/executors.hpp"
#include "voxkit/io.hpp"
#include "voxkit/orchestrator.hpp"
#include "voxkit/tool_space.hpp"

namespace voxkit {

// Simulated latencies, in seconds. The proposer delay is linear in the pool
// size unless a table of (size, delay) points is given, in which case it is
// interpolated piecewise linearly and extended along the end segments.
struct DelayModel {
  double act_base = 3.0;
  double think_base = 0.0;
  double propose_base = 1.25;
  double propose_per_tool = 0.0135;
  double prompt_per_tool = 0.0;
  std::vector<std::pair<std::size_t, double>> propose_table;

  void validate() const {
    if (act_base < 0 || think_base < 0 || propose_base < 0 || propose_per_tool < 0 ||
        prompt_per_tool < 0)
      throw InvalidValue("delay model coefficients must be >= 0");
    for (std::size_t i = 0; i < propose_table.size(); ++i) {
      if (propose_table[i].second < 0) throw InvalidValue("table delays must be >= 0");
      if (i && propose_table[i].first <= propose_table[i - 1].first)
        throw InvalidValue("table sizes must be strictly increasing");
    }
  }

  double propose_delay(std::size_t pool_size) const {
    const double n = static_cast<double>(pool_size);
    if (propose_table.empty()) return propose_base + propose_per_tool * n;
    if (propose_table.size() == 1) return propose_table.front().second;
    std::size_t hi = 1;
    while (hi + 1 < propose_table.size() && propose_table[hi].first < pool_size) ++hi;
    const auto [x0, y0] = propose_table[hi - 1];
    const auto [x1, y1] = propose_table[hi];
    const double t = (n - static_cast<double>(x0)) / static_cast<double>(x1 - x0);
    return std::max(0.0, y0 + t * (y1 - y0));
  }

  // Auxiliary durations reported for pool sizes 10, 25, 50, 75 and 100.
  static DelayModel table7() {
    DelayModel m;
    m.propose_table = {{10, 1.3131}, {25, 1.5731}, {50, 1.8996}, {75, 2.3782}, {100, 2.6426}};
    return m;
  }
};

inline void to_json(json& j, const DelayModel& m) {
  j = json{{"act_base", m.act_base},
           {"think_base", m.think_base},
           {"propose_base", m.propose_base},
           {"propose_per_tool", m.propose_per_tool},
           {"prompt_per_tool", m.prompt_per_tool}};
  if (!m.propose_table.empty()) {
    json t = json::array();
    for (auto [n, d] : m.propose_table) t.push_back({{"pool_size", n}, {"delay_s", d}});
    j["propose_table"] = t;
  }
}

inline void from_json(const json& j, DelayModel& m) {
  m = j.value("preset", std::string()) == "table7" ? DelayModel::table7() : DelayModel{};
  m.act_base = j.value("act_base", m.act_base);
  m.think_base = j.value("think_base", m.think_base);
  m.propose_base = j.value("propose_base", m.propose_base);
  m.propose_per_tool = j.value("propose_per_tool", m.propose_per_tool);
  m.prompt_per_tool = j.value("prompt_per_tool", m.prompt_per_tool);
  if (j.contains("propose_table")) {
    m.propose_table.clear();
    for (const auto& e : j.at("propose_table"))
      m.propose_table.emplace_back(e.at("pool_size").get<std::size_t>(), e.at("delay_s").get<double>());
  }
  m.validate();
}

// Pool of `n` tools named synth.tool_0001 and up, each tied to one topic word.
inline GlobalToolPool synthetic_pool(std::size_t n) {
  GlobalToolPool pool;
  for (std::size_t i = 1; i <= n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth.tool_%04zu", i);
    ToolSpec spec;
    spec.name = name;
    spec.description = "Looks up topic" + std::to_string(i) + " records";
    spec.parameters.push_back(ParamSpec{"query", ParamKind::string, true, std::nullopt});
    pool.register_tool(std::move(spec));
  }
  return pool;
}

struct SweepRow {
  std::size_t pool_size = 0;
  double aux_duration_s = 0;
  double waiting_overhead_s = 0;
  double turn_wall_s = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double average_overhead_s = 0;
};

struct BenchOptions {
  std::size_t k = 5;
  std::size_t local_size = 5;  // tools already local when the turn starts
};

namespace detail {

struct TurnSample {
  double aux = 0, waiting = 0, wall = 0;
};

// One retrieval turn: act asks for tools while the proposer scans the whole
// pool, then a follow-up pass answers.
inline TurnSample retrieval_turn(const GlobalToolPool& pool, const DelayModel& model, Clock& clock,
                                 const BenchOptions& opt) {
  ConstantBackend think_inner("look up topic1 records", "ok");
  ScriptedBackend act_script({{PolicyPhase::act, std::string(kRetrieveSentinel), 0},
                              {PolicyPhase::act, "done", 0}},
                             clock);
  DelayedBackend think(think_inner, clock, model.think_base, 0);
  DelayedBackend act(act_script, clock, model.act_base, model.prompt_per_tool);
  LexicalProposer lexical;
  DelayedProposer proposer(lexical, clock,
                           [&model](std::size_t n) { return model.propose_delay(n); });
  ToolExecutorRegistry registry;
  TurnConfig config;
  config.k = opt.k;

  SessionState session;
  const auto ids = pool.ids();
  for (std::size_t i = 0; i < ids.size() && i < opt.local_size; ++i)
    session.local_tool_ids().insert(ids[i]);

  Orchestrator orch(pool, PolicyBackendSet{think, act, &proposer}, registry, clock, config);
  const TurnRecord rec = orch.run_turn(session, {UserInput{"benchmark request", std::nullopt}});
  return {rec.timing.propose_duration, rec.timing.waiting_overhead, rec.timing.turn_wall()};
}

// Baseline: every pool tool sits in the prompt and the act policy answers
// directly.
inline double single_agent_turn(const GlobalToolPool& pool, const DelayModel& model, Clock& clock) {
  ConstantBackend inner("", "done");
  DelayedBackend act(inner, clock, model.act_base, model.prompt_per_tool);
  ConstantBackend think("", "");
  ToolExecutorRegistry registry;
  TurnConfig config;
  config.use_proposer = false;
  SessionState session;
  for (auto id : pool.ids()) session.local_tool_ids().insert(id);
  Orchestrator orch(pool, PolicyBackendSet{think, act, nullptr}, registry, clock, config);
  return orch.run_turn(session, {UserInput{"benchmark request", std::nullopt}}).timing.turn_wall();
}

}  // namespace detail

// Trials run one after another so a real clock measures them in isolation.
inline SweepReport run_latency_sweep(std::vector<std::size_t> sizes, const DelayModel& model,
                                     std::size_t trials, Clock& clock,
                                     const BenchOptions& opt = {}) {
  if (sizes.empty()) throw PreconditionViolated("sweep needs at least one pool size");
  if (trials < 1) throw PreconditionViolated("trials must be >= 1");
  model.validate();
  std::sort(sizes.begin(), sizes.end());
  SweepReport report;
  for (auto n : sizes) {
    const GlobalToolPool pool = synthetic_pool(n);
    SweepRow row;
    row.pool_size = n;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto s = detail::retrieval_turn(pool, model, clock, opt);
      row.aux_duration_s += s.aux;
      row.waiting_overhead_s += s.waiting;
      row.turn_wall_s += s.wall;
    }
    const double k = static_cast<double>(trials);
    row.aux_duration_s /= k;
    row.waiting_overhead_s /= k;
    row.turn_wall_s /= k;
    report.rows.push_back(row);
  }
  double sum = 0;
  for (const auto& r : report.rows) sum += r.waiting_overhead_s;
  report.average_overhead_s = sum / static_cast<double>(report.rows.size());
  return report;
}

struct ScalingRow {
  std::size_t pool_size = 0;
  double single_agent_s = 0;
  double voxkit_s = 0;
};

inline std::vector<ScalingRow> run_scaling_compare(std::vector<std::size_t> sizes,
                                                   const DelayModel& model, std::size_t trials,
                                                   Clock& clock, const BenchOptions& opt = {}) {
  if (sizes.empty()) throw PreconditionViolated("comparison needs at least one pool size");
  if (trials < 1) throw PreconditionViolated("trials must be >= 1");
  model.validate();
  std::sort(sizes.begin(), sizes.end());
  std::vector<ScalingRow> rows;
  for (auto n : sizes) {
    const GlobalToolPool pool = synthetic_pool(n);
    ScalingRow row;
    row.pool_size = n;
    for (std::size_t t = 0; t < trials; ++t) {
      row.single_agent_s += detail::single_agent_turn(pool, model, clock);
      row.voxkit_s += detail::retrieval_turn(pool, model, clock, opt).wall;
    }
    row.single_agent_s /= static_cast<double>(trials);
    row.voxkit_s /= static_cast<double>(trials);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Token accounting

struct TokenAccount {
  double think_avg = 0;
  double answer_avg = 0;
  std::optional<double> ratio;  // think / answer; undefined when answer_avg is 0
  std::size_t turns = 0;
};

inline TokenAccount token_ratio(double think_avg, double answer_avg, std::size_t turns = 0) {
  TokenAccount a{think_avg, answer_avg, std::nullopt, turns};
  if (answer_avg > 0) a.ratio = think_avg / answer_avg;
  return a;
}

inline TokenAccount token_accounting(const std::vector<TurnRecord>& turns) {
  if (turns.empty()) throw PreconditionViolated("token accounting needs at least one turn");
  double think = 0, answer = 0;
  for (const auto& t : turns) {
    think += static_cast<double>(t.timing.tokens_think);
    answer += static_cast<double>(t.timing.tokens_answer);
  }
  const double n = static_cast<double>(turns.size());
  return token_ratio(think / n, answer / n, turns.size());
}

inline TokenAccount token_accounting(const std::vector<std::vector<TurnRecord>>& transcripts) {
  std::vector<TurnRecord> all;
  for (const auto& t : transcripts) all.insert(all.end(), t.begin(), t.end());
  return token_accounting(all);
}

// ---------------------------------------------------------------------------
// Report output

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline constexpr const char* kSweepCsvHeader = "pool_size,aux_duration_s,waiting_overhead_s,turn_wall_s";

inline std::string sweep_csv(const SweepReport& r) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& row : r.rows)
    out += std::to_string(row.pool_size) + "," + fmt_fixed(row.aux_duration_s, 6) + "," +
           fmt_fixed(row.waiting_overhead_s, 6) + "," + fmt_fixed(row.turn_wall_s, 6) + "\n";
  return out;
}

// "10, 1.3131, 0.0000": size, auxiliary duration, waiting overhead.
inline std::string sweep_summary_row(const SweepRow& row) {
  return std::to_string(row.pool_size) + ", " + fmt_fixed(row.aux_duration_s, 4) + ", " +
         fmt_fixed(row.waiting_overhead_s, 4);
}

inline std::string sweep_summary(const SweepReport& r) {
  std::string out;
  for (const auto& row : r.rows) out += sweep_summary_row(row) + "\n";
  out += "average overhead, " + fmt_fixed(r.average_overhead_s, 4) + "\n";
  return out;
}

inline json sweep_json(const SweepReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"pool_size", row.pool_size},
                    {"aux_duration_s", row.aux_duration_s},
                    {"waiting_overhead_s", row.waiting_overhead_s},
                    {"turn_wall_s", row.turn_wall_s}});
  return json{{"rows", rows}, {"average_overhead_s", r.average_overhead_s}};
}

inline std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::string out = "pool_size,single_agent_s,voxkit_s\n";
  for (const auto& r : rows)
    out += std::to_string(r.pool_size) + "," + fmt_fixed(r.single_agent_s, 6) + "," +
           fmt_fixed(r.voxkit_s, 6) + "\n";
  return out;
}

inline json scaling_json(const std::vector<ScalingRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"pool_size", r.pool_size},
                   {"single_agent_s", r.single_agent_s},
                   {"voxkit_s", r.voxkit_s}});
  return out;
}

// x/y series for external plotting.
inline json plot_data(const SweepReport& sweep, const std::vector<ScalingRow>& scaling) {
  auto series = [](std::string name) { return json{{"name", std::move(name)}, {"x", json::array()}, {"y", json::array()}}; };
  json aux = series("aux_duration_s"), wait = series("waiting_overhead_s"),
       wall = series("turn_wall_s"), single = series("single_agent_s"), vox = series("voxkit_s");
  for (const auto& r : sweep.rows) {
    for (auto* s : {&aux, &wait, &wall}) (*s)["x"].push_back(r.pool_size);
    aux["y"].push_back(r.aux_duration_s);
    wait["y"].push_back(r.waiting_overhead_s);
    wall["y"].push_back(r.turn_wall_s);
  }
  for (const auto& r : scaling) {
    single["x"].push_back(r.pool_size);
    vox["x"].push_back(r.pool_size);
    single["y"].push_back(r.single_agent_s);
    vox["y"].push_back(r.voxkit_s);
  }
  return json{{"series", json::array({aux, wait, wall, single, vox})}};
}

inline json token_json(const TokenAccount& a) {
  json j{{"think_avg", a.think_avg}, {"answer_avg", a.answer_avg}, {"ratio", nullptr}, {"turns", a.turns}};
  if (a.ratio) j["ratio"] = *a.ratio;
  return j;
}

}  // namespace voxkit
