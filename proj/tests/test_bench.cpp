#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace voxkit;

namespace {
const std::vector<std::size_t> kSizes = {10, 25, 50, 75, 100};
}

TEST(DelayModel, Table7PresetInterpolates) {
  const auto m = DelayModel::table7();
  EXPECT_DOUBLE_EQ(m.propose_delay(10), 1.3131);
  EXPECT_DOUBLE_EQ(m.propose_delay(100), 2.6426);
  EXPECT_NEAR(m.propose_delay(30), 1.5731 + (1.8996 - 1.5731) * 5 / 25, 1e-12);
  DelayModel lin;
  EXPECT_NEAR(lin.propose_delay(100), 1.25 + 1.35, 1e-12);
}

TEST(DelayModel, JsonPresetAndValidation) {
  const auto m = json::parse(R"({"preset":"table7","act_base":4.0})").get<DelayModel>();
  EXPECT_DOUBLE_EQ(m.act_base, 4.0);
  EXPECT_DOUBLE_EQ(m.propose_delay(50), 1.8996);
  DelayModel bad;
  bad.act_base = -1;
  EXPECT_THROW(bad.validate(), InvalidValue);
}

TEST(Sweep, FakeClockReportsConfiguredDelaysExactly) {
  FakeClock clock;
  const auto m = DelayModel::table7();
  const auto r = run_latency_sweep(kSizes, m, 1, clock);
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) {
    EXPECT_DOUBLE_EQ(row.aux_duration_s, m.propose_delay(row.pool_size));
    EXPECT_DOUBLE_EQ(row.waiting_overhead_s, 0.0);
    EXPECT_DOUBLE_EQ(row.turn_wall_s, 2 * m.act_base);
  }
  EXPECT_EQ(sweep_summary_row(r.rows[0]), "10, 1.3131, 0.0000");
}

TEST(Sweep, OverheadAppearsWhenActIsFaster) {
  FakeClock clock;
  DelayModel m = DelayModel::table7();
  m.act_base = 2.0;
  const auto r = run_latency_sweep(kSizes, m, 1, clock);
  EXPECT_NEAR(r.rows.back().waiting_overhead_s, 2.6426 - 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.rows.front().waiting_overhead_s, 0.0);
}

TEST(Sweep, ThinkTokensIndependentOfPoolSize) {
  // Every retrieval turn emits the same scripted think text.
  FakeClock clock;
  std::vector<double> avgs;
  for (auto n : kSizes) {
    const auto pool = synthetic_pool(n);
    ConstantBackend think("look up topic1 records", "searchTools()");
    ScriptedBackend act({{PolicyPhase::act, "searchTools()", 0}, {PolicyPhase::act, "done", 0}}, clock);
    LexicalProposer lex;
    ToolExecutorRegistry reg;
    SessionState s;
    Orchestrator o(pool, {think, act, &lex}, reg, clock);
    avgs.push_back(token_accounting({o.run_turn(s, {UserInput{"q", std::nullopt}})}).think_avg);
  }
  for (double a : avgs) EXPECT_DOUBLE_EQ(a, avgs.front());
}

TEST(Scaling, FlatWhenPromptCostIsZero) {
  FakeClock clock;
  const auto rows = run_scaling_compare({1, 10, 50, 100}, DelayModel::table7(), 1, clock);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.single_agent_s, rows.front().single_agent_s);
    EXPECT_DOUBLE_EQ(r.voxkit_s, rows.front().voxkit_s);
  }
}

TEST(Scaling, SingleAgentGrowsVoxkitFlat) {
  FakeClock clock;
  DelayModel m = DelayModel::table7();
  m.prompt_per_tool = 0.02;
  const auto rows = run_scaling_compare({1, 10, 25, 50, 75, 100}, m, 1, clock);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].single_agent_s, rows[i - 1].single_agent_s);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(std::fabs(rows[i].voxkit_s / rows[1].voxkit_s - 1), 0.10);
  EXPECT_GE(rows[0].voxkit_s, rows[0].single_agent_s);
}

TEST(Tokens, Table8Ratios) {
  EXPECT_NEAR(*token_ratio(84.4, 52.6).ratio * 100, 160.5, 0.1);
  EXPECT_NEAR(*token_ratio(88.0, 701.2).ratio * 100, 12.6, 0.1);
  EXPECT_DOUBLE_EQ(*token_ratio(0, 10).ratio, 0);
  EXPECT_FALSE(token_ratio(5, 0).ratio.has_value());
  EXPECT_TRUE(token_json(token_ratio(5, 0))["ratio"].is_null());
}

TEST(Tokens, HandComputedTranscripts) {
  std::vector<std::vector<TurnRecord>> ts(2);
  const std::size_t think[] = {10, 20, 30}, answer[] = {5, 5, 20};
  for (int i = 0; i < 3; ++i) {
    TurnRecord r;
    r.timing.tokens_think = think[i];
    r.timing.tokens_answer = answer[i];
    ts[i == 0 ? 0 : 1].push_back(r);
  }
  const auto a = token_accounting(ts);
  EXPECT_DOUBLE_EQ(a.think_avg, 20);
  EXPECT_DOUBLE_EQ(a.answer_avg, 10);
  EXPECT_DOUBLE_EQ(*a.ratio, 2);
  EXPECT_EQ(a.turns, 3u);
  EXPECT_THROW(token_accounting(std::vector<TurnRecord>{}), PreconditionViolated);
}

TEST(Reports, CsvSchemaAndDeterminism) {
  FakeClock c1, c2;
  const auto a = sweep_csv(run_latency_sweep(kSizes, DelayModel::table7(), 1, c1));
  const auto b = sweep_csv(run_latency_sweep(kSizes, DelayModel::table7(), 1, c2));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "pool_size,aux_duration_s,waiting_overhead_s,turn_wall_s");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 6);
}

TEST(Reports, PlotData) {
  FakeClock clock;
  const auto sweep = run_latency_sweep({10, 20}, DelayModel::table7(), 1, clock);
  const auto scaling = run_scaling_compare({1, 10}, DelayModel::table7(), 1, clock);
  const auto j = plot_data(sweep, scaling);
  ASSERT_TRUE(j.contains("series"));
  for (const auto& s : j["series"]) EXPECT_EQ(s["x"].size(), s["y"].size());
}

TEST(SyntheticPool, Shape) {
  const auto p = synthetic_pool(3);
  EXPECT_EQ(p.size(), 3u);
  EXPECT_EQ(p.specs()[2].name, "synth.tool_0003");
}
