#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace voxkit;

namespace {

GlobalToolPool weather_pool() {
  GlobalToolPool pool;
  pool.register_tool({"weather.forecast", "Weather forecast for a city", {{"city", ParamKind::string, true, std::nullopt}}});
  pool.register_tool({"music.play", "Play a song", {}});
  pool.register_tool({"calendar.add", "Add a calendar event", {}});
  return pool;
}

UserInput say(std::string s) { return UserInput{std::move(s), std::nullopt}; }

}  // namespace

TEST(Orchestrator, ThinkStrictlyBeforeAct) {
  FakeClock clock;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "user wants a greeting", 1.0}, {PolicyPhase::act, "Hi!", 0.5}}, clock);
  RecordingBackend rec(script, clock);
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {rec, rec, nullptr}, reg, clock);
  const auto r = o.run_turn(s, {say("hello")});
  const auto calls = rec.calls();
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_EQ(calls[0].phase, PolicyPhase::think);
  EXPECT_EQ(calls[1].phase, PolicyPhase::act);
  EXPECT_LE(calls[0].finish, calls[1].start);
  EXPECT_NE(calls[1].context.find("user wants a greeting"), std::string::npos);
  EXPECT_EQ(calls[0].context.find("### Reasoning"), std::string::npos);
  EXPECT_EQ(r.action.speak().text, "Hi!");
  EXPECT_DOUBLE_EQ(r.timing.turn_wall(), 1.5);
  EXPECT_EQ(s.history().size(), 1u);
}

TEST(Orchestrator, RetrieveUnionsAndFollowsUp) {
  FakeClock clock;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "need weather forecast for Paris", 0},
                          {PolicyPhase::act, "searchTools()", 3.0},
                          {PolicyPhase::think, "call the weather forecast tool", 0},
                          {PolicyPhase::act, "[{\"name\":\"weather.forecast\",\"arguments\":{\"city\":\"Paris\"}}]", 3.0}},
                         clock);
  LexicalProposer lex;
  DelayedProposer prop(lex, clock, 1.0, 0.0);
  ToolExecutorRegistry reg;
  reg.add("weather.forecast", [](const ToolCall& c) { return ArgValue(c.arguments[0].value.as_text() + ": sunny"); });
  SessionState s;
  s.local_tool_ids() = {pool.id_of("music.play")};
  TurnConfig cfg;
  cfg.k = 1;
  Orchestrator o(pool, {script, script, &prop}, reg, clock, cfg);
  const auto r = o.run_turn(s, {say("weather in Paris?")});
  EXPECT_TRUE(r.action.is_retrieve());
  ASSERT_TRUE(r.followup_action && r.followup_action->is_invoke());
  ASSERT_TRUE(r.followup_reasoning);
  EXPECT_EQ(r.candidates_added, (std::set<ToolId>{pool.id_of("weather.forecast")}));
  EXPECT_TRUE(s.local_tool_ids().count(pool.id_of("weather.forecast")));
  EXPECT_EQ(s.local_generation(), 1u);
  EXPECT_DOUBLE_EQ(r.timing.waiting_overhead, 0.0);
  EXPECT_DOUBLE_EQ(r.timing.propose_duration, 1.0);
  ASSERT_EQ(r.tool_results.size(), 1u);
  EXPECT_EQ(std::get<EnvFeedback>(r.tool_results[0]).result.as_text(), "Paris: sunny");
}

TEST(Orchestrator, WaitingOverheadWhenProposerSlow) {
  FakeClock clock;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "weather", 0}, {PolicyPhase::act, "searchTools()", 1.0},
                          {PolicyPhase::think, "weather", 0}, {PolicyPhase::act, "ok", 1.0}},
                         clock);
  LexicalProposer lex;
  DelayedProposer prop(lex, clock, 2.5, 0.0);
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {script, script, &prop}, reg, clock);
  const auto r = o.run_turn(s, {say("x")});
  EXPECT_DOUBLE_EQ(r.timing.waiting_overhead, 1.5);
  EXPECT_DOUBLE_EQ(r.timing.turn_wall(), 2.5 + 1.0);
}

TEST(Orchestrator, RetrieveLoopBounded) {
  FakeClock clock;
  const auto pool = weather_pool();
  std::vector<ScriptStep> steps;
  for (int i = 0; i < 4; ++i) {
    steps.push_back({PolicyPhase::think, "weather", 0});
    steps.push_back({PolicyPhase::act, "searchTools()", 0});
  }
  ScriptedBackend script(steps, clock);
  LexicalProposer lex;
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {script, script, &lex}, reg, clock);
  EXPECT_THROW(o.run_turn(s, {say("x")}), RetrieveLoopExceeded);
  EXPECT_TRUE(s.history().empty());
}

TEST(Orchestrator, SecondRetrieveWithinBound) {
  FakeClock clock;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "weather", 0}, {PolicyPhase::act, "searchTools()", 0},
                          {PolicyPhase::think, "calendar", 0}, {PolicyPhase::act, "searchTools()", 0},
                          {PolicyPhase::think, "done", 0}, {PolicyPhase::act, "Done.", 0}},
                         clock);
  LexicalProposer lex;
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {script, script, &lex}, reg, clock);
  const auto r = o.run_turn(s, {say("x")});
  EXPECT_EQ(r.final_action().speak().text, "Done.");
  EXPECT_EQ(r.candidates_added.size(), 2u);
  EXPECT_EQ(s.local_generation(), 2u);
}

TEST(Orchestrator, MalformedActOutputPropagates) {
  FakeClock clock;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "t", 0}, {PolicyPhase::act, "<tool_call>[{]</tool_call>", 0}}, clock);
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {script, script, nullptr}, reg, clock);
  EXPECT_THROW(o.run_turn(s, {say("x")}), MalformedToolCall);
}

TEST(Orchestrator, Preconditions) {
  FakeClock clock;
  const auto pool = weather_pool();
  ConstantBackend b;
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {b, b, nullptr}, reg, clock);
  EXPECT_THROW(o.run_turn(s, {}), PreconditionViolated);
  s.local_tool_ids() = {ToolId{42}};
  EXPECT_THROW(o.run_turn(s, {say("x")}), UnknownTool);
}

TEST(Orchestrator, ThinkMarkersStripped) {
  FakeClock clock;
  const auto pool = weather_pool();
  ConstantBackend b("<think> inner plan </think>", "fine");
  ToolExecutorRegistry reg;
  SessionState s;
  const auto r = run_turn(s, {say("x")}, pool, {b, b, nullptr}, reg, clock);
  EXPECT_EQ(r.reasoning.text, "inner plan");
}

// Act and propose overlap in real time: with both taking d, the turn takes
// well under 2d.
TEST(Orchestrator, ActAndProposeOverlapOnRealClock) {
  SteadyClock clock;
  const double d = 0.1;
  const auto pool = weather_pool();
  ScriptedBackend script({{PolicyPhase::think, "weather", 0}, {PolicyPhase::act, "searchTools()", d},
                          {PolicyPhase::think, "weather", 0}, {PolicyPhase::act, "ok", 0}},
                         clock);
  LexicalProposer lex;
  DelayedProposer prop(lex, clock, d, 0.0);
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {script, script, &prop}, reg, clock);
  const double t0 = clock.now();
  const auto r = o.run_turn(s, {say("x")});
  const double elapsed = clock.now() - t0;
  EXPECT_LT(elapsed, 2 * d);
  EXPECT_GE(elapsed, d);
  EXPECT_LT(r.timing.waiting_overhead, d);
}

TEST(Orchestrator, ProposerCancelledOnSpeak) {
  SteadyClock clock;
  const auto pool = weather_pool();
  ConstantBackend b("weather", "answer");
  LexicalProposer lex;
  DelayedProposer prop(lex, clock, 5.0, 0.0);
  ToolExecutorRegistry reg;
  SessionState s;
  Orchestrator o(pool, {b, b, &prop}, reg, clock);
  const double t0 = clock.now();
  o.run_turn(s, {say("x")});
  EXPECT_LT(clock.now() - t0, 1.0);
}

TEST(Orchestrator, SessionChainsToolRounds) {
  auto f = vt::load_fig9();
  FakeClock clock;
  ScriptedBackend script(f.script, clock);
  ToolExecutorRegistry reg;
  f.executors.install(reg);
  SessionState s;
  for (auto id : f.pool.ids()) s.local_tool_ids().insert(id);
  Orchestrator o(f.pool, {script, script, nullptr}, reg, clock);
  const auto records = o.run_session(s, {say(f.input)});
  ASSERT_EQ(records.size(), 3u);
  EXPECT_TRUE(records[0].action.is_invoke());
  EXPECT_TRUE(records[1].action.is_invoke());
  EXPECT_TRUE(records[2].action.is_speak());
  EXPECT_TRUE(is_feedback(records[1].observations[0]));
  EXPECT_EQ(script.remaining(), 0u);
}

TEST(Orchestrator, MaxTurnsStopsSession) {
  FakeClock clock;
  const auto pool = weather_pool();
  ConstantBackend b("t", "[{\"name\":\"music.play\",\"arguments\":{}}]");
  ToolExecutorRegistry reg;
  SessionState s;
  TurnConfig c;
  c.max_turns = 2;
  Orchestrator o(pool, {b, b, nullptr}, reg, clock, c);
  EXPECT_EQ(o.run_session(s, {say("a")}).size(), 2u);
  c.max_turns = 0;
  c.max_tool_rounds = 3;
  Orchestrator o2(pool, {b, b, nullptr}, reg, clock, c);
  SessionState s2;
  EXPECT_EQ(o2.run_session(s2, {say("a")}).size(), 4u);
}

TEST(Transcript, RoundTrip) {
  auto f = vt::load_fig9();
  FakeClock clock;
  ScriptedBackend script(f.script, clock);
  ToolExecutorRegistry reg;
  f.executors.install(reg);
  SessionState s;
  for (auto id : f.pool.ids()) s.local_tool_ids().insert(id);
  Orchestrator o(f.pool, {script, script, nullptr}, reg, clock);
  const auto records = o.run_session(s, {say(f.input)});
  const auto path = (vt::temp_dir("transcript") / "t.jsonl").string();
  write_transcript(path, records);
  EXPECT_EQ(read_transcript(path), records);
  EXPECT_THROW(parse_transcript("{\"x\":1}\n", "t"), InvalidValue);
}

// Prompt length grows linearly with the number of tools rendered.
TEST(Prompt, LinearInToolCount) {
  SessionState s;
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n <= 200; n += 10) {
    const auto pool = synthetic_pool(std::max<std::size_t>(n, 1));
    std::set<ToolId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.insert(ToolId{std::uint32_t(i)});
    const auto text = render_prompt(s, {say("q")}, pool.specs_of(ids), PolicyPhase::think);
    xs.push_back(double(n));
    ys.push_back(double(text.size()));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  EXPECT_GT(r2, 0.99);
}

TEST(Prompt, ActNeedsReasoning) {
  SessionState s;
  EXPECT_THROW(render_prompt(s, {say("q")}, {}, PolicyPhase::act), PreconditionViolated);
  const ReasoningTrace r("plan");
  EXPECT_NE(render_prompt(s, {say("q")}, {}, PolicyPhase::act, &r).find("plan"), std::string::npos);
}

TEST(Prompt, HistoryBudgetKeepsNewest) {
  SessionState s;
  for (int i = 0; i < 50; ++i) {
    TurnRecord r;
    r.observations = {say("message number " + std::to_string(i))};
    r.action = Speak{"reply"};
    s.append(r);
  }
  PromptOptions opt;
  opt.history_char_budget = 300;
  const auto text = render_prompt(s, {say("now")}, {}, PolicyPhase::think, nullptr, opt);
  EXPECT_NE(text.find("message number 49"), std::string::npos);
  EXPECT_EQ(text.find("message number 0\n"), std::string::npos);
  EXPECT_NE(text.find("user: now"), std::string::npos);
}
