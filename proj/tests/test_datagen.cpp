#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace voxkit;

// ---------------------------------------------------------------------------
// Filter loop

TEST(FilterLoop, ExhaustiveOverShortScoreSequences) {
  const std::vector<double> alphabet = {0, 6, 7, 10};
  std::size_t checked = 0;
  for (std::size_t len = 0; len <= 3; ++len) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= alphabet.size();
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> seq;
      for (std::size_t i = 0, c = code; i < len; ++i, c /= alphabet.size()) seq.push_back(alphabet[c % alphabet.size()]);
      // Positions past the sequence score 0.
      std::size_t first_pass = 0;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] >= 7) {
          first_pass = i + 1;
          break;
        }
      }
      vt::CountingGenerator gen;
      vt::SeqScorer scorer;
      scorer.scores = seq;
      const auto out = filter_loop("What is the capital of France?", "Paris.", gen, scorer);
      const std::size_t expected_calls = first_pass ? std::min<std::size_t>(first_pass, 3) : 3;
      ASSERT_EQ(gen.calls, expected_calls);
      ASSERT_EQ(out.attempts(), expected_calls);
      ASSERT_EQ(out.retained, first_pass != 0);
      if (out.retained) {
        EXPECT_DOUBLE_EQ(*out.score, seq[first_pass - 1]);
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1u + 4 + 16 + 64);
}

TEST(FilterLoop, BoundaryScoreSevenRetained) {
  vt::CountingGenerator gen;
  vt::SeqScorer scorer;
  scorer.scores = {7};
  EXPECT_TRUE(filter_loop("q", "a", gen, scorer).retained);
  vt::CountingGenerator gen2;
  vt::SeqScorer below;
  below.scores = {6.999, 6.999, 6.999};
  EXPECT_FALSE(filter_loop("q", "a", gen2, below).retained);
}

TEST(FilterLoop, RegenerationSeesPreviousTrace) {
  vt::CountingGenerator gen;
  vt::SeqScorer scorer;
  scorer.scores = {1, 2, 9};
  filter_loop("q", "a", gen, scorer);
  ASSERT_EQ(gen.seen.size(), 3u);
  EXPECT_FALSE(gen.seen[0].previous.has_value());
  ASSERT_TRUE(gen.seen[2].previous.has_value());
  EXPECT_EQ(gen.seen[2].previous->text, "attempt 2 for q");
  EXPECT_EQ(gen.seen[2].attempt, 3u);
}

TEST(FilterLoop, FormatErrorsUseAttempts) {
  int n = 0;
  StubGenerator gen([&](const GenerationRequest&) { return ++n < 3 ? std::string("not json") : think_json("ok"); });
  StubScorer scorer([](auto&, auto&, auto&) { return score_json(8); });
  const auto out = filter_loop("q", "a", gen, scorer);
  EXPECT_TRUE(out.retained);
  EXPECT_EQ(out.attempts(), 3u);
  EXPECT_FALSE(out.history[0].error.empty());
}

TEST(FilterLoop, ScorerFormatErrorPropagates) {
  vt::CountingGenerator gen;
  StubScorer scorer([](auto&, auto&, auto&) { return std::string("great job"); });
  EXPECT_THROW(filter_loop("q", "a", gen, scorer), ScorerFormatError);
}

TEST(GenerateTrace, ThinkLineContract) {
  StubGenerator multi([](const GenerationRequest&) { return std::string("{\"think\": \"a\"}\n{\"think\": \"b\"}"); });
  EXPECT_THROW(generate_trace("q", "a", multi), GeneratorFormatError);
  StubGenerator extra([](const GenerationRequest&) { return std::string("{\"think\": \"a\", \"x\": 1}"); });
  EXPECT_THROW(generate_trace("q", "a", extra), GeneratorFormatError);
  StubGenerator num([](const GenerationRequest&) { return std::string("{\"think\": 3}"); });
  EXPECT_THROW(generate_trace("q", "a", num), GeneratorFormatError);
  StubGenerator ok([](const GenerationRequest&) { return think_json("User wants \"quotes\" handled."); });
  EXPECT_EQ(generate_trace("q", "a", ok).text, "User wants \"quotes\" handled.");
  EXPECT_THROW(generate_trace("", "a", ok), PreconditionViolated);
}

TEST(QualityScore, Shapes) {
  EXPECT_DOUBLE_EQ(parse_quality_score("{\"score\": 8.5}").total, 8.5);
  const auto q = parse_quality_score(
      R"({"correctness": 4, "relevance": 2, "clarity": 1, "completeness": 1, "brevity": 0, "total_score": 8})");
  ASSERT_TRUE(q.breakdown);
  EXPECT_DOUBLE_EQ(q.breakdown->clarity, 1);
  EXPECT_THROW(parse_quality_score(R"({"correctness": 4, "total_score": 4})"), ScorerFormatError);
  EXPECT_THROW(parse_quality_score(
                   R"({"correctness": 4, "relevance": 2, "clarity": 1, "completeness": 1, "brevity": 0, "total_score": 9})"),
               ScorerFormatError);
  EXPECT_THROW(parse_quality_score(
                   R"({"correctness": 5, "relevance": 2, "clarity": 1, "completeness": 1, "brevity": 0, "total_score": 9})"),
               OutOfRange);
  EXPECT_THROW(parse_quality_score("{\"score\": 11}"), OutOfRange);
  EXPECT_THROW(parse_quality_score("{\"score\": \"9\"}"), ScorerFormatError);
  EXPECT_THROW(parse_quality_score("nine"), ScorerFormatError);
}

TEST(Refine, Contract) {
  StubRefiner r([](const ReasoningTrace& t) { return think_json(t.text + " (checked)"); });
  EXPECT_EQ(refine_trace(ReasoningTrace("x"), r).text, "x (checked)");
  StubRefiner bad([](const ReasoningTrace&) { return std::string("x"); });
  EXPECT_THROW(refine_trace(ReasoningTrace("x"), bad), RefinerFormatError);
  EXPECT_THROW(refine_trace(ReasoningTrace(""), r), PreconditionViolated);
}

TEST(Compress, NeverTruncates) {
  const ReasoningTrace long_trace("one two three four five six");
  int calls = 0;
  StubCompressor halves([&](const ReasoningTrace&, std::size_t) {
    ++calls;
    return think_json(calls < 2 ? "still far too many words here" : "short one");
  });
  const auto out = compress_trace(long_trace, 3, halves);
  EXPECT_EQ(out.text, "short one");
  EXPECT_EQ(calls, 2);

  StubCompressor stubborn([](const ReasoningTrace& t, std::size_t) { return think_json(t.text); });
  EXPECT_THROW(compress_trace(long_trace, 3, stubborn), CompressionBudgetExceeded);

  StubCompressor never([](const ReasoningTrace&, std::size_t) -> std::string { throw std::logic_error("unused"); });
  EXPECT_EQ(compress_trace(ReasoningTrace("a b"), 3, never).text, "a b");
  EXPECT_THROW(compress_trace(long_trace, 0, never), PreconditionViolated);
}

TEST(Necessity, ParseRules) {
  EXPECT_EQ(parse_tool_necessity("{\"tool_necessity\": 3}"), 3);
  EXPECT_EQ(parse_tool_necessity("{\"tool_necessity\": 3.0}"), 3);
  EXPECT_EQ(parse_tool_necessity("{\"tool_necessity\": 0}"), 0);
  EXPECT_THROW(parse_tool_necessity("{\"tool_necessity\": 2.5}"), ScorerFormatError);
  EXPECT_THROW(parse_tool_necessity("{\"tool_necessity\": \"3\"}"), ScorerFormatError);
  EXPECT_THROW(parse_tool_necessity("{\"tool_necessity\": 5}"), OutOfRange);
  EXPECT_THROW(parse_tool_necessity("{\"tool_necessity\": -1}"), OutOfRange);
  EXPECT_THROW(parse_tool_necessity("{\"tool_necessity\": 12}"), OutOfRange);
  EXPECT_THROW(parse_tool_necessity("{}"), ScorerFormatError);
}

TEST(Necessity, StageMatchesCountingOracle) {
  vt::Gen g(55);
  std::vector<CorpusRow> rows;
  std::map<std::string, int> truth;
  for (int i = 0; i < 300; ++i) {
    const int score = static_cast<int>(g.below(5));
    CorpusRow r{"r" + std::to_string(1000 + i), "query level " + std::to_string(score), "a", "tool-select", 1.0};
    if (i % 37 == 0) r.query = "broken";
    rows.push_back(r);
    truth[r.id] = r.query == "broken" ? -1 : score;
  }
  StubNecessity scorer([](const std::string& q) {
    if (q == "broken") return std::string("{\"oops\": 1}");
    return "{\"tool_necessity\": " + q.substr(q.size() - 1) + "}";
  });
  const auto out = run_necessity_stage(rows, scorer, PipelineConfig{});
  std::set<std::string> expected_kept, got_kept;
  std::size_t expected_skipped = 0;
  for (const auto& [id, s] : truth) {
    if (s < 0) ++expected_skipped;
    else if (s >= 3) expected_kept.insert(id);
  }
  for (const auto& r : out.kept) got_kept.insert(r.id);
  EXPECT_EQ(got_kept, expected_kept);
  EXPECT_EQ(out.skipped.size(), expected_skipped);
}

TEST(CotStage, ConstantScorerRetainsAll) {
  std::vector<CorpusRow> rows;
  for (int i = 0; i < 25; ++i) rows.push_back({"id" + std::to_string(i), "question " + std::to_string(i), "answer", "c", 1});
  vt::CountingGenerator gen;
  StubScorer ten([](auto&, auto&, auto&) { return score_json(10); });
  const auto out = run_cot_stage(rows, gen, ten, PipelineConfig{});
  EXPECT_EQ(out.retained.size(), rows.size());
  for (const auto& r : out.retained) EXPECT_EQ(r.attempts, 1u);
  EXPECT_TRUE(std::is_sorted(out.retained.begin(), out.retained.end(),
                             [](const RetainedRow& a, const RetainedRow& b) { return a.id < b.id; }));
}

TEST(CotStage, SkipsFailuresAndCompresses) {
  std::vector<CorpusRow> rows{{"a", "q", "ans", "c", 1}, {"b", "", "ans", "c", 1}, {"c", "q2", "ans", "c", 1}};
  StubGenerator gen([](const GenerationRequest& r) { return think_json(std::string(200, 'x') + " " + r.query + " w w w"); });
  StubScorer scorer([](auto&, auto&, auto&) { return score_json(9); });
  StubCompressor comp([](const ReasoningTrace&, std::size_t) { return think_json("brief"); });
  PipelineConfig cfg;
  cfg.think_max_words = 2;
  const auto out = run_cot_stage(rows, gen, scorer, cfg, nullptr, &comp);
  EXPECT_EQ(out.retained.size(), 2u);
  EXPECT_EQ(out.skipped.size(), 1u);
  EXPECT_EQ(out.retained[0].think, "brief");
}

TEST(PipelineConfig, Validation) {
  EXPECT_THROW(pipeline_config_from(json{{"tau", 11}}), InvalidValue);
  EXPECT_THROW(pipeline_config_from(json{{"max_attempts", 0}}), InvalidValue);
  EXPECT_EQ(pipeline_config_from(json::object()).max_attempts, 3u);
  EXPECT_DOUBLE_EQ(pipeline_config_from(json::object()).tau, 7);
}

// ---------------------------------------------------------------------------
// Manifest

TEST(Ratio, Parse) {
  EXPECT_DOUBLE_EQ(parse_ratio("1:0.5").factor(), 0.5);
  EXPECT_DOUBLE_EQ(parse_ratio(" 2 : 1 ").factor(), 0.5);
  EXPECT_THROW(parse_ratio("1-1"), InvalidValue);
  EXPECT_THROW(parse_ratio("1:0"), InvalidValue);
  EXPECT_THROW(parse_ratio("a:b"), InvalidValue);
}

TEST(Manifest, ClosestPrefixAndProportionalSplit) {
  std::vector<SourceSample> s;
  for (int i = 0; i < 10; ++i) s.push_back({"t" + std::to_string(i), "tool-select", 360});  // 1 h tool
  for (int i = 0; i < 10; ++i) s.push_back({"g" + std::to_string(i), "chat", 720});          // 2 h general
  for (int i = 0; i < 10; ++i) s.push_back({"h" + std::to_string(i), "math", 360});          // 1 h general
  const auto m = compose_manifest(s, parse_ratio("1:0.5"));
  // Budget 0.5 h split 2:1 between chat and math.
  EXPECT_EQ(m.find("tool-select")->sample_count, 10u);
  EXPECT_NEAR(m.find("chat")->duration_hours, 0.5 * 2 / 3, 0.1);
  EXPECT_EQ(m.find("chat")->sample_count, 2u);   // 0.4 h closest to 0.333
  EXPECT_EQ(m.find("math")->sample_count, 2u);   // 0.2 h closest to 0.1667
  EXPECT_EQ(m.find("chat")->selected_ids.front(), "g0");
}

TEST(Manifest, InsufficientData) {
  std::vector<SourceSample> s{{"t", "tool-select", 3600}, {"g", "chat", 600}};
  EXPECT_THROW(compose_manifest(s, parse_ratio("1:1")), InsufficientData);
}

TEST(Manifest, Deterministic) {
  const auto samples = expand_stats(vt::table5_stats());
  const auto a = manifest_json(compose_manifest(samples, parse_ratio("1:1")), true);
  auto shuffled = samples;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(1));
  EXPECT_EQ(manifest_json(compose_manifest(shuffled, parse_ratio("1:1")), true), a);
}

namespace {

void check_table5(const std::string& label) {
  const auto stats = vt::table5_stats();
  const auto m = compose_manifest(expand_stats(stats), parse_ratio(label), tool_categories_of(stats));
  const auto expected = vt::table5_expected()[label];
  for (const auto& row : expected["categories"]) {
    const auto* e = m.find(row["category"].get<std::string>());
    ASSERT_NE(e, nullptr) << row["category"];
    const double want_h = row["duration_hours"].get<double>();
    const auto want_n = row["samples"].get<long>();
    EXPECT_LE(std::labs(static_cast<long>(e->sample_count) - want_n), 1) << e->category;
    EXPECT_LE(std::fabs(e->duration_hours - want_h), 0.005 * want_h + 0.005) << e->category;
  }
  EXPECT_LE(std::labs(static_cast<long>(m.total_samples()) - expected["total_samples"].get<long>()),
            static_cast<long>(expected["categories"].size()));
  EXPECT_NEAR(m.total_hours(), expected["total_hours"].get<double>(), 0.005 * expected["total_hours"].get<double>());
}

}  // namespace

TEST(Manifest, Table5OneToOne) { check_table5("1:1"); }
TEST(Manifest, Table5OneToHalf) { check_table5("1:0.5"); }

TEST(CategoryStats, Parse) {
  const auto s = parse_category_stats(json::parse(R"([{"category":"x","samples":2,"duration_hours":1,"kind":"tool"}])"));
  EXPECT_EQ(tool_categories_of(s), (std::set<std::string>{"x"}));
  EXPECT_EQ(expand_stats(s)[1].id, "x/000002");
  EXPECT_DOUBLE_EQ(expand_stats(s)[0].duration_seconds, 1800);
  EXPECT_THROW(parse_category_stats(json::parse(R"([{"category":"x","samples":2,"duration_hours":1,"kind":"odd"}])")),
               InvalidValue);
}
