#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace voxkit;

namespace {

std::string clean_reasoning(vt::Gen& g) {
  std::string s;
  for (std::size_t i = 0, n = g.below(8); i < n; ++i) s += g.word(6) + (g.coin(0.2) ? ".\n" : " ");
  return trim(s);
}

AgentAction random_action(vt::Gen& g) {
  switch (g.below(3)) {
    case 0: return Retrieve{};
    case 1: {
      std::vector<ToolCall> calls;
      for (std::size_t i = 0, n = 1 + g.below(3); i < n; ++i) calls.push_back(g.call());
      return InvokeTools{calls};
    }
    default: {
      std::string s;
      do s = trim(g.text() + g.word()); while (!is_representable_speech(s));
      return Speak{s};
    }
  }
}

}  // namespace

TEST(Codec, RoundTripTenThousand) {
  vt::Gen g(99);
  for (int i = 0; i < 10000; ++i) {
    const ReasoningTrace r(clean_reasoning(g));
    const AgentAction a = random_action(g);
    const std::string text = serialize_assistant_output(r, a);
    const ParsedOutput p = parse_assistant_output(text);
    ASSERT_EQ(p.reasoning, r) << text;
    ASSERT_EQ(p.action, a) << text;
    ASSERT_EQ(serialize_assistant_output(p.reasoning, p.action), text);
  }
}

TEST(Codec, Sentinel) {
  EXPECT_TRUE(parse_assistant_output("<think>x</think>searchTools()").action.is_retrieve());
  EXPECT_TRUE(parse_assistant_output("  searchTools()  ").action.is_retrieve());
  EXPECT_EQ(serialize_action(Retrieve{}), "searchTools()");
}

TEST(Codec, MarkedToolCalls) {
  const auto p = parse_assistant_output(
      "<think>plan</think><tool_call>[{\"name\":\"f\",\"arguments\":{\"a\":1}}]</tool_call>");
  ASSERT_TRUE(p.action.is_invoke());
  EXPECT_EQ(p.action.invoke().calls[0].name, "f");
  EXPECT_EQ(p.reasoning.text, "plan");
}

TEST(Codec, MalformedCallReportsOffset) {
  const std::string text = "<tool_call>[{\"name\":\"f\",\"arguments\":{\"a\":}}]</tool_call>";
  try {
    parse_assistant_output(text);
    FAIL();
  } catch (const MalformedToolCall& e) {
    EXPECT_GE(e.offset(), std::string("<tool_call>").size());
    EXPECT_LT(e.offset(), text.size());
  }
  EXPECT_THROW(parse_assistant_output("<tool_call>[{\"arguments\":{}}]</tool_call>"), MalformedToolCall);
  EXPECT_THROW(parse_assistant_output("<tool_call>[]</tool_call>"), MalformedToolCall);
}

TEST(Codec, UnmarkedBracketSpeechStaysSpeech) {
  const auto p = parse_assistant_output("[1, 2, 3] are the numbers");
  ASSERT_TRUE(p.action.is_speak());
  EXPECT_EQ(p.action.speak().text, "[1, 2, 3] are the numbers");
}

TEST(Codec, TruncatedThink) {
  const auto p = parse_assistant_output("<think>half a thought");
  EXPECT_EQ(p.reasoning.text, "half a thought");
  EXPECT_TRUE(p.action.is_speak());
  EXPECT_TRUE(p.action.speak().text.empty());
}

TEST(Codec, LoneCloseMarker) {
  const auto p = parse_assistant_output("reasoning here</think>Hello");
  EXPECT_EQ(p.reasoning.text, "reasoning here");
  EXPECT_EQ(p.action.speak().text, "Hello");
}

TEST(Codec, UnrepresentableSpeechRejected) {
  EXPECT_THROW(serialize_action(Speak{"searchTools()"}), InvalidValue);
  EXPECT_THROW(serialize_action(Speak{" padded"}), InvalidValue);
  EXPECT_THROW(serialize_action(Speak{"[{\"name\":\"f\",\"arguments\":{}}]"}), InvalidValue);
}

TEST(Codec, CustomMarkers) {
  CodecMarkers m{"[[T]]", "[[/T]]", "<<", ">>"};
  const ReasoningTrace r("x y");
  const AgentAction a = InvokeTools{{ToolCall{"g", {}}}};
  const auto text = serialize_assistant_output(r, a, m);
  EXPECT_EQ(parse_assistant_output(text, m), (ParsedOutput{r, a}));
}

TEST(Observation, RoundTrip) {
  vt::Gen g(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<ObservationEvent> ev;
    for (std::size_t j = 0, n = 1 + g.below(3); j < n; ++j) ev.push_back(EnvFeedback{g.word(), g.value(2)});
    const auto text = serialize_observation(ev);
    EXPECT_EQ(parse_observation(text), ev);
  }
  EXPECT_THROW(serialize_observation({UserInput{"x", std::nullopt}}), TypeMismatch);
  EXPECT_THROW(parse_observation("{}"), InvalidValue);
}
