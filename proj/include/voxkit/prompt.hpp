#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "voxkit/codec.hpp"
#include "voxkit/core.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

enum class PolicyPhase { think, act, propose };

inline std::string_view to_string(PolicyPhase p) {
  switch (p) {
    case PolicyPhase::think: return "think";
    case PolicyPhase::act: return "act";
    case PolicyPhase::propose: return "propose";
  }
  return "think";
}

inline PolicyPhase policy_phase_from(std::string_view s) {
  if (s == "think") return PolicyPhase::think;
  if (s == "act") return PolicyPhase::act;
  if (s == "propose") return PolicyPhase::propose;
  throw InvalidValue("unknown policy phase: " + std::string(s));
}

struct PromptOptions {
  std::string system_prompt =
      "You are a spoken-dialogue assistant. Reason before you answer. "
      "Answer with plain speech, or with a JSON array of tool calls "
      "[{\"name\": ..., \"arguments\": {...}}] using only the listed tools. "
      "If none of the listed tools can do the job, answer exactly searchTools().";
  std::size_t history_char_budget = 32768;
};

// One line per tool; the section grows linearly with the number of tools.
inline std::string render_tool_line(const ToolSpec& t) {
  json j = t;
  return j.dump();
}

inline std::string render_observation_line(const ObservationEvent& e) {
  if (const auto* u = std::get_if<UserInput>(&e)) return "user: " + u->text + "\n";
  return "observation: " + serialize_observation({e}) + "\n";
}

inline std::string render_turn_block(std::size_t index, const TurnRecord& r) {
  std::string out = "[turn " + std::to_string(index + 1) + "]\n";
  for (const auto& o : r.observations) out += render_observation_line(o);
  if (!r.reasoning.empty()) out += "think: " + r.reasoning.text + "\n";
  // Speech is shown verbatim even when it collides with the action grammar.
  auto action_text = [](const AgentAction& a) {
    return a.is_speak() ? a.speak().text : serialize_action(a);
  };
  out += "assistant: " + action_text(r.action) + "\n";
  if (r.followup_action) out += "assistant: " + action_text(*r.followup_action) + "\n";
  if (!r.tool_results.empty()) out += "observation: " + serialize_observation(r.tool_results) + "\n";
  return out;
}

// Deterministic prompt for one policy call. History is rendered oldest-first
// and trimmed from the oldest end to fit the character budget; the current
// observations are always kept.
inline std::string render_prompt(const SessionState& session,
                                 const std::vector<ObservationEvent>& observations,
                                 const std::vector<ToolSpec>& local_tools, PolicyPhase phase,
                                 const ReasoningTrace* reasoning = nullptr,
                                 const PromptOptions& options = {}) {
  if (phase == PolicyPhase::act && reasoning == nullptr)
    throw PreconditionViolated("act prompts require the turn's reasoning trace");

  std::string out = "### System\n" + options.system_prompt + "\n";

  const auto& attrs = session.profile().static_attrs;
  if (!attrs.empty()) {
    out += "### Profile\n";
    for (const auto& [k, v] : attrs) out += k + ": " + v + "\n";
  }

  if (!local_tools.empty()) {
    out += "### Tools\n";
    for (const auto& t : local_tools) out += render_tool_line(t) + "\n";
  }

  const auto& history = session.history();
  std::vector<std::string> blocks;
  std::size_t used = 0;
  for (std::size_t i = history.size(); i-- > 0;) {
    std::string block = render_turn_block(i, history[i]);
    if (used + block.size() > options.history_char_budget) break;
    used += block.size();
    blocks.push_back(std::move(block));
  }
  if (!blocks.empty()) {
    out += "### History\n";
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) out += *it;
  }

  out += "### Observations\n";
  for (const auto& o : observations) out += render_observation_line(o);

  if (reasoning) out += "### Reasoning\n" + reasoning->text + "\n";

  out += "### Phase\n";
  out += phase == PolicyPhase::think
             ? "think: write your reasoning only.\n"
             : "act: give the next action only.\n";
  return out;
}

}  // namespace voxkit
