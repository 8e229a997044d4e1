#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "voxkit/core.hpp"
#include "voxkit/json_io.hpp"

// Wire format shared by scripted backends, transcripts and judge corpora.
//
//   output  := ws* [think_open trace think_close] body
//   body    := "searchTools()"                  -> Retrieve
//            | call_open array call_close ...   -> InvokeTools (strict)
//            | array                            -> InvokeTools (when well formed)
//            | anything else                    -> Speak(body)
//   array   := JSON array of {"name": string, "arguments": object}, non-empty
//
// Precedence is fixed: think extraction, then the retrieval sentinel, then
// tool-call arrays, then speech.

namespace voxkit {

inline constexpr std::string_view kRetrieveSentinel = "searchTools()";

struct CodecMarkers {
  std::string think_open = "<think>";
  std::string think_close = "</think>";
  std::string call_open = "<tool_call>";
  std::string call_close = "</tool_call>";
};

struct ParsedOutput {
  ReasoningTrace reasoning;
  AgentAction action;
  friend bool operator==(const ParsedOutput&, const ParsedOutput&) = default;
};

namespace detail {

inline bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix) {
  return !prefix.empty() && s.size() >= pos + prefix.size() && s.substr(pos, prefix.size()) == prefix;
}

// Byte offsets of the top-level elements of a syntactically valid JSON array.
inline std::vector<std::size_t> array_element_offsets(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
  };
  skip_ws();
  if (i >= text.size() || text[i] != '[') return out;
  ++i;
  int depth = 0;
  bool in_string = false;
  bool expect_element = true;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    if (depth == 0 && expect_element && c != ']') {
      out.push_back(i);
      expect_element = false;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      if (depth == 0) break;
      --depth;
    } else if (c == ',' && depth == 0) {
      expect_element = true;
    }
  }
  return out;
}

// Converts an array of {name, arguments} objects. Returns the index of the
// first offending element (or -1 when the array itself is wrong) in `bad`.
inline bool calls_from_array(const ArgValue& v, std::vector<ToolCall>& calls, long& bad,
                             std::string& why) {
  bad = -1;
  if (!v.is_list()) {
    why = "payload is not a JSON array";
    return false;
  }
  if (v.as_list().empty()) {
    why = "tool-call array is empty";
    return false;
  }
  for (std::size_t i = 0; i < v.as_list().size(); ++i) {
    const auto& e = v.as_list()[i];
    bad = static_cast<long>(i);
    if (!e.is_map()) {
      why = "element is not an object";
      return false;
    }
    const ArgValue* name = e.find("name");
    const ArgValue* args = e.find("arguments");
    if (!name || !name->is_text() || name->as_text().empty()) {
      why = "element lacks a non-empty string \"name\"";
      return false;
    }
    if (!args || !args->is_map()) {
      why = "element lacks an object \"arguments\"";
      return false;
    }
    if (e.as_map().size() != 2) {
      why = "element carries keys other than name and arguments";
      return false;
    }
    calls.push_back(ToolCall{name->as_text(), args->as_map()});
  }
  bad = -1;
  return true;
}

}  // namespace detail

// Total over text: the only failure is MalformedToolCall, raised when
// tool-call markers promise a call and the payload does not deliver one.
inline ParsedOutput parse_assistant_output(std::string_view text, const CodecMarkers& m = {}) {
  ParsedOutput out;
  std::size_t pos = 0;
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;

  std::size_t body_start = 0;
  if (detail::starts_with_at(text, pos, m.think_open)) {
    const std::size_t inner = pos + m.think_open.size();
    const std::size_t close = text.find(m.think_close, inner);
    if (close == std::string_view::npos) {
      // Truncated think segment: everything is reasoning, nothing is said.
      out.reasoning = ReasoningTrace(trim(text.substr(inner)));
      out.action = Speak{};
      return out;
    }
    out.reasoning = ReasoningTrace(trim(text.substr(inner, close - inner)));
    body_start = close + m.think_close.size();
  } else if (!m.think_close.empty()) {
    // Some chat templates open the think segment in the prompt; accept a
    // lone closing marker as the end of the trace.
    const std::size_t close = text.find(m.think_close);
    if (close != std::string_view::npos) {
      out.reasoning = ReasoningTrace(trim(text.substr(0, close)));
      body_start = close + m.think_close.size();
    }
  }

  const std::string_view rest = text.substr(body_start);
  const std::string body = trim(rest);
  if (body == kRetrieveSentinel) {
    out.action = Retrieve{};
    return out;
  }

  if (!m.call_open.empty() && rest.find(m.call_open) != std::string_view::npos) {
    std::vector<ToolCall> calls;
    std::size_t search = body_start;
    while (true) {
      const std::size_t open = text.find(m.call_open, search);
      if (open == std::string_view::npos) break;
      const std::size_t payload_start = open + m.call_open.size();
      std::size_t close = m.call_close.empty() ? std::string_view::npos
                                               : text.find(m.call_close, payload_start);
      const std::size_t payload_end = close == std::string_view::npos ? text.size() : close;
      const std::string_view payload = text.substr(payload_start, payload_end - payload_start);

      ArgParseError err;
      auto value = try_parse_arg_value(payload, &err);
      if (!value) throw MalformedToolCall(payload_start + err.offset, err.message);
      long bad = -1;
      std::string why;
      if (!detail::calls_from_array(*value, calls, bad, why)) {
        std::size_t at = payload_start;
        if (bad >= 0) {
          const auto offsets = detail::array_element_offsets(payload);
          if (static_cast<std::size_t>(bad) < offsets.size()) at += offsets[bad];
        } else {
          while (at < payload_end && std::isspace(static_cast<unsigned char>(text[at]))) ++at;
        }
        throw MalformedToolCall(at, why);
      }
      if (close == std::string_view::npos) break;
      search = close + m.call_close.size();
    }
    out.action = InvokeTools{std::move(calls)};
    return out;
  }

  if (!body.empty() && body.front() == '[') {
    if (auto value = try_parse_arg_value(body)) {
      std::vector<ToolCall> calls;
      long bad = -1;
      std::string why;
      if (detail::calls_from_array(*value, calls, bad, why)) {
        out.action = InvokeTools{std::move(calls)};
        return out;
      }
    }
  }

  out.action = Speak{body};
  return out;
}

// Speech that would re-parse as something other than itself cannot be
// emitted faithfully in this grammar.
inline bool is_representable_speech(std::string_view text, const CodecMarkers& m = {}) {
  if (trim(text) != text) return false;
  if (text == kRetrieveSentinel) return false;
  if (!m.call_open.empty() && text.find(m.call_open) != std::string_view::npos) return false;
  if (!m.think_close.empty() && text.find(m.think_close) != std::string_view::npos) return false;
  if (!text.empty() && text.front() == '[') {
    if (auto v = try_parse_arg_value(text)) {
      std::vector<ToolCall> calls;
      long bad = -1;
      std::string why;
      if (detail::calls_from_array(*v, calls, bad, why)) return false;
    }
  }
  return true;
}

inline void write_tool_call(std::string& out, const ToolCall& call) {
  out += "{\"name\":";
  append_json_string(out, call.name);
  out += ",\"arguments\":";
  write_arg_value(out, ArgValue(call.arguments));
  out.push_back('}');
}

inline std::string serialize_calls(const std::vector<ToolCall>& calls) {
  std::string out = "[";
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (i) out.push_back(',');
    write_tool_call(out, calls[i]);
  }
  out.push_back(']');
  return out;
}

// Canonical form: compact call array (keys name, arguments), the retrieval
// sentinel, or the raw speech text.
inline std::string serialize_action(const AgentAction& action, const CodecMarkers& m = {}) {
  action.validate();
  if (action.is_retrieve()) return std::string(kRetrieveSentinel);
  if (action.is_invoke()) return serialize_calls(action.invoke().calls);
  const auto& text = action.speak().text;
  if (!is_representable_speech(text, m))
    throw InvalidValue("speech text collides with the action grammar: " + text);
  return text;
}

inline std::string serialize_assistant_output(const ReasoningTrace& reasoning,
                                              const AgentAction& action,
                                              const CodecMarkers& m = {}) {
  return m.think_open + reasoning.text + m.think_close + serialize_action(action, m);
}

// JSON array of {"name", "results"} in call order.
inline std::string serialize_observation(const std::vector<ObservationEvent>& events) {
  std::string out = "[";
  bool first = true;
  for (const auto& e : events) {
    const auto* fb = std::get_if<EnvFeedback>(&e);
    if (!fb) throw TypeMismatch("serialize_observation accepts only EnvFeedback events");
    if (!first) out.push_back(',');
    first = false;
    out += "{\"name\":";
    append_json_string(out, fb->tool_name);
    out += ",\"results\":";
    write_arg_value(out, fb->result);
    out.push_back('}');
  }
  out.push_back(']');
  return out;
}

inline std::vector<ObservationEvent> parse_observation(std::string_view text) {
  const ArgValue v = parse_arg_value(text);
  if (!v.is_list()) throw InvalidValue("observation block must be a JSON array");
  std::vector<ObservationEvent> out;
  for (const auto& e : v.as_list()) {
    const ArgValue* name = e.find("name");
    const ArgValue* results = e.find("results");
    if (!name || !name->is_text() || !results)
      throw InvalidValue("observation entry needs \"name\" and \"results\"");
    out.push_back(EnvFeedback{name->as_text(), *results});
  }
  return out;
}

}  // namespace voxkit
