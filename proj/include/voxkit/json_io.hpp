#pragma once

#include <charconv>
#include <cstdlib>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "voxkit/core.hpp"

namespace voxkit {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Exact ArgValue <-> JSON text. Numbers keep their lexeme; object key order
// is preserved; duplicate keys are rejected.

namespace detail {

class ArgValueSax {
 public:
  using number_integer_t = json::number_integer_t;
  using number_unsigned_t = json::number_unsigned_t;
  using number_float_t = json::number_float_t;
  using string_t = json::string_t;
  using binary_t = json::binary_t;

  bool null() { return fail("null is not a valid argument value"); }
  bool boolean(bool v) { return put(ArgValue(v)); }
  bool number_integer(number_integer_t v) { return put(ArgValue::number(std::to_string(v))); }
  bool number_unsigned(number_unsigned_t v) { return put(ArgValue::number(std::to_string(v))); }
  bool number_float(number_float_t, const string_t& s) { return put(ArgValue::number(s)); }
  bool string(string_t& s) { return put(ArgValue(std::move(s))); }
  bool binary(binary_t&) { return fail("binary values unsupported"); }

  bool start_object(std::size_t) {
    stack_.push_back(Frame{ArgValue(ArgMap{}), {}});
    return true;
  }
  bool key(string_t& k) {
    auto& m = std::get<ArgMap>(stack_.back().value.value);
    for (const auto& f : m)
      if (f.key == k) return fail("duplicate key '" + k + "'");
    stack_.back().pending_key = std::move(k);
    return true;
  }
  bool end_object() { return pop(); }
  bool start_array(std::size_t) {
    stack_.push_back(Frame{ArgValue(ArgList{}), {}});
    return true;
  }
  bool end_array() { return pop(); }

  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) {
    error_offset_ = position == 0 ? 0 : position - 1;
    error_ = ex.what();
    return false;
  }

  std::optional<ArgValue> result;
  std::size_t error_offset_ = 0;
  std::string error_;

 private:
  struct Frame {
    ArgValue value;
    std::string pending_key;
  };

  bool fail(std::string why) {
    error_ = std::move(why);
    failed_semantic_ = true;
    return false;
  }
  bool put(ArgValue v) {
    if (stack_.empty()) {
      result = std::move(v);
      return true;
    }
    auto& top = stack_.back();
    if (top.value.is_list()) {
      std::get<ArgList>(top.value.value).push_back(std::move(v));
    } else {
      std::get<ArgMap>(top.value.value).push_back(ArgField{std::move(top.pending_key), std::move(v)});
    }
    return true;
  }
  bool pop() {
    ArgValue v = std::move(stack_.back().value);
    stack_.pop_back();
    return put(std::move(v));
  }

  std::vector<Frame> stack_;

 public:
  bool failed_semantic_ = false;
};

}  // namespace detail

struct ArgParseError {
  std::size_t offset = 0;  // byte offset into the parsed text
  std::string message;
};

// Parses a complete JSON document into an ArgValue. On failure returns
// nullopt and fills `err` (when given).
inline std::optional<ArgValue> try_parse_arg_value(std::string_view text,
                                                   ArgParseError* err = nullptr) {
  detail::ArgValueSax sax;
  bool ok = false;
  try {
    ok = json::sax_parse(text.begin(), text.end(), &sax);
  } catch (const std::exception& e) {
    if (err) *err = {0, e.what()};
    return std::nullopt;
  }
  if (!ok || !sax.result) {
    if (err) *err = {sax.error_offset_, sax.error_.empty() ? "invalid JSON" : sax.error_};
    return std::nullopt;
  }
  return std::move(sax.result);
}

inline ArgValue parse_arg_value(std::string_view text) {
  ArgParseError err;
  auto v = try_parse_arg_value(text, &err);
  if (!v) throw InvalidValue("invalid JSON at byte " + std::to_string(err.offset) + ": " + err.message);
  return std::move(*v);
}

inline void append_json_string(std::string& out, std::string_view s) {
  out += nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Compact emission; byte-stable for a given value.
inline void write_arg_value(std::string& out, const ArgValue& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          append_json_string(out, x);
        } else if constexpr (std::is_same_v<T, Number>) {
          out += x.lexeme;
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, ArgList>) {
          out.push_back('[');
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out.push_back(',');
            write_arg_value(out, x[i]);
          }
          out.push_back(']');
        } else {
          out.push_back('{');
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out.push_back(',');
            append_json_string(out, x[i].key);
            out.push_back(':');
            write_arg_value(out, x[i].value);
          }
          out.push_back('}');
        }
      },
      v.value);
}

inline std::string to_json_text(const ArgValue& v) {
  std::string out;
  write_arg_value(out, v);
  return out;
}

// ---------------------------------------------------------------------------
// nlohmann adapters. Used for transcripts, sessions, corpora and reports.

inline void to_json(json& j, const ArgValue& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, bool>) {
          j = x;
        } else if constexpr (std::is_same_v<T, Number>) {
          std::int64_t i = 0;
          const auto* b = x.lexeme.data();
          const auto* e = b + x.lexeme.size();
          auto [p, ec] = std::from_chars(b, e, i);
          if (ec == std::errc() && p == e) {
            j = i;
          } else {
            j = std::strtod(x.lexeme.c_str(), nullptr);
          }
        } else if constexpr (std::is_same_v<T, ArgList>) {
          j = json::array();
          for (const auto& e : x) j.push_back(e);
        } else {
          j = json::object();
          for (const auto& f : x) j[f.key] = f.value;
        }
      },
      v.value);
}

inline void from_json(const json& j, ArgValue& v) {
  switch (j.type()) {
    case json::value_t::string: v = ArgValue(j.get<std::string>()); break;
    case json::value_t::boolean: v = ArgValue(j.get<bool>()); break;
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: v = ArgValue::number(j.dump()); break;
    case json::value_t::array: {
      ArgList l;
      for (const auto& e : j) l.push_back(e.get<ArgValue>());
      v = ArgValue(std::move(l));
      break;
    }
    case json::value_t::object: {
      ArgMap m;
      for (auto it = j.begin(); it != j.end(); ++it)
        m.push_back(ArgField{it.key(), it.value().get<ArgValue>()});
      v = ArgValue(std::move(m));
      break;
    }
    default: throw InvalidValue("unsupported JSON value for an argument: " + j.dump());
  }
}

inline void to_json(json& j, const ToolId& id) { j = id.value; }
inline void from_json(const json& j, ToolId& id) { id.value = j.get<std::uint32_t>(); }

inline void to_json(json& j, const ParamSpec& p) {
  j = json{{"name", p.name}, {"kind", std::string(to_string(p.kind))}, {"required", p.required}};
  if (p.enum_values) j["enum_values"] = *p.enum_values;
}
inline void from_json(const json& j, ParamSpec& p) {
  p.name = j.at("name").get<std::string>();
  p.kind = param_kind_from(j.value("kind", std::string("string")));
  p.required = j.value("required", false);
  if (j.contains("enum_values") && !j.at("enum_values").is_null())
    p.enum_values = j.at("enum_values").get<std::vector<std::string>>();
  else
    p.enum_values.reset();
  p.validate();
}

inline void to_json(json& j, const ToolSpec& t) {
  j = json{{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}};
}
inline void from_json(const json& j, ToolSpec& t) {
  t.name = j.at("name").get<std::string>();
  t.description = j.value("description", std::string{});
  t.parameters = j.contains("parameters") ? j.at("parameters").get<std::vector<ParamSpec>>()
                                          : std::vector<ParamSpec>{};
  t.validate();
}

inline void to_json(json& j, const ToolCall& c) {
  j = json{{"name", c.name}, {"arguments", ArgValue(c.arguments)}};
}
inline void from_json(const json& j, ToolCall& c) {
  c.name = j.at("name").get<std::string>();
  auto args = j.at("arguments").get<ArgValue>();
  if (!args.is_map()) throw InvalidValue("tool call arguments must be an object");
  c.arguments = args.as_map();
  c.validate();
}

inline void to_json(json& j, const ObservationEvent& e) {
  if (const auto* u = std::get_if<UserInput>(&e)) {
    j = json{{"type", "user_input"}, {"text", u->text}};
    if (u->audio_ref) j["audio_ref"] = *u->audio_ref;
  } else {
    const auto& f = std::get<EnvFeedback>(e);
    j = json{{"type", "env_feedback"}, {"tool_name", f.tool_name}, {"result", f.result}};
  }
}
inline void from_json(const json& j, ObservationEvent& e) {
  const auto type = j.at("type").get<std::string>();
  if (type == "user_input") {
    UserInput u{j.at("text").get<std::string>(), std::nullopt};
    if (j.contains("audio_ref") && !j.at("audio_ref").is_null())
      u.audio_ref = j.at("audio_ref").get<std::string>();
    e = std::move(u);
  } else if (type == "env_feedback") {
    e = EnvFeedback{j.at("tool_name").get<std::string>(), j.at("result").get<ArgValue>()};
  } else {
    throw InvalidValue("unknown observation type: " + type);
  }
}

inline void to_json(json& j, const ReasoningTrace& r) {
  j = json{{"text", r.text}, {"word_count", r.word_count}};
}
inline void from_json(const json& j, ReasoningTrace& r) {
  r = ReasoningTrace(j.at("text").get<std::string>());
}

inline void to_json(json& j, const AgentAction& a) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Speak>)
          j = json{{"type", "speak"}, {"text", x.text}};
        else if constexpr (std::is_same_v<T, InvokeTools>)
          j = json{{"type", "invoke_tools"}, {"calls", x.calls}};
        else
          j = json{{"type", "retrieve"}};
      },
      a.value);
}
inline void from_json(const json& j, AgentAction& a) {
  const auto type = j.at("type").get<std::string>();
  if (type == "speak")
    a = Speak{j.at("text").get<std::string>()};
  else if (type == "invoke_tools")
    a = InvokeTools{j.at("calls").get<std::vector<ToolCall>>()};
  else if (type == "retrieve")
    a = Retrieve{};
  else
    throw InvalidValue("unknown action type: " + type);
  a.validate();
}

inline void to_json(json& j, const Profile& p) {
  j = json{{"static_attrs", p.static_attrs}, {"dynamic_hook", p.dynamic_hook}};
}
inline void from_json(const json& j, Profile& p) {
  p.static_attrs = j.value("static_attrs", std::map<std::string, std::string>{});
  p.dynamic_hook = j.value("dynamic_hook", std::string{});
}

inline void to_json(json& j, const PhaseMarks& m) {
  j = json{{"think_start", m.think_start},     {"think_finish", m.think_finish},
           {"act_start", m.act_start},         {"act_finish", m.act_finish},
           {"propose_start", m.propose_start}, {"propose_finish", m.propose_finish},
           {"turn_start", m.turn_start},       {"turn_finish", m.turn_finish}};
}
inline void from_json(const json& j, PhaseMarks& m) {
  m.think_start = j.value("think_start", 0.0);
  m.think_finish = j.value("think_finish", 0.0);
  m.act_start = j.value("act_start", 0.0);
  m.act_finish = j.value("act_finish", 0.0);
  m.propose_start = j.value("propose_start", 0.0);
  m.propose_finish = j.value("propose_finish", 0.0);
  m.turn_start = j.value("turn_start", 0.0);
  m.turn_finish = j.value("turn_finish", 0.0);
}

inline void to_json(json& j, const TurnTiming& t) {
  j = json{{"think_duration", t.think_duration},
           {"act_duration", t.act_duration},
           {"propose_duration", t.propose_duration},
           {"waiting_overhead", t.waiting_overhead},
           {"tokens_think", t.tokens_think},
           {"tokens_answer", t.tokens_answer},
           {"marks", t.marks}};
}
inline void from_json(const json& j, TurnTiming& t) {
  t.think_duration = j.value("think_duration", 0.0);
  t.act_duration = j.value("act_duration", 0.0);
  t.propose_duration = j.value("propose_duration", 0.0);
  t.waiting_overhead = j.value("waiting_overhead", 0.0);
  t.tokens_think = j.value("tokens_think", std::size_t{0});
  t.tokens_answer = j.value("tokens_answer", std::size_t{0});
  if (j.contains("marks")) t.marks = j.at("marks").get<PhaseMarks>();
}

inline void to_json(json& j, const TurnRecord& r) {
  j = json{{"observations", r.observations},
           {"reasoning", r.reasoning},
           {"action", r.action},
           {"followup_action", nullptr},
           {"candidates_added", r.candidates_added},
           {"timing", r.timing},
           {"tool_results", r.tool_results}};
  if (r.followup_action) j["followup_action"] = *r.followup_action;
  if (r.followup_reasoning) j["followup_reasoning"] = *r.followup_reasoning;
}
inline void from_json(const json& j, TurnRecord& r) {
  r.observations = j.at("observations").get<std::vector<ObservationEvent>>();
  r.reasoning = j.at("reasoning").get<ReasoningTrace>();
  r.action = j.at("action").get<AgentAction>();
  if (j.contains("followup_action") && !j.at("followup_action").is_null())
    r.followup_action = j.at("followup_action").get<AgentAction>();
  else
    r.followup_action.reset();
  if (j.contains("followup_reasoning") && !j.at("followup_reasoning").is_null())
    r.followup_reasoning = j.at("followup_reasoning").get<ReasoningTrace>();
  else
    r.followup_reasoning.reset();
  r.candidates_added = j.value("candidates_added", std::set<ToolId>{});
  r.timing = j.value("timing", TurnTiming{});
  r.tool_results = j.value("tool_results", std::vector<ObservationEvent>{});
  r.validate();
}

inline void to_json(json& j, const SessionState& s) {
  json short_term = json::array();
  for (const auto& e : s.short_term()) short_term.push_back(e);
  j = json{{"history", s.history()},
           {"local_tool_ids", s.local_tool_ids()},
           {"profile", s.profile()},
           {"short_term", short_term},
           {"long_term", s.long_term()},
           {"short_term_capacity", s.short_term_capacity()},
           {"local_generation", s.local_generation()}};
}
inline void from_json(const json& j, SessionState& s) {
  std::deque<ObservationEvent> buffer;
  for (const auto& e : j.value("short_term", std::vector<ObservationEvent>{})) buffer.push_back(e);
  s = SessionState::restore(j.value("profile", Profile{}),
                            j.value("short_term_capacity", SessionState::kDefaultShortTermCapacity),
                            j.value("history", std::vector<TurnRecord>{}),
                            j.value("local_tool_ids", std::set<ToolId>{}),
                            j.value("local_generation", std::uint64_t{0}), std::move(buffer),
                            j.value("long_term", std::map<std::string, std::string>{}));
}

}  // namespace voxkit
