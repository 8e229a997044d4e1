#pragma once

#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "voxkit/decimal.hpp"
#include "voxkit/errors.hpp"

namespace voxkit {

// ---------------------------------------------------------------------------
// Words

// Number of maximal runs of non-whitespace characters.
inline std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Argument values

struct ArgValue;
struct ArgField;
using ArgList = std::vector<ArgValue>;
using ArgMap = std::vector<ArgField>;  // insertion-ordered, keys unique

// Numbers keep their source spelling so no precision is lost; equality is
// exact decimal equality (42 == 42.0).
struct Number {
  std::string lexeme;

  explicit Number(std::string text = "0") : lexeme(std::move(text)) {
    if (!is_decimal(lexeme)) throw InvalidValue("not a decimal number: " + lexeme);
  }
  friend bool operator==(const Number& a, const Number& b) {
    return decimal_equal(a.lexeme, b.lexeme);
  }
};

struct ArgValue {
  using Storage = std::variant<std::string, Number, bool, ArgList, ArgMap>;
  Storage value;

  ArgValue() : value(std::string{}) {}
  ArgValue(std::string s) : value(std::move(s)) {}
  ArgValue(const char* s) : value(std::string(s)) {}
  ArgValue(Number n) : value(std::move(n)) {}
  ArgValue(bool b) : value(b) {}
  ArgValue(ArgList l) : value(std::move(l)) {}
  ArgValue(ArgMap m) : value(std::move(m)) {}

  static ArgValue number(std::string lexeme) { return ArgValue(Number(std::move(lexeme))); }

  bool is_text() const { return std::holds_alternative<std::string>(value); }
  bool is_number() const { return std::holds_alternative<Number>(value); }
  bool is_bool() const { return std::holds_alternative<bool>(value); }
  bool is_list() const { return std::holds_alternative<ArgList>(value); }
  bool is_map() const { return std::holds_alternative<ArgMap>(value); }

  const std::string& as_text() const { return std::get<std::string>(value); }
  const Number& as_number() const { return std::get<Number>(value); }
  bool as_bool() const { return std::get<bool>(value); }
  const ArgList& as_list() const { return std::get<ArgList>(value); }
  const ArgMap& as_map() const { return std::get<ArgMap>(value); }

  // Field lookup on a map value; nullptr when absent or not a map.
  const ArgValue* find(std::string_view key) const;

  friend bool operator==(const ArgValue& a, const ArgValue& b);
};

struct ArgField {
  std::string key;
  ArgValue value;
  friend bool operator==(const ArgField&, const ArgField&) = default;
};

inline bool operator==(const ArgValue& a, const ArgValue& b) { return a.value == b.value; }

inline const ArgValue* ArgValue::find(std::string_view key) const {
  if (!is_map()) return nullptr;
  for (const auto& f : as_map())
    if (f.key == key) return &f.value;
  return nullptr;
}

inline bool keys_unique(const ArgMap& m) {
  std::unordered_set<std::string_view> seen;
  for (const auto& f : m)
    if (!seen.insert(f.key).second) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Tools

struct ToolId {
  std::uint32_t value = 0;
  auto operator<=>(const ToolId&) const = default;
};

enum class ParamKind { string, number, boolean, array, object };

inline std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::string: return "string";
    case ParamKind::number: return "number";
    case ParamKind::boolean: return "boolean";
    case ParamKind::array: return "array";
    case ParamKind::object: return "object";
  }
  return "string";
}

inline ParamKind param_kind_from(std::string_view s) {
  if (s == "string") return ParamKind::string;
  if (s == "number" || s == "integer") return ParamKind::number;
  if (s == "boolean") return ParamKind::boolean;
  if (s == "array") return ParamKind::array;
  if (s == "object") return ParamKind::object;
  throw InvalidValue("unknown parameter kind: " + std::string(s));
}

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::string;
  bool required = false;
  std::optional<std::vector<std::string>> enum_values;

  void validate() const {
    if (name.empty()) throw InvalidValue("parameter name is empty");
    if (enum_values) {
      if (enum_values->empty())
        throw InvalidValue("enum_values of '" + name + "' is empty");
      std::set<std::string> uniq(enum_values->begin(), enum_values->end());
      if (uniq.size() != enum_values->size())
        throw InvalidValue("enum_values of '" + name + "' has duplicates");
    }
  }
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> parameters;

  void validate() const {
    if (name.empty()) throw InvalidValue("tool name is empty");
    std::set<std::string> seen;
    for (const auto& p : parameters) {
      p.validate();
      if (!seen.insert(p.name).second)
        throw InvalidValue("tool '" + name + "' repeats parameter '" + p.name + "'");
    }
  }
  friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

struct ToolCall {
  std::string name;
  ArgMap arguments;

  void validate() const {
    if (name.empty()) throw InvalidValue("tool call name is empty");
    if (!keys_unique(arguments))
      throw InvalidValue("tool call '" + name + "' repeats an argument key");
  }
  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

// ---------------------------------------------------------------------------
// Observations and actions

struct UserInput {
  std::string text;
  std::optional<std::string> audio_ref;  // opaque; the runtime never reads audio
  friend bool operator==(const UserInput&, const UserInput&) = default;
};

struct EnvFeedback {
  std::string tool_name;
  ArgValue result;
  friend bool operator==(const EnvFeedback&, const EnvFeedback&) = default;
};

using ObservationEvent = std::variant<UserInput, EnvFeedback>;

inline bool is_feedback(const ObservationEvent& e) {
  return std::holds_alternative<EnvFeedback>(e);
}

struct ReasoningTrace {
  std::string text;
  std::size_t word_count = 0;

  ReasoningTrace() = default;
  explicit ReasoningTrace(std::string t)
      : text(std::move(t)), word_count(voxkit::word_count(text)) {}
  bool empty() const noexcept { return text.empty(); }
  friend bool operator==(const ReasoningTrace&, const ReasoningTrace&) = default;
};

struct Speak {
  std::string text;
  friend bool operator==(const Speak&, const Speak&) = default;
};

struct InvokeTools {
  std::vector<ToolCall> calls;
  friend bool operator==(const InvokeTools&, const InvokeTools&) = default;
};

struct Retrieve {
  friend bool operator==(const Retrieve&, const Retrieve&) = default;
};

struct AgentAction {
  std::variant<Speak, InvokeTools, Retrieve> value;

  AgentAction() : value(Speak{}) {}
  AgentAction(Speak s) : value(std::move(s)) {}
  AgentAction(InvokeTools t) : value(std::move(t)) {}
  AgentAction(Retrieve r) : value(r) {}

  bool is_speak() const { return std::holds_alternative<Speak>(value); }
  bool is_invoke() const { return std::holds_alternative<InvokeTools>(value); }
  bool is_retrieve() const { return std::holds_alternative<Retrieve>(value); }
  const Speak& speak() const { return std::get<Speak>(value); }
  const InvokeTools& invoke() const { return std::get<InvokeTools>(value); }

  void validate() const {
    if (is_invoke()) {
      if (invoke().calls.empty()) throw InvalidValue("InvokeTools carries no calls");
      for (const auto& c : invoke().calls) c.validate();
    }
  }
  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

// ---------------------------------------------------------------------------
// Session

struct Profile {
  std::map<std::string, std::string> static_attrs;
  std::string dynamic_hook;
  friend bool operator==(const Profile&, const Profile&) = default;
};

// Absolute clock readings (seconds) captured by the orchestrator.
struct PhaseMarks {
  double think_start = 0, think_finish = 0;
  double act_start = 0, act_finish = 0;
  double propose_start = 0, propose_finish = 0;
  double turn_start = 0, turn_finish = 0;
  friend bool operator==(const PhaseMarks&, const PhaseMarks&) = default;
};

struct TurnTiming {
  double think_duration = 0;
  double act_duration = 0;
  double propose_duration = 0;
  double waiting_overhead = 0;
  std::size_t tokens_think = 0;
  std::size_t tokens_answer = 0;
  PhaseMarks marks;

  double turn_wall() const { return marks.turn_finish - marks.turn_start; }
  friend bool operator==(const TurnTiming&, const TurnTiming&) = default;
};

struct TurnRecord {
  std::vector<ObservationEvent> observations;
  ReasoningTrace reasoning;
  AgentAction action;
  std::optional<AgentAction> followup_action;
  std::optional<ReasoningTrace> followup_reasoning;  // fresh trace of the follow-up pass
  std::set<ToolId> candidates_added;
  TurnTiming timing;
  std::vector<ObservationEvent> tool_results;

  // The action that actually took effect: the follow-up after a retrieval.
  const AgentAction& final_action() const {
    return followup_action ? *followup_action : action;
  }

  void validate() const {
    const bool retrieve = action.is_retrieve();
    if (retrieve != followup_action.has_value())
      throw InvalidValue("followup_action must be present iff action is Retrieve");
    if (!retrieve && followup_reasoning)
      throw InvalidValue("followup_reasoning requires a Retrieve action");
    if (!retrieve && !candidates_added.empty())
      throw InvalidValue("candidates_added must be empty unless action is Retrieve");
    action.validate();
    if (followup_action) followup_action->validate();
    for (const auto& r : tool_results)
      if (!is_feedback(r)) throw InvalidValue("tool_results may only hold EnvFeedback");
    if (timing.think_duration < 0 || timing.act_duration < 0 ||
        timing.propose_duration < 0 || timing.waiting_overhead < 0)
      throw InvalidValue("negative duration in TurnTiming");
  }
  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

class SessionState {
 public:
  static constexpr std::size_t kDefaultShortTermCapacity = 32;

  SessionState() = default;
  explicit SessionState(Profile profile,
                        std::size_t short_term_capacity = kDefaultShortTermCapacity)
      : profile_(std::move(profile)), capacity_(short_term_capacity) {}

  const std::vector<TurnRecord>& history() const noexcept { return history_; }
  const Profile& profile() const noexcept { return profile_; }
  const std::deque<ObservationEvent>& short_term() const noexcept { return short_term_; }
  std::size_t short_term_capacity() const noexcept { return capacity_; }

  const std::set<ToolId>& local_tool_ids() const noexcept { return local_ids_; }
  std::set<ToolId>& local_tool_ids() noexcept { return local_ids_; }
  std::uint64_t local_generation() const noexcept { return local_generation_; }
  void set_local_generation(std::uint64_t g) noexcept { local_generation_ = g; }

  std::map<std::string, std::string>& long_term() noexcept { return long_term_; }
  const std::map<std::string, std::string>& long_term() const noexcept { return long_term_; }

  void remember(ObservationEvent e) {
    short_term_.push_back(std::move(e));
    while (short_term_.size() > capacity_) short_term_.pop_front();
  }

  // Appends one validated record and feeds its events into the working buffer.
  void append(TurnRecord record) {
    record.validate();
    for (const auto& o : record.observations) remember(o);
    for (const auto& r : record.tool_results) remember(r);
    history_.push_back(std::move(record));
  }

  // Rebuilds a persisted snapshot verbatim (no buffer replay).
  static SessionState restore(Profile profile, std::size_t capacity,
                              std::vector<TurnRecord> history, std::set<ToolId> local_ids,
                              std::uint64_t generation, std::deque<ObservationEvent> buffer,
                              std::map<std::string, std::string> long_term) {
    SessionState s(std::move(profile), capacity);
    for (const auto& r : history) r.validate();
    s.history_ = std::move(history);
    s.local_ids_ = std::move(local_ids);
    s.local_generation_ = generation;
    s.short_term_ = std::move(buffer);
    while (s.short_term_.size() > s.capacity_) s.short_term_.pop_front();
    s.long_term_ = std::move(long_term);
    return s;
  }

  friend bool operator==(const SessionState&, const SessionState&) = default;

 private:
  std::vector<TurnRecord> history_;
  std::set<ToolId> local_ids_;
  std::uint64_t local_generation_ = 0;
  Profile profile_;
  std::size_t capacity_ = kDefaultShortTermCapacity;
  std::deque<ObservationEvent> short_term_;
  std::map<std::string, std::string> long_term_;
};

// Value-returning form: the input snapshot is left untouched.
inline SessionState append_turn(SessionState session, TurnRecord record) {
  session.append(std::move(record));
  return session;
}

}  // namespace voxkit
