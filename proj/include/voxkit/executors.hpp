#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "voxkit/clock.hpp"
#include "voxkit/core.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

using ToolExecutor = std::function<ArgValue(const ToolCall&)>;

class ToolExecutorRegistry {
 public:
  void add(std::string name, ToolExecutor fn) { executors_[std::move(name)] = std::move(fn); }
  const ToolExecutor* find(const std::string& name) const {
    auto it = executors_.find(name);
    return it == executors_.end() ? nullptr : &it->second;
  }
  bool contains(const std::string& name) const { return executors_.count(name) != 0; }
  std::size_t size() const { return executors_.size(); }

 private:
  std::map<std::string, ToolExecutor> executors_;
};

inline ArgValue error_payload(std::string_view kind, std::string_view message) {
  return ArgValue(ArgMap{{"error", ArgValue(std::string(kind))},
                         {"message", ArgValue(std::string(message))}});
}

inline bool is_error_payload(const ArgValue& v) { return v.find("error") != nullptr; }

// One EnvFeedback per call, in call order. Calls run concurrently; a failing
// or unknown tool yields an error payload and never aborts its siblings.
inline std::vector<ObservationEvent> run_tool_calls(const std::vector<ToolCall>& calls,
                                                    const ToolExecutorRegistry& registry,
                                                    Clock& clock) {
  if (calls.empty()) throw PreconditionViolated("run_tool_calls needs at least one call");

  struct Outcome {
    ArgValue result;
    double finish = 0;
  };
  std::vector<Task<Outcome>> tasks;
  tasks.reserve(calls.size());
  for (const auto& call : calls) {
    tasks.emplace_back(clock, [&call, &registry, &clock](std::stop_token) {
      Outcome o;
      const ToolExecutor* fn = registry.find(call.name);
      if (!fn) {
        o.result = error_payload("UnknownTool", "no executor registered for '" + call.name + "'");
      } else {
        try {
          o.result = (*fn)(call);
        } catch (const std::exception& e) {
          o.result = error_payload("ToolExecutionFailed", e.what());
        }
      }
      o.finish = clock.now();
      return o;
    });
  }

  std::vector<ObservationEvent> out;
  out.reserve(calls.size());
  double last = clock.now();
  for (std::size_t i = 0; i < calls.size(); ++i) {
    Outcome o = tasks[i].get();
    last = std::max(last, o.finish);
    out.push_back(EnvFeedback{calls[i].name, std::move(o.result)});
  }
  clock.advance_to(last);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic executors

// Sleeps `seconds` on the clock, then returns `result`.
inline ToolExecutor delayed_executor(Clock& clock, double seconds, ArgValue result) {
  return [&clock, seconds, result = std::move(result)](const ToolCall&) {
    clock.sleep_for(seconds);
    return result;
  };
}

// Returns the call's own arguments.
inline ToolExecutor echo_executor() {
  return [](const ToolCall& c) { return ArgValue(c.arguments); };
}

// Canned results per tool name, handed out in order. A fixture file maps
// each name to one result, or to {"results": [...]} for several. Copies share
// their queues.
class FixtureExecutors {
 public:
  void add(const std::string& name, ArgValue result) {
    std::lock_guard lock(state_->mu);
    state_->queues[name].push_back(std::move(result));
  }

  void install(ToolExecutorRegistry& registry) const {
    std::vector<std::string> names;
    {
      std::lock_guard lock(state_->mu);
      for (const auto& [name, q] : state_->queues) names.push_back(name);
    }
    for (const auto& name : names)
      registry.add(name, [state = state_, name](const ToolCall&) { return next(*state, name); });
  }

  ArgValue next(const std::string& name) { return next(*state_, name); }

  static FixtureExecutors from_value(const ArgValue& root) {
    if (!root.is_map()) throw InvalidValue("tool fixture must be an object keyed by tool name");
    FixtureExecutors f;
    for (const auto& field : root.as_map()) {
      const ArgValue* results = field.value.find("results");
      if (results && results->is_list() && field.value.as_map().size() == 1) {
        for (const auto& r : results->as_list()) f.add(field.key, r);
      } else {
        f.add(field.key, field.value);
      }
    }
    return f;
  }

  static FixtureExecutors load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidValue("cannot open tool fixture: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // The exact reader keeps numeric lexemes untouched.
    return from_value(parse_arg_value(text));
  }

 private:
  struct State {
    std::mutex mu;
    std::map<std::string, std::deque<ArgValue>> queues;
  };

  static ArgValue next(State& s, const std::string& name) {
    std::lock_guard lock(s.mu);
    auto& q = s.queues[name];
    if (q.empty()) throw Error("fixture results for '" + name + "' exhausted");
    ArgValue v = std::move(q.front());
    q.pop_front();
    return v;
  }

  std::shared_ptr<State> state_ = std::make_shared<State>();
};

}  // namespace voxkit
