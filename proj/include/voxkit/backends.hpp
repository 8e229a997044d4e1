#pragma once

#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "voxkit/clock.hpp"
#include "voxkit/core.hpp"
#include "voxkit/json_io.hpp"
#include "voxkit/prompt.hpp"
#include "voxkit/tool_space.hpp"

namespace voxkit {

struct PolicyRequest {
  PolicyPhase phase = PolicyPhase::think;
  std::string rendered_context;
  std::vector<ToolSpec> local_tools;
};

struct PolicyResponse {
  std::string raw_text;
  std::size_t tokens_emitted = 0;
};

// Realizes one sample from a think/act/propose policy. Implementations must
// tolerate concurrent invoke() calls for different phases.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;
  virtual PolicyResponse invoke(const PolicyRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptStep {
  PolicyPhase phase = PolicyPhase::think;
  std::string text;
  double delay_s = 0;
};

inline void to_json(json& j, const ScriptStep& s) {
  j = json{{"phase", std::string(to_string(s.phase))}, {"text", s.text}, {"delay_s", s.delay_s}};
}
inline void from_json(const json& j, ScriptStep& s) {
  s.phase = policy_phase_from(j.at("phase").get<std::string>());
  s.text = j.at("text").get<std::string>();
  s.delay_s = j.value("delay_s", 0.0);
  if (s.delay_s < 0) throw InvalidValue("script step delay must be >= 0");
}

// Replays canned responses. Each call consumes the earliest unconsumed step
// of the requested phase, so concurrent phases stay deterministic. Running
// out is an error, never a wrap-around.
class ScriptedBackend final : public PolicyBackend {
 public:
  ScriptedBackend(std::vector<ScriptStep> steps, Clock& clock)
      : steps_(std::move(steps)), used_(steps_.size(), false), clock_(clock) {}

  PolicyResponse invoke(const PolicyRequest& request) override {
    ScriptStep step;
    {
      std::lock_guard lock(mu_);
      std::size_t i = 0;
      while (i < steps_.size() && (used_[i] || steps_[i].phase != request.phase)) ++i;
      if (i == steps_.size()) throw ScriptExhausted(consumed_);
      used_[i] = true;
      ++consumed_;
      step = steps_[i];
    }
    clock_.sleep_for(step.delay_s);
    return PolicyResponse{step.text, word_count(step.text)};
  }

  std::size_t consumed() const {
    std::lock_guard lock(mu_);
    return consumed_;
  }
  std::size_t remaining() const {
    std::lock_guard lock(mu_);
    return steps_.size() - consumed_;
  }

 private:
  std::vector<ScriptStep> steps_;
  std::vector<bool> used_;
  std::size_t consumed_ = 0;
  Clock& clock_;
  mutable std::mutex mu_;
};

inline std::vector<ScriptStep> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidValue("cannot open script: " + path);
  std::vector<ScriptStep> steps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      steps.push_back(json::parse(line).get<ScriptStep>());
    } catch (const std::exception& e) {
      throw InvalidValue(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return steps;
}

// Computes its response delay from the request, e.g. proportional to the
// number of tools rendered into the prompt.
class DelayedBackend final : public PolicyBackend {
 public:
  DelayedBackend(PolicyBackend& inner, Clock& clock, double base, double per_tool)
      : inner_(inner), clock_(clock), base_(base), per_tool_(per_tool) {}

  PolicyResponse invoke(const PolicyRequest& request) override {
    clock_.sleep_for(base_ + per_tool_ * static_cast<double>(request.local_tools.size()));
    return inner_.invoke(request);
  }

 private:
  PolicyBackend& inner_;
  Clock& clock_;
  double base_;
  double per_tool_;
};

// Answers every request with a fixed text; the bench uses it for policies
// whose content does not matter.
class ConstantBackend final : public PolicyBackend {
 public:
  explicit ConstantBackend(std::string think = "plan", std::string act = "ok",
                           std::string propose = "[]")
      : think_(std::move(think)), act_(std::move(act)), propose_(std::move(propose)) {}

  PolicyResponse invoke(const PolicyRequest& r) override {
    const std::string& text = r.phase == PolicyPhase::think ? think_
                              : r.phase == PolicyPhase::act ? act_
                                                            : propose_;
    return {text, word_count(text)};
  }

 private:
  std::string think_, act_, propose_;
};

// Wraps a backend and logs every call with clock readings.
class RecordingBackend final : public PolicyBackend {
 public:
  struct Call {
    PolicyPhase phase;
    double start;
    double finish;
    std::string context;
    std::string response;
  };

  RecordingBackend(PolicyBackend& inner, Clock& clock) : inner_(inner), clock_(clock) {}

  PolicyResponse invoke(const PolicyRequest& request) override {
    const double start = clock_.now();
    PolicyResponse r = inner_.invoke(request);
    const double finish = clock_.now();
    std::lock_guard lock(mu_);
    calls_.push_back({request.phase, start, finish, request.rendered_context, r.raw_text});
    return r;
  }

  std::vector<Call> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  PolicyBackend& inner_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

// ---------------------------------------------------------------------------
// Auxiliary-model proposer

// Asks a backend for tool names. Unknown names are dropped; order gives the
// score (1, 1/2, 1/3, ...).
class LlmProposer final : public CandidateProposer {
 public:
  explicit LlmProposer(PolicyBackend& backend) : backend_(backend) {}

  static std::string render(const ReasoningTrace& reasoning, const GlobalToolPool& pool,
                            std::size_t k) {
    std::string out =
        "Pick the tools most useful for carrying out the reasoning below. Reply with a JSON "
        "array of at most " +
        std::to_string(k) + " tool names and nothing else.\n### Reasoning\n" + reasoning.text +
        "\n### Tools\n";
    for (const auto& t : pool.specs()) out += render_tool_line(t) + "\n";
    return out;
  }

  CandidateProposal propose(const ReasoningTrace& reasoning, const GlobalToolPool& pool,
                            std::size_t k, std::stop_token = {}) const override {
    PolicyRequest req{PolicyPhase::propose, render(reasoning, pool, k), {}};
    const auto reply = backend_.invoke(req).raw_text;
    CandidateProposal out;
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) return out;
    nlohmann::json names;
    try {
      names = nlohmann::json::parse(reply.substr(open, close - open + 1));
    } catch (const std::exception&) {
      return out;
    }
    if (!names.is_array()) return out;
    std::size_t rank = 0;
    for (const auto& n : names) {
      if (out.ids.size() >= k) break;
      std::string name;
      if (n.is_string()) name = n.get<std::string>();
      else if (n.is_object() && n.contains("name") && n["name"].is_string()) name = n["name"].get<std::string>();
      auto id = pool.find(name);
      if (!id || out.ids.count(*id)) continue;
      out.ids.insert(*id);
      out.scores[*id] = 1.0 / static_cast<double>(++rank);
    }
    return out;
  }

 private:
  PolicyBackend& backend_;
};

}  // namespace voxkit
