#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "voxkit/backends.hpp"
#include "voxkit/clock.hpp"
#include "voxkit/codec.hpp"
#include "voxkit/core.hpp"
#include "voxkit/executors.hpp"
#include "voxkit/io.hpp"
#include "voxkit/prompt.hpp"
#include "voxkit/tool_space.hpp"

namespace voxkit {

struct PolicyBackendSet {
  PolicyBackend& think;
  PolicyBackend& act;
  const CandidateProposer* proposer = nullptr;
};

struct TurnConfig {
  std::size_t k = 5;
  std::size_t max_retrieves = 2;
  CodecMarkers markers;
  PromptOptions prompt;
  bool use_proposer = true;
  // Tool rounds chained after one user input before the session driver
  // hands control back.
  std::size_t max_tool_rounds = 4;
  std::size_t max_turns = 0;  // 0: unlimited
};

namespace detail {

inline ReasoningTrace trace_from_think_output(const std::string& raw, const CodecMarkers& m) {
  if (raw.find(m.think_open) != std::string::npos || raw.find(m.think_close) != std::string::npos)
    return parse_assistant_output(raw, m).reasoning;
  return ReasoningTrace(trim(raw));
}

struct PassResult {
  ReasoningTrace reasoning;
  AgentAction action;
  std::optional<CandidateProposal> proposal;
  double think_start = 0, think_finish = 0;
  double act_start = 0, act_finish = 0;
  double propose_start = 0, propose_finish = 0;
  std::size_t tokens_think = 0, tokens_answer = 0;
};

}  // namespace detail

class Orchestrator {
 public:
  Orchestrator(const GlobalToolPool& pool, PolicyBackendSet backends,
               const ToolExecutorRegistry& registry, Clock& clock, TurnConfig config = {})
      : pool_(pool), backends_(backends), registry_(registry), clock_(clock),
        config_(std::move(config)) {}

  const TurnConfig& config() const noexcept { return config_; }

  // One think -> (act || propose) -> update -> follow-up cycle. The record is
  // appended to `session` and returned.
  TurnRecord run_turn(SessionState& session, const std::vector<ObservationEvent>& observations) {
    if (observations.empty()) throw PreconditionViolated("a turn needs at least one observation");
    if (!pool_.resolves(session.local_tool_ids()))
      throw UnknownTool("session holds a local tool id outside the pool");

    TurnRecord rec;
    rec.observations = observations;
    const double turn_start = clock_.now();
    LocalToolSet local{session.local_tool_ids(), session.local_generation()};

    detail::PassResult first = run_pass(session, observations, local);
    rec.reasoning = first.reasoning;
    rec.action = first.action;
    auto& t = rec.timing;
    t.think_duration = first.think_finish - first.think_start;
    t.act_duration = first.act_finish - first.act_start;
    t.tokens_think = first.tokens_think;
    t.tokens_answer = first.tokens_answer;
    t.marks.think_start = first.think_start;
    t.marks.think_finish = first.think_finish;
    t.marks.act_start = first.act_start;
    t.marks.act_finish = first.act_finish;
    t.marks.propose_start = first.propose_start;
    t.marks.propose_finish = first.propose_finish;

    detail::PassResult* last = &first;
    detail::PassResult next;
    std::size_t retrieves = 0;
    while (last->action.is_retrieve()) {
      if (++retrieves > config_.max_retrieves) throw RetrieveLoopExceeded(config_.max_retrieves);
      const CandidateProposal proposal = last->proposal.value_or(CandidateProposal{});
      t.propose_duration += proposal.propose_duration;
      t.waiting_overhead += std::max(0.0, last->propose_finish - last->act_finish);
      const LocalToolSet grown = update_local(local, Retrieve{}, proposal, pool_);
      for (auto id : grown.ids)
        if (!local.ids.count(id)) rec.candidates_added.insert(id);
      local = grown;

      next = run_pass(session, observations, local);
      rec.followup_reasoning = next.reasoning;
      rec.followup_action = next.action;
      t.tokens_think += next.tokens_think;
      t.tokens_answer += next.tokens_answer;
      last = &next;
    }

    const AgentAction& final_action = rec.final_action();
    if (final_action.is_invoke())
      rec.tool_results = run_tool_calls(final_action.invoke().calls, registry_, clock_);

    t.marks.turn_start = turn_start;
    t.marks.turn_finish = clock_.now();
    session.local_tool_ids() = local.ids;
    session.set_local_generation(local.generation);
    session.append(rec);
    return rec;
  }

  // Drives one turn per user input. While a turn ends in tool calls, the
  // results feed a further turn, up to max_tool_rounds per input.
  std::vector<TurnRecord> run_session(SessionState& session, const std::vector<UserInput>& inputs) {
    if (inputs.empty()) throw PreconditionViolated("run_session needs at least one input");
    std::vector<TurnRecord> out;
    auto budget_left = [&] { return config_.max_turns == 0 || out.size() < config_.max_turns; };
    for (const auto& input : inputs) {
      if (!budget_left()) break;
      out.push_back(run_turn(session, {input}));
      std::size_t rounds = 0;
      while (out.back().final_action().is_invoke() && rounds < config_.max_tool_rounds &&
             budget_left()) {
        ++rounds;
        const auto feedback = out.back().tool_results;
        out.push_back(run_turn(session, feedback));
      }
    }
    return out;
  }

 private:
  detail::PassResult run_pass(const SessionState& session,
                              const std::vector<ObservationEvent>& observations,
                              const LocalToolSet& local) {
    detail::PassResult r;
    const auto tools = pool_.specs_of(local.ids);

    r.think_start = clock_.now();
    PolicyRequest think_req{PolicyPhase::think,
                            render_prompt(session, observations, tools, PolicyPhase::think, nullptr,
                                          config_.prompt),
                            tools};
    const PolicyResponse thought = backends_.think.invoke(think_req);
    r.reasoning = detail::trace_from_think_output(thought.raw_text, config_.markers);
    r.tokens_think = thought.tokens_emitted;
    r.think_finish = clock_.now();

    // Act and propose both start from the finished trace.
    std::optional<Task<CandidateProposal>> propose;
    r.propose_start = r.act_start = clock_.now();
    if (config_.use_proposer && backends_.proposer && !pool_.empty()) {
      propose.emplace(clock_, [this, reasoning = r.reasoning](std::stop_token stop) {
        return propose_candidates(reasoning, pool_, config_.k, *backends_.proposer, &clock_, stop);
      });
    }

    PolicyRequest act_req{PolicyPhase::act,
                          render_prompt(session, observations, tools, PolicyPhase::act,
                                        &r.reasoning, config_.prompt),
                          tools};
    const PolicyResponse answer = backends_.act.invoke(act_req);
    r.action = parse_assistant_output(answer.raw_text, config_.markers).action;
    r.tokens_answer = answer.tokens_emitted;
    r.act_finish = clock_.now();

    if (propose) {
      if (r.action.is_retrieve()) {
        CandidateProposal p = propose->get();
        r.propose_finish = r.propose_start + p.propose_duration;
        clock_.advance_to(r.propose_finish);
        r.proposal = std::move(p);
      } else {
        // The proposal is not needed; its task is cancelled on scope exit.
        propose->request_stop();
        r.propose_finish = r.propose_start;
      }
    } else {
      r.propose_finish = r.propose_start;
    }
    return r;
  }

  const GlobalToolPool& pool_;
  PolicyBackendSet backends_;
  const ToolExecutorRegistry& registry_;
  Clock& clock_;
  TurnConfig config_;
};

inline TurnRecord run_turn(SessionState& session, const std::vector<ObservationEvent>& observations,
                           const GlobalToolPool& pool, PolicyBackendSet backends,
                           const ToolExecutorRegistry& registry, Clock& clock,
                           const TurnConfig& config = {}) {
  return Orchestrator(pool, backends, registry, clock, config).run_turn(session, observations);
}

// ---------------------------------------------------------------------------
// Transcripts: one TurnRecord per JSON line.

inline void write_transcript(const std::string& path, const std::vector<TurnRecord>& records) {
  atomic_write(path, to_jsonl(records));
}

inline std::vector<TurnRecord> parse_transcript(std::string_view text,
                                                const std::string& source = "transcript") {
  std::vector<TurnRecord> out;
  for (const auto& line : parse_jsonl(text, source)) {
    try {
      out.push_back(line.value.get<TurnRecord>());
    } catch (const std::exception& e) {
      throw InvalidValue(source + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TurnRecord> read_transcript(const std::string& path) {
  return parse_transcript(read_text_file(path), path);
}

}  // namespace voxkit
