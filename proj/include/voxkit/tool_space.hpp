#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "voxkit/clock.hpp"
#include "voxkit/core.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

// All registered tools. Identifiers are dense and follow registration order,
// so iterating a std::set<ToolId> visits tools in the order they were added.
class GlobalToolPool {
 public:
  GlobalToolPool() = default;

  ToolId register_tool(ToolSpec spec) {
    spec.validate();
    if (index_.count(spec.name)) throw DuplicateName(spec.name);
    ToolId id{static_cast<std::uint32_t>(tools_.size())};
    index_.emplace(spec.name, id);
    tools_.push_back(std::move(spec));
    return id;
  }

  bool contains(ToolId id) const noexcept { return id.value < tools_.size(); }

  const ToolSpec& at(ToolId id) const {
    if (!contains(id)) throw UnknownTool("#" + std::to_string(id.value));
    return tools_[id.value];
  }

  std::optional<ToolId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ToolId id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw UnknownTool(std::string(name));
  }

  std::size_t size() const noexcept { return tools_.size(); }
  bool empty() const noexcept { return tools_.empty(); }
  const std::vector<ToolSpec>& specs() const noexcept { return tools_; }

  std::vector<ToolId> ids() const {
    std::vector<ToolId> out;
    out.reserve(tools_.size());
    for (std::uint32_t i = 0; i < tools_.size(); ++i) out.push_back(ToolId{i});
    return out;
  }

  std::vector<ToolSpec> specs_of(const std::set<ToolId>& ids) const {
    std::vector<ToolSpec> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(at(id));
    return out;
  }

  bool resolves(const std::set<ToolId>& ids) const {
    return std::all_of(ids.begin(), ids.end(), [&](ToolId id) { return contains(id); });
  }

 private:
  std::vector<ToolSpec> tools_;
  std::unordered_map<std::string, ToolId> index_;
};

inline GlobalToolPool pool_from_json(const json& j) {
  if (!j.is_array()) throw InvalidValue("tool pool must be a JSON array of tool specs");
  GlobalToolPool pool;
  for (const auto& t : j) pool.register_tool(t.get<ToolSpec>());
  return pool;
}

inline GlobalToolPool load_tool_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidValue("cannot open tool pool: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidValue("tool pool " + path + ": " + e.what());
  }
  return pool_from_json(j);
}

struct LocalToolSet {
  std::set<ToolId> ids;
  std::uint64_t generation = 0;
  friend bool operator==(const LocalToolSet&, const LocalToolSet&) = default;
};

struct CandidateProposal {
  std::set<ToolId> ids;
  std::map<ToolId, double> scores;
  double propose_duration = 0;
};

// Union with the proposal iff the action is a retrieval; identity otherwise.
inline LocalToolSet update_local(const LocalToolSet& local, const AgentAction& action,
                                 const CandidateProposal& candidates,
                                 const GlobalToolPool& pool) {
  for (auto id : candidates.ids)
    if (!pool.contains(id)) throw UnknownTool("#" + std::to_string(id.value));
  if (!action.is_retrieve()) return local;
  LocalToolSet next = local;
  next.ids.insert(candidates.ids.begin(), candidates.ids.end());
  ++next.generation;
  return next;
}

// ---------------------------------------------------------------------------
// Proposers

class CandidateProposer {
 public:
  virtual ~CandidateProposer() = default;
  // Must be safe to call concurrently with other read-only users of the pool.
  virtual CandidateProposal propose(const ReasoningTrace& reasoning, const GlobalToolPool& pool,
                                    std::size_t k, std::stop_token stop = {}) const = 0;
};

// Lower-cased alphanumeric runs; "headset.feature_availability" gives
// {headset, feature, availability}.
inline std::set<std::string> lexical_tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

// score(tool) = |tokens(reasoning) ∩ tokens(name + description)| / |tokens(name + description)|.
// Tools scoring zero are never proposed. Ties go to the lexicographically
// smaller name. Pure: equal inputs give equal proposals.
class LexicalProposer final : public CandidateProposer {
 public:
  CandidateProposal propose(const ReasoningTrace& reasoning, const GlobalToolPool& pool,
                            std::size_t k, std::stop_token = {}) const override {
    const auto query = lexical_tokens(reasoning.text);
    struct Scored {
      ToolId id;
      std::size_t overlap;
      std::size_t total;
      const std::string* name;
    };
    std::vector<Scored> scored;
    for (auto id : pool.ids()) {
      const auto& spec = pool.at(id);
      const auto tool = lexical_tokens(spec.name + " " + spec.description);
      if (tool.empty()) continue;
      std::size_t overlap = 0;
      for (const auto& t : tool) overlap += query.count(t);
      if (overlap == 0) continue;
      scored.push_back({id, overlap, tool.size(), &spec.name});
    }
    // Exact rational comparison so ties are real ties.
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      const auto lhs = a.overlap * b.total;
      const auto rhs = b.overlap * a.total;
      if (lhs != rhs) return lhs > rhs;
      return *a.name < *b.name;
    });
    CandidateProposal out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
      out.ids.insert(scored[i].id);
      out.scores[scored[i].id] =
          static_cast<double>(scored[i].overlap) / static_cast<double>(scored[i].total);
    }
    return out;
  }
};

// Sleeps on the injected clock for base + per_tool * |pool| before delegating;
// models an auxiliary model whose latency grows with the global pool.
class DelayedProposer final : public CandidateProposer {
 public:
  DelayedProposer(const CandidateProposer& inner, Clock& clock, double base, double per_tool)
      : inner_(inner), clock_(clock), base_(base), per_tool_(per_tool) {}

  DelayedProposer(const CandidateProposer& inner, Clock& clock,
                  std::function<double(std::size_t)> delay_for_pool)
      : inner_(inner), clock_(clock), delay_fn_(std::move(delay_for_pool)) {}

  double delay_for(std::size_t pool_size) const {
    return delay_fn_ ? delay_fn_(pool_size) : base_ + per_tool_ * static_cast<double>(pool_size);
  }

  CandidateProposal propose(const ReasoningTrace& reasoning, const GlobalToolPool& pool,
                            std::size_t k, std::stop_token stop = {}) const override {
    clock_.sleep_for(delay_for(pool.size()), stop);
    return inner_.propose(reasoning, pool, k, stop);
  }

 private:
  const CandidateProposer& inner_;
  Clock& clock_;
  double base_ = 0;
  double per_tool_ = 0;
  std::function<double(std::size_t)> delay_fn_;
};

// Checked entry point: validates the request and the strategy's answer, and
// records the proposal's duration when a clock is supplied.
inline CandidateProposal propose_candidates(const ReasoningTrace& reasoning,
                                            const GlobalToolPool& pool, std::size_t k,
                                            const CandidateProposer& proposer,
                                            Clock* clock = nullptr, std::stop_token stop = {}) {
  if (k < 1) throw PreconditionViolated("candidate cap k must be >= 1");
  if (pool.empty()) throw EmptyPool();
  const double start = clock ? clock->now() : 0.0;
  CandidateProposal out = proposer.propose(reasoning, pool, k, stop);
  if (clock) out.propose_duration = clock->now() - start;
  if (out.ids.size() > k)
    throw InvalidValue("proposer returned " + std::to_string(out.ids.size()) +
                       " candidates, cap is " + std::to_string(k));
  for (auto id : out.ids)
    if (!pool.contains(id)) throw UnknownTool("#" + std::to_string(id.value));
  for (const auto& [id, score] : out.scores)
    if (!out.ids.count(id)) throw InvalidValue("proposer scored an id it did not propose");
  return out;
}

}  // namespace voxkit
