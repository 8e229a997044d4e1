#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "voxkit/backends.hpp"
#include "voxkit/core.hpp"
#include "voxkit/io.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

// ---------------------------------------------------------------------------
// Configuration and records

struct PipelineConfig {
  double tau = 7;
  std::size_t max_attempts = 3;
  std::size_t think_max_words = 120;
  int necessity_min = 3;

  void validate() const {
    if (!(tau >= 0 && tau <= 10)) throw InvalidValue("tau must lie in [0, 10]");
    if (max_attempts < 1) throw InvalidValue("max_attempts must be >= 1");
    if (think_max_words < 1) throw InvalidValue("think_max_words must be >= 1");
    if (necessity_min < 0 || necessity_min > 4) throw InvalidValue("necessity_min must lie in [0, 4]");
  }
};

inline PipelineConfig pipeline_config_from(const json& j) {
  PipelineConfig c;
  c.tau = j.value("tau", c.tau);
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  c.think_max_words = j.value("think_max_words", c.think_max_words);
  c.necessity_min = j.value("necessity_min", c.necessity_min);
  c.validate();
  return c;
}

struct CotCandidate {
  std::string query;
  std::string answer;
  ReasoningTrace trace;
  std::optional<double> score;
  std::size_t attempt = 0;
};

struct ScoreBreakdown {
  double correctness = 0;   // 0-4
  double relevance = 0;     // 0-2
  double clarity = 0;       // 0-2
  double completeness = 0;  // 0-1
  double brevity = 0;       // 0-1
  double sum() const { return correctness + relevance + clarity + completeness + brevity; }
};

struct QualityScore {
  double total = 0;
  std::optional<ScoreBreakdown> breakdown;
};

// ---------------------------------------------------------------------------
// Strategies. Each returns the model's raw text; the control logic below
// owns all validation.

struct GenerationRequest {
  std::string query;
  std::string answer;
  std::optional<ReasoningTrace> previous;  // the last rejected attempt, if any
  std::size_t attempt = 1;
  std::size_t think_max_words = 120;
};

class TraceGenerator {
 public:
  virtual ~TraceGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

class TraceScorer {
 public:
  virtual ~TraceScorer() = default;
  virtual std::string score(const std::string& query, const std::string& answer,
                            const ReasoningTrace& trace) = 0;
};

class TraceRefiner {
 public:
  virtual ~TraceRefiner() = default;
  virtual std::string refine(const ReasoningTrace& trace) = 0;
};

class TraceCompressor {
 public:
  virtual ~TraceCompressor() = default;
  virtual std::string compress(const ReasoningTrace& trace, std::size_t word_limit) = 0;
};

class NecessityScorer {
 public:
  virtual ~NecessityScorer() = default;
  virtual std::string assess(const std::string& query) = 0;
};

// Function-backed stubs for tests and offline runs.
struct StubGenerator final : TraceGenerator {
  std::function<std::string(const GenerationRequest&)> fn;
  explicit StubGenerator(decltype(fn) f) : fn(std::move(f)) {}
  std::string generate(const GenerationRequest& r) override { return fn(r); }
};

struct StubScorer final : TraceScorer {
  std::function<std::string(const std::string&, const std::string&, const ReasoningTrace&)> fn;
  explicit StubScorer(decltype(fn) f) : fn(std::move(f)) {}
  std::string score(const std::string& q, const std::string& a, const ReasoningTrace& t) override {
    return fn(q, a, t);
  }
};

struct StubRefiner final : TraceRefiner {
  std::function<std::string(const ReasoningTrace&)> fn;
  explicit StubRefiner(decltype(fn) f) : fn(std::move(f)) {}
  std::string refine(const ReasoningTrace& t) override { return fn(t); }
};

struct StubCompressor final : TraceCompressor {
  std::function<std::string(const ReasoningTrace&, std::size_t)> fn;
  explicit StubCompressor(decltype(fn) f) : fn(std::move(f)) {}
  std::string compress(const ReasoningTrace& t, std::size_t limit) override { return fn(t, limit); }
};

struct StubNecessity final : NecessityScorer {
  std::function<std::string(const std::string&)> fn;
  explicit StubNecessity(decltype(fn) f) : fn(std::move(f)) {}
  std::string assess(const std::string& q) override { return fn(q); }
};

inline std::string think_json(std::string_view text) {
  std::string out = "{\"think\": ";
  append_json_string(out, text);
  out += "}";
  return out;
}

inline std::string score_json(double score) {
  json j{{"score", score}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Prompt templates for model-backed strategies.

namespace prompts {

inline std::string generation(const GenerationRequest& r) {
  std::string out =
      "Write the hidden reasoning a voice assistant would go through before giving the reply "
      "below to the user's request. Work from the request toward the reply in 5 to 12 short "
      "steps, name any tool the reply uses and where each argument value comes from, and stay "
      "under " +
      std::to_string(r.think_max_words) +
      " words. Do not restate the reply itself. Respond with a single line of JSON of the form "
      "{\"think\": \"...\"} and nothing else.\n\nRequest: " +
      r.query + "\nReply: " + r.answer + "\n";
  if (r.previous)
    out += "\nAn earlier attempt was rejected; improve on it:\n" + r.previous->text + "\n";
  return out;
}

inline std::string scoring(const std::string& q, const std::string& a, const ReasoningTrace& t) {
  return "Grade the reasoning below as a justification of the reply. Give integer points for "
         "correctness (0-4), relevance (0-2), clarity (0-2), completeness (0-1) and "
         "brevity (0-1); the total is their sum. Respond with JSON only: "
         "{\"correctness\": n, \"relevance\": n, \"clarity\": n, \"completeness\": n, "
         "\"brevity\": n, \"total_score\": n}.\n\nRequest: " +
         q + "\nReply: " + a + "\nReasoning: " + t.text + "\n";
}

inline std::string refinement(const ReasoningTrace& t) {
  return "Tidy the reasoning below: fix grammar, remove filler and repetition, keep every step "
         "and its order. Respond with a single line of JSON {\"think\": \"...\"} and nothing "
         "else.\n\nReasoning: " +
         t.text + "\n";
}

inline std::string compression(const ReasoningTrace& t, std::size_t limit) {
  return "Shorten the reasoning below to at most " + std::to_string(limit) +
         " words. Keep the causal chain from the user's goal to the chosen tool and the origin "
         "of each argument; add nothing new. Respond with a single line of JSON "
         "{\"think\": \"...\"} and nothing else.\n\nReasoning: " +
         t.text + "\n";
}

inline std::string necessity(const std::string& q) {
  return "Rate from 0 to 4 how much answering the request below depends on calling an external "
         "tool: 4 means impossible without one, 0 means plain reasoning suffices. Respond with "
         "JSON only: {\"tool_necessity\": n}.\n\nRequest: " +
         q + "\n";
}

}  // namespace prompts

// One adapter serving every strategy through a policy backend.
class BackendStrategies final : public TraceGenerator,
                                public TraceScorer,
                                public TraceRefiner,
                                public TraceCompressor,
                                public NecessityScorer {
 public:
  explicit BackendStrategies(PolicyBackend& backend) : backend_(backend) {}

  std::string generate(const GenerationRequest& r) override { return ask(prompts::generation(r)); }
  std::string score(const std::string& q, const std::string& a, const ReasoningTrace& t) override {
    return ask(prompts::scoring(q, a, t));
  }
  std::string refine(const ReasoningTrace& t) override { return ask(prompts::refinement(t)); }
  std::string compress(const ReasoningTrace& t, std::size_t limit) override {
    return ask(prompts::compression(t, limit));
  }
  std::string assess(const std::string& q) override { return ask(prompts::necessity(q)); }

 private:
  std::string ask(std::string prompt) {
    return backend_.invoke(PolicyRequest{PolicyPhase::think, std::move(prompt), {}}).raw_text;
  }
  PolicyBackend& backend_;
};

// ---------------------------------------------------------------------------
// Output validation

// The one-line {"think": "..."} contract. Returns the trace text or nullopt
// with a reason.
inline std::optional<std::string> parse_think_line(std::string_view raw, std::string* why = nullptr) {
  auto fail = [&](const char* msg) -> std::optional<std::string> {
    if (why) *why = msg;
    return std::nullopt;
  };
  const std::string text = trim(raw);
  if (text.find('\n') != std::string::npos || text.find('\r') != std::string::npos)
    return fail("output spans more than one line");
  const auto v = try_parse_arg_value(text);
  if (!v) return fail("output is not valid JSON");
  if (!v->is_map()) return fail("output is not a JSON object");
  if (v->as_map().size() != 1 || v->as_map().front().key != "think")
    return fail("object must have exactly one key, \"think\"");
  const ArgValue& think = v->as_map().front().value;
  if (!think.is_text()) return fail("\"think\" must be a string");
  return think.as_text();
}

inline ReasoningTrace generate_trace(const GenerationRequest& request, TraceGenerator& generator) {
  if (trim(request.query).empty() || trim(request.answer).empty())
    throw PreconditionViolated("generation needs a non-empty query and answer");
  std::string why;
  auto text = parse_think_line(generator.generate(request), &why);
  if (!text) throw GeneratorFormatError(why);
  return ReasoningTrace(*text);
}

inline ReasoningTrace generate_trace(const std::string& query, const std::string& answer,
                                     TraceGenerator& generator) {
  return generate_trace(GenerationRequest{query, answer, std::nullopt, 1, 120}, generator);
}

namespace detail {

inline std::optional<double> number_field(const ArgValue& obj, std::string_view key) {
  const ArgValue* v = obj.find(key);
  if (!v) return std::nullopt;
  if (!v->is_number()) throw ScorerFormatError("\"" + std::string(key) + "\" must be a number");
  return std::strtod(v->as_number().lexeme.c_str(), nullptr);
}

}  // namespace detail

// Accepts {"score": x, ...} or the rubric form with the five sub-scores and
// "total_score". Sub-scores, when present, must respect their ranges and sum
// to the total.
inline QualityScore parse_quality_score(std::string_view raw) {
  const auto v = try_parse_arg_value(trim(raw));
  if (!v || !v->is_map()) throw ScorerFormatError("scorer output is not a JSON object");
  QualityScore q;
  auto total = detail::number_field(*v, "total_score");
  if (!total) total = detail::number_field(*v, "score");
  if (!total) throw ScorerFormatError("scorer output lacks \"score\" or \"total_score\"");
  q.total = *total;
  if (!(q.total >= 0 && q.total <= 10)) throw OutOfRange("quality score must lie in [0, 10]");

  struct Part {
    const char* key;
    double max;
    double ScoreBreakdown::*field;
  };
  static constexpr Part parts[] = {{"correctness", 4, &ScoreBreakdown::correctness},
                                   {"relevance", 2, &ScoreBreakdown::relevance},
                                   {"clarity", 2, &ScoreBreakdown::clarity},
                                   {"completeness", 1, &ScoreBreakdown::completeness},
                                   {"brevity", 1, &ScoreBreakdown::brevity}};
  ScoreBreakdown b;
  std::size_t present = 0;
  for (const auto& p : parts) {
    if (auto x = detail::number_field(*v, p.key)) {
      if (!(*x >= 0 && *x <= p.max))
        throw OutOfRange(std::string(p.key) + " must lie in [0, " + std::to_string(int(p.max)) + "]");
      b.*p.field = *x;
      ++present;
    }
  }
  if (present != 0 && present != std::size(parts))
    throw ScorerFormatError("score breakdown is incomplete");
  if (present) {
    if (std::fabs(b.sum() - q.total) > 1e-9)
      throw ScorerFormatError("score breakdown does not sum to the total");
    q.breakdown = b;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Filter loop

struct FilterAttempt {
  std::optional<ReasoningTrace> trace;  // absent when the generator broke format
  std::optional<double> score;
  std::string error;
};

struct FilterOutcome {
  bool retained = false;
  std::optional<ReasoningTrace> trace;
  std::optional<double> score;
  std::vector<FilterAttempt> history;
  std::size_t attempts() const { return history.size(); }
};

// Generate, score, keep the first trace scoring >= tau. A malformed
// generation uses up an attempt. Each regeneration sees the previous trace.
inline FilterOutcome filter_loop(const std::string& query, const std::string& answer,
                                 TraceGenerator& generator, TraceScorer& scorer,
                                 const PipelineConfig& config = {}) {
  config.validate();
  FilterOutcome out;
  std::optional<ReasoningTrace> previous;
  for (std::size_t attempt = 1; attempt <= config.max_attempts; ++attempt) {
    FilterAttempt a;
    try {
      a.trace = generate_trace(
          GenerationRequest{query, answer, previous, attempt, config.think_max_words}, generator);
    } catch (const GeneratorFormatError& e) {
      a.error = e.what();
      out.history.push_back(std::move(a));
      continue;
    }
    a.score = parse_quality_score(scorer.score(query, answer, *a.trace)).total;
    previous = a.trace;
    out.history.push_back(a);
    if (*a.score >= config.tau) {
      out.retained = true;
      out.trace = a.trace;
      out.score = a.score;
      break;
    }
  }
  return out;
}

inline ReasoningTrace refine_trace(const ReasoningTrace& trace, TraceRefiner& refiner) {
  if (trim(trace.text).empty()) throw PreconditionViolated("cannot refine an empty trace");
  std::string why;
  auto text = parse_think_line(refiner.refine(trace), &why);
  if (!text) throw RefinerFormatError(why);
  if (trim(*text).empty()) throw RefinerFormatError("refinement is empty");
  return ReasoningTrace(*text);
}

inline constexpr std::size_t kCompressionTries = 3;

// Rejects, never truncates: the compressor is asked again until its answer
// fits. A trace already within the limit is returned as is.
inline ReasoningTrace compress_trace(const ReasoningTrace& trace, std::size_t word_limit,
                                     TraceCompressor& compressor) {
  if (word_limit < 1) throw PreconditionViolated("word_limit must be >= 1");
  if (trace.word_count <= word_limit) return trace;
  for (std::size_t i = 0; i < kCompressionTries; ++i) {
    auto text = parse_think_line(compressor.compress(trace, word_limit));
    if (!text || trim(*text).empty()) continue;
    ReasoningTrace candidate(*text);
    if (candidate.word_count <= word_limit) return candidate;
  }
  throw CompressionBudgetExceeded(word_limit, kCompressionTries);
}

inline int parse_tool_necessity(std::string_view raw) {
  const auto v = try_parse_arg_value(trim(raw));
  if (!v || !v->is_map()) throw ScorerFormatError("necessity output is not a JSON object");
  const ArgValue* x = v->find("tool_necessity");
  if (!x) throw ScorerFormatError("necessity output lacks \"tool_necessity\"");
  if (!x->is_number()) throw ScorerFormatError("\"tool_necessity\" must be an integer");
  const auto d = parse_decimal(x->as_number().lexeme);
  if (!d || d->exponent < 0) throw ScorerFormatError("\"tool_necessity\" must be an integer");
  if (d->negative || d->digits.size() + static_cast<std::size_t>(d->exponent) > 1)
    throw OutOfRange("tool_necessity must lie in [0, 4]");
  const int value = d->is_zero() ? 0 : d->digits[0] - '0';
  if (value > 4) throw OutOfRange("tool_necessity must lie in [0, 4]");
  return value;
}

inline int tool_necessity(const std::string& query, NecessityScorer& scorer) {
  if (trim(query).empty()) throw PreconditionViolated("necessity check needs a non-empty query");
  return parse_tool_necessity(scorer.assess(query));
}

// ---------------------------------------------------------------------------
// Corpus stages

struct CorpusRow {
  std::string id;
  std::string query;
  std::string answer;
  std::string category;
  double duration_seconds = 0;
};

inline CorpusRow corpus_row_from_json(const json& j) {
  CorpusRow r;
  const auto& id = j.at("id");
  r.id = id.is_string() ? id.get<std::string>() : id.dump();
  r.query = j.value("query", "");
  r.answer = j.value("answer", "");
  r.category = j.value("category", "");
  r.duration_seconds = j.value("duration_seconds", 0.0);
  if (r.duration_seconds < 0) throw InvalidValue("duration_seconds must be >= 0");
  return r;
}

inline std::vector<CorpusRow> read_corpus_rows(const std::string& path) {
  std::vector<CorpusRow> out;
  for (const auto& line : read_jsonl(path)) {
    try {
      out.push_back(corpus_row_from_json(line.value));
    } catch (const std::exception& e) {
      throw InvalidValue(path + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return out;
}

struct RetainedRow {
  std::string id;
  std::string think;
  double score = 0;
  std::size_t attempts = 0;
};

inline void to_json(json& j, const RetainedRow& r) {
  j = json{{"id", r.id}, {"think", r.think}, {"score", r.score}, {"attempts", r.attempts}};
}

struct CotStageResult {
  std::vector<RetainedRow> retained;
  std::vector<std::string> discarded;
  std::vector<std::pair<std::string, std::string>> skipped;  // id, error
};

// Runs the filter loop per row, then refinement and compression when those
// strategies are given. Rows whose strategies fail are skipped and reported.
inline CotStageResult run_cot_stage(std::vector<CorpusRow> rows, TraceGenerator& generator,
                                    TraceScorer& scorer, const PipelineConfig& config,
                                    TraceRefiner* refiner = nullptr,
                                    TraceCompressor* compressor = nullptr) {
  config.validate();
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CorpusRow& a, const CorpusRow& b) { return a.id < b.id; });
  CotStageResult out;
  for (const auto& row : rows) {
    try {
      auto outcome = filter_loop(row.query, row.answer, generator, scorer, config);
      if (!outcome.retained) {
        out.discarded.push_back(row.id);
        continue;
      }
      ReasoningTrace trace = *outcome.trace;
      if (refiner) trace = refine_trace(trace, *refiner);
      if (compressor) trace = compress_trace(trace, config.think_max_words, *compressor);
      out.retained.push_back({row.id, trace.text, *outcome.score, outcome.attempts()});
    } catch (const Error& e) {
      out.skipped.emplace_back(row.id, e.what());
    }
  }
  return out;
}

struct NecessityStageResult {
  std::vector<CorpusRow> kept;
  std::map<std::string, int> scores;
  std::vector<std::pair<std::string, std::string>> skipped;
};

inline NecessityStageResult run_necessity_stage(std::vector<CorpusRow> rows, NecessityScorer& scorer,
                                                const PipelineConfig& config) {
  config.validate();
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CorpusRow& a, const CorpusRow& b) { return a.id < b.id; });
  NecessityStageResult out;
  for (const auto& row : rows) {
    try {
      const int s = tool_necessity(row.query, scorer);
      out.scores[row.id] = s;
      if (s >= config.necessity_min) out.kept.push_back(row);
    } catch (const Error& e) {
      out.skipped.emplace_back(row.id, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest composition

enum class DataKind { tool, general };

inline const std::set<std::string>& default_tool_categories() {
  static const std::set<std::string> s = {"apigen-mt",    "dialog",   "multi-tool-select",
                                          "obs",          "obs-searchTools", "para-filled",
                                          "parallel-call", "tool-gap", "tool-select"};
  return s;
}

struct MixRatio {
  double tool = 1;
  double general = 1;
  std::string label;
  double factor() const { return general / tool; }
};

// "a:b", both positive decimals; general duration = (b / a) x tool duration.
inline MixRatio parse_ratio(std::string_view text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string::npos) throw InvalidValue("ratio must look like a:b, got " + t);
  const std::string a = trim(std::string_view(t).substr(0, colon));
  const std::string b = trim(std::string_view(t).substr(colon + 1));
  if (!is_decimal(a) || !is_decimal(b)) throw InvalidValue("ratio terms must be numbers: " + t);
  MixRatio r{std::strtod(a.c_str(), nullptr), std::strtod(b.c_str(), nullptr), t};
  if (!(r.tool > 0) || !(r.general > 0)) throw InvalidValue("ratio terms must be positive: " + t);
  return r;
}

struct SourceSample {
  std::string id;
  std::string category;
  double duration_seconds = 0;
};

struct ManifestEntry {
  std::string category;
  DataKind kind = DataKind::general;
  std::size_t sample_count = 0;
  double duration_hours = 0;
  std::vector<std::string> selected_ids;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;  // sorted by category
  std::string ratio_label;

  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.sample_count;
    return n;
  }
  double total_hours() const {
    double h = 0;
    for (const auto& e : entries) h += e.duration_hours;
    return h;
  }
  double hours_of(DataKind kind) const {
    double h = 0;
    for (const auto& e : entries)
      if (e.kind == kind) h += e.duration_hours;
    return h;
  }
  const ManifestEntry* find(std::string_view category) const {
    for (const auto& e : entries)
      if (e.category == category) return &e;
    return nullptr;
  }
};

// Tool categories are kept whole. General categories share a duration
// budget of factor x tool duration in proportion to their source duration;
// each takes the id-ordered prefix whose duration lands closest to its quota.
inline DatasetManifest compose_manifest(const std::vector<SourceSample>& samples, const MixRatio& ratio,
                                        const std::set<std::string>& tool_categories =
                                            default_tool_categories()) {
  if (!(ratio.factor() > 0)) throw InvalidValue("ratio must be positive");
  std::map<std::string, std::vector<const SourceSample*>> by_category;
  for (const auto& s : samples) {
    if (s.duration_seconds < 0) throw InvalidValue("negative duration for sample " + s.id);
    by_category[s.category].push_back(&s);
  }

  double tool_seconds = 0, general_seconds = 0;
  std::map<std::string, double> category_seconds;
  for (auto& [cat, list] : by_category) {
    std::stable_sort(list.begin(), list.end(),
                     [](const SourceSample* a, const SourceSample* b) { return a->id < b->id; });
    double sum = 0;
    for (auto* s : list) sum += s->duration_seconds;
    category_seconds[cat] = sum;
    (tool_categories.count(cat) ? tool_seconds : general_seconds) += sum;
  }

  const double budget = ratio.factor() * tool_seconds;
  DatasetManifest m;
  m.ratio_label = ratio.label;
  for (const auto& [cat, list] : by_category) {
    ManifestEntry e;
    e.category = cat;
    e.kind = tool_categories.count(cat) ? DataKind::tool : DataKind::general;
    std::size_t take = list.size();
    if (e.kind == DataKind::general) {
      const double source = category_seconds[cat];
      const double quota = general_seconds > 0 ? budget * source / general_seconds : 0;
      if (quota > source * (1 + 1e-9) + 1e-9)
        throw InsufficientData(cat + " holds " + std::to_string(source / 3600) + " h, quota is " +
                               std::to_string(quota / 3600) + " h");
      double acc = 0;
      double best_gap = quota;  // gap for taking nothing
      take = 0;
      for (std::size_t i = 0; i < list.size(); ++i) {
        acc += list[i]->duration_seconds;
        const double gap = std::fabs(acc - quota);
        if (gap < best_gap) {
          best_gap = gap;
          take = i + 1;
        }
        if (acc > quota) break;
      }
    }
    double seconds = 0;
    for (std::size_t i = 0; i < take; ++i) {
      seconds += list[i]->duration_seconds;
      e.selected_ids.push_back(list[i]->id);
    }
    e.sample_count = take;
    e.duration_hours = seconds / 3600.0;
    m.entries.push_back(std::move(e));
  }
  return m;
}

// Aggregate statistics for one category.
struct CategoryStats {
  std::string category;
  std::size_t samples = 0;
  double duration_hours = 0;
  std::optional<DataKind> kind;
};

inline std::vector<CategoryStats> parse_category_stats(const json& j) {
  const json& list = j.is_object() ? j.at("categories") : j;
  if (!list.is_array()) throw InvalidValue("category stats must be an array");
  std::vector<CategoryStats> out;
  for (const auto& e : list) {
    CategoryStats s{e.at("category").get<std::string>(), e.at("samples").get<std::size_t>(),
                    e.at("duration_hours").get<double>(), std::nullopt};
    if (e.contains("kind")) {
      const auto k = e.at("kind").get<std::string>();
      if (k != "tool" && k != "general") throw InvalidValue("kind must be tool or general");
      s.kind = k == "tool" ? DataKind::tool : DataKind::general;
    }
    if (s.duration_hours < 0) throw InvalidValue("negative duration for " + s.category);
    out.push_back(std::move(s));
  }
  return out;
}

// Expands aggregate statistics into samples of uniform duration with ids
// "<category>/<000001>".
inline std::vector<SourceSample> expand_stats(const std::vector<CategoryStats>& stats) {
  std::vector<SourceSample> out;
  for (const auto& s : stats) {
    const double each = s.samples ? s.duration_hours * 3600.0 / static_cast<double>(s.samples) : 0;
    for (std::size_t i = 1; i <= s.samples; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%06zu", i);
      out.push_back({s.category + "/" + buf, s.category, each});
    }
  }
  return out;
}

// Tool categories named by the stats' "kind" fields, or the defaults when
// no entry carries one.
inline std::set<std::string> tool_categories_of(const std::vector<CategoryStats>& stats) {
  std::set<std::string> out;
  bool any = false;
  for (const auto& s : stats) {
    if (!s.kind) continue;
    any = true;
    if (*s.kind == DataKind::tool) out.insert(s.category);
  }
  return any ? out : default_tool_categories();
}

inline std::vector<SourceSample> samples_from_rows(const std::vector<CorpusRow>& rows) {
  std::vector<SourceSample> out;
  for (const auto& r : rows) out.push_back({r.id, r.category, r.duration_seconds});
  return out;
}

inline json manifest_json(const DatasetManifest& m, bool with_ids = false) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json j{{"category", e.category},
           {"kind", e.kind == DataKind::tool ? "tool" : "general"},
           {"sample_count", e.sample_count},
           {"duration_hours", e.duration_hours}};
    if (with_ids) j["selected_ids"] = e.selected_ids;
    entries.push_back(std::move(j));
  }
  const double tool = m.hours_of(DataKind::tool);
  return json{{"ratio_label", m.ratio_label},
              {"entries", entries},
              {"total_samples", m.total_samples()},
              {"total_hours", m.total_hours()},
              {"achieved_ratio", tool > 0 ? m.hours_of(DataKind::general) / tool : 0.0}};
}

}  // namespace voxkit
