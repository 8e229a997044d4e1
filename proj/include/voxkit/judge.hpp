#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxkit/codec.hpp"
#include "voxkit/core.hpp"
#include "voxkit/decimal.hpp"
#include "voxkit/io.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

// ---------------------------------------------------------------------------
// Extraction

struct ExtractedParam {
  std::string raw;  // value text as it appeared
  ArgValue value;
  friend bool operator==(const ExtractedParam&, const ExtractedParam&) = default;
};

struct ExtractedCall {
  std::string name;
  std::map<std::string, ExtractedParam> params;  // keyed by normalized name
  friend bool operator==(const ExtractedCall&, const ExtractedCall&) = default;
};

// Lowercase, whitespace removed.
inline std::string normalize_param_name(std::string_view name) {
  std::string out;
  for (char c : name)
    if (!std::isspace(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

namespace detail {

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

// End (exclusive) of the JSON value opening at `pos`, or npos.
inline std::size_t json_extent(std::string_view s, std::size_t pos) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = pos; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
      if (depth < 0) return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

inline std::string leaf_text(const ArgValue& v) {
  if (v.is_text()) return v.as_text();
  if (v.is_number()) return v.as_number().lexeme;
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  std::string out;
  write_arg_value(out, v);
  return out;
}

inline bool call_object(const ArgValue& e) {
  if (!e.is_map() || e.as_map().size() != 2) return false;
  const ArgValue* name = e.find("name");
  const ArgValue* args = e.find("arguments");
  return name && name->is_text() && !trim(name->as_text()).empty() && args && args->is_map();
}

inline ExtractedCall from_call_object(const ArgValue& e) {
  ExtractedCall c;
  c.name = trim(e.find("name")->as_text());
  for (const auto& f : e.find("arguments")->as_map())
    c.params.try_emplace(normalize_param_name(f.key), ExtractedParam{leaf_text(f.value), f.value});
  return c;
}

// Split on top-level commas; quotes of either kind and brackets nest.
inline std::optional<std::vector<std::string_view>> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '[' || c == '{' || c == '(') ++depth;
    else if (c == ']' || c == '}' || c == ')') {
      if (--depth < 0) return std::nullopt;
    } else if (c == ',' && depth == 0) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  if (quote || depth != 0) return std::nullopt;
  out.push_back(s.substr(start));
  return out;
}

inline std::string unquote(std::string_view token) {
  const char q = token.front();
  std::string out;
  for (std::size_t i = 1; i + 1 < token.size(); ++i) {
    if (token[i] == '\\' && i + 2 < token.size() &&
        (token[i + 1] == q || token[i + 1] == '\\')) {
      out.push_back(token[++i]);
    } else {
      out.push_back(token[i]);
    }
  }
  return out;
}

inline ArgValue value_from_token(std::string_view token) {
  if (token.size() >= 2 && (token.front() == '"' || token.front() == '\'') &&
      token.back() == token.front())
    return ArgValue(unquote(token));
  if (auto v = try_parse_arg_value(token)) return *v;
  if (token.front() == '[' || token.front() == '{') {
    std::string swapped(token);
    for (auto& c : swapped)
      if (c == '\'') c = '"';
      else if (c == '"') c = '\'';
    if (auto v = try_parse_arg_value(swapped)) return *v;
  }
  if (token == "True") return ArgValue(true);
  if (token == "False") return ArgValue(false);
  return ArgValue(std::string(token));
}

// Parses `(k=v, ...)` starting at the '(' at `open`. Returns the end
// (exclusive) of the call and fills `call`, or npos when the text is not a
// keyword call.
inline std::size_t parse_call_form(std::string_view s, std::size_t open, ExtractedCall& call) {
  int depth = 0;
  char quote = 0;
  std::size_t close = std::string_view::npos;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') {
      if (--depth == 0) {
        if (c != ')') return std::string_view::npos;
        close = i;
        break;
      }
    }
  }
  if (close == std::string_view::npos) return close;
  const std::string_view inner = s.substr(open + 1, close - open - 1);
  if (trim(inner).empty()) return close + 1;
  auto pieces = split_args(inner);
  if (!pieces) return std::string_view::npos;
  for (auto piece : *pieces) {
    const std::string p = trim(piece);
    const std::size_t eq = p.find('=');
    if (eq == std::string::npos || eq == 0) return std::string_view::npos;
    const std::string key = trim(std::string_view(p).substr(0, eq));
    const std::string token = trim(std::string_view(p).substr(eq + 1));
    if (key.empty() || token.empty()) return std::string_view::npos;
    if (key.find_first_of("\"'()[]{}") != std::string::npos) return std::string_view::npos;
    call.params.try_emplace(normalize_param_name(key), ExtractedParam{token, value_from_token(token)});
  }
  return close + 1;
}

}  // namespace detail

// Pulls every call written as a JSON array of {name, arguments} objects, a
// lone such object, or name(key=value, ...). Other text is ignored.
inline std::vector<ExtractedCall> extract_tool_calls(std::string_view text) {
  std::vector<ExtractedCall> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '[' || c == '{') {
      const std::size_t end = detail::json_extent(text, i);
      if (end != std::string_view::npos) {
        if (auto v = try_parse_arg_value(text.substr(i, end - i))) {
          if (v->is_list() && !v->as_list().empty() &&
              std::all_of(v->as_list().begin(), v->as_list().end(), detail::call_object)) {
            for (const auto& e : v->as_list()) out.push_back(detail::from_call_object(e));
            i = end;
            continue;
          }
          if (detail::call_object(*v)) {
            out.push_back(detail::from_call_object(*v));
            i = end;
            continue;
          }
        }
      }
      ++i;
      continue;
    }
    if (detail::is_ident_start(c) && (i == 0 || !detail::is_ident_char(text[i - 1]))) {
      std::size_t j = i;
      while (j < text.size() && detail::is_ident_char(text[j])) ++j;
      if (j < text.size() && text[j] == '(') {
        ExtractedCall call;
        call.name = std::string(text.substr(i, j - i));
        const std::size_t end = detail::parse_call_form(text, j, call);
        if (end != std::string_view::npos) {
          out.push_back(std::move(call));
          i = end;
          continue;
        }
      }
      i = j;
      continue;
    }
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

inline std::string strip_quotes(std::string_view s) {
  const std::string t = trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front())
    return t.substr(1, t.size() - 2);
  return t;
}

// Equal after stripping one layer of quotes, or equal as exact decimals.
// Lists compare element-wise in order; objects by normalized key.
inline bool value_match(const ArgValue& a, const ArgValue& b) {
  const bool a_leaf = !a.is_list() && !a.is_map();
  const bool b_leaf = !b.is_list() && !b.is_map();
  if (a_leaf && b_leaf) {
    const std::string x = strip_quotes(detail::leaf_text(a));
    const std::string y = strip_quotes(detail::leaf_text(b));
    return x == y || decimal_equal(x, y);
  }
  if (a.is_list() && b.is_list()) {
    const auto& l = a.as_list();
    const auto& r = b.as_list();
    if (l.size() != r.size()) return false;
    for (std::size_t i = 0; i < l.size(); ++i)
      if (!value_match(l[i], r[i])) return false;
    return true;
  }
  if (a.is_map() && b.is_map()) {
    std::map<std::string, const ArgValue*> l, r;
    for (const auto& f : a.as_map()) l.emplace(normalize_param_name(f.key), &f.value);
    for (const auto& f : b.as_map()) r.emplace(normalize_param_name(f.key), &f.value);
    if (l.size() != r.size()) return false;
    for (const auto& [k, v] : l) {
      auto it = r.find(k);
      if (it == r.end() || !value_match(*v, *it->second)) return false;
    }
    return true;
  }
  return false;
}

inline bool calls_match(const ExtractedCall& a, const ExtractedCall& b) {
  if (a.params.size() != b.params.size()) return false;
  for (const auto& [k, p] : a.params) {
    auto it = b.params.find(k);
    if (it == b.params.end() || !value_match(p.value, it->second.value)) return false;
  }
  return true;
}

// Spelling shared by all values that value_match considers equal.
inline std::string canonical_value(const ArgValue& v) {
  if (v.is_list()) {
    std::string out = "[";
    for (const auto& e : v.as_list()) out += canonical_value(e) + ",";
    return out + "]";
  }
  if (v.is_map()) {
    std::map<std::string, std::string> fields;
    for (const auto& f : v.as_map()) fields.emplace(normalize_param_name(f.key), canonical_value(f.value));
    std::string out = "{";
    for (const auto& [k, c] : fields) out += json(k).dump() + ":" + c + ",";
    return out + "}";
  }
  const std::string t = strip_quotes(detail::leaf_text(v));
  if (auto d = parse_decimal(t)) return "#" + canonical_decimal(*d);
  return json(t).dump();
}

inline std::string canonical_call(const ExtractedCall& c) {
  std::string out = c.name + "(";
  for (const auto& [k, p] : c.params) out += json(k).dump() + "=" + canonical_value(p.value) + ",";
  return out + ")";
}

inline bool compare_tool_selection(const std::vector<ExtractedCall>& target,
                                   const std::vector<ExtractedCall>& output) {
  if (target.size() != output.size()) return false;
  std::vector<std::string> a, b;
  for (const auto& c : target) a.push_back(trim(c.name));
  for (const auto& c : output) b.push_back(trim(c.name));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

inline constexpr std::size_t kBijectionSearchCap = 8;

namespace detail {

inline bool find_bijection(const std::vector<std::vector<bool>>& ok, std::size_t row,
                           std::vector<bool>& used) {
  if (row == ok.size()) return true;
  for (std::size_t col = 0; col < ok.size(); ++col) {
    if (used[col] || !ok[row][col]) continue;
    used[col] = true;
    if (find_bijection(ok, row + 1, used)) return true;
    used[col] = false;
  }
  return false;
}

}  // namespace detail

// Requires a successful selection comparison. Same-named calls are paired by
// exhaustive search up to kBijectionSearchCap per name; larger groups fall
// back to comparing sorted canonical forms.
inline bool compare_param_fill(const std::vector<ExtractedCall>& target,
                               const std::vector<ExtractedCall>& output) {
  if (!compare_tool_selection(target, output))
    throw PreconditionViolated("parameter comparison needs matching tool selection");
  std::map<std::string, std::vector<const ExtractedCall*>> lhs, rhs;
  for (const auto& c : target) lhs[trim(c.name)].push_back(&c);
  for (const auto& c : output) rhs[trim(c.name)].push_back(&c);
  for (const auto& [name, group] : lhs) {
    const auto& other = rhs.at(name);
    const std::size_t n = group.size();
    if (n <= kBijectionSearchCap) {
      std::vector<std::vector<bool>> ok(n, std::vector<bool>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ok[i][j] = calls_match(*group[i], *other[j]);
      std::vector<bool> used(n, false);
      if (!detail::find_bijection(ok, 0, used)) return false;
    } else {
      std::vector<std::string> a, b;
      for (auto* c : group) a.push_back(canonical_call(*c));
      for (auto* c : other) b.push_back(canonical_call(*c));
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) return false;
    }
  }
  return true;
}

struct JudgeVerdict {
  bool func_select_correct = false;
  bool param_fill_correct = false;
  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

inline JudgeVerdict judge_pair(std::string_view target_text, std::string_view output_text) {
  const auto target = extract_tool_calls(target_text);
  const auto output = extract_tool_calls(output_text);
  JudgeVerdict v;
  v.func_select_correct = compare_tool_selection(target, output);
  if (!v.func_select_correct) return v;  // STOP
  v.param_fill_correct = compare_param_fill(target, output);
  return v;
}

inline std::string verdict_line(const JudgeVerdict& v) {
  return std::string("{\"func_select_correct\": ") + (v.func_select_correct ? "true" : "false") +
         ", \"param_fill_correct\": " + (v.param_fill_correct ? "true" : "false") + "}";
}

// ---------------------------------------------------------------------------
// Corpus metrics

enum class Capability {
  single_task,
  task_decomposition,
  parallel_processing,
  contextual_planning,
  proactive_seeking
};

inline constexpr std::array<Capability, 5> kCapabilities = {
    Capability::single_task, Capability::task_decomposition, Capability::parallel_processing,
    Capability::contextual_planning, Capability::proactive_seeking};

inline std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::single_task: return "single_task";
    case Capability::task_decomposition: return "task_decomposition";
    case Capability::parallel_processing: return "parallel_processing";
    case Capability::contextual_planning: return "contextual_planning";
    case Capability::proactive_seeking: return "proactive_seeking";
  }
  return "single_task";
}

inline Capability capability_from(std::string_view s) {
  for (auto c : kCapabilities)
    if (to_string(c) == s) return c;
  throw UnknownCapability(std::string(s));
}

struct CorpusItem {
  std::string id;
  Capability capability = Capability::single_task;
  std::string target;
  std::string output;
};

struct MetricSlice {
  double ts = 0;
  double pf = 0;
  std::optional<double> tu;  // absent when no item is eligible
  std::size_t n_items = 0;
  std::size_t n_tu = 0;
  std::optional<double> fc;
};

struct CorpusMetrics : MetricSlice {
  std::map<Capability, MetricSlice> per_capability;
};

// External scorer for feedback completeness, 0 to 5.
using FeedbackScorer = std::function<double(const CorpusItem&)>;

inline bool parses_to_retrieve(std::string_view text) {
  try {
    return parse_assistant_output(text).action.is_retrieve();
  } catch (const MalformedToolCall&) {
    return false;
  }
}

struct ScoredItem {
  JudgeVerdict verdict;
  bool tu_eligible = false;
  bool tu_correct = false;
  std::optional<double> fc;
};

inline ScoredItem score_item(const CorpusItem& item, const FeedbackScorer& fc = {}) {
  ScoredItem s;
  s.verdict = judge_pair(item.target, item.output);
  if (item.capability == Capability::proactive_seeking && parses_to_retrieve(item.target)) {
    s.tu_eligible = true;
    s.tu_correct = parses_to_retrieve(item.output);
  }
  if (fc) {
    const double score = fc(item);
    if (!(score >= 0 && score <= 5)) throw OutOfRange("feedback score must lie in [0, 5]");
    s.fc = score;
  }
  return s;
}

namespace detail {

struct Tally {
  std::size_t n = 0, ts = 0, pf = 0, tu_n = 0, tu_ok = 0, fc_n = 0;
  double fc_sum = 0;
  void add(const ScoredItem& s) {
    ++n;
    ts += s.verdict.func_select_correct;
    pf += s.verdict.param_fill_correct;
    if (s.tu_eligible) {
      ++tu_n;
      tu_ok += s.tu_correct;
    }
    if (s.fc) {
      ++fc_n;
      fc_sum += *s.fc;
    }
  }
  MetricSlice slice() const {
    MetricSlice m;
    m.n_items = n;
    m.n_tu = tu_n;
    if (n) {
      m.ts = 100.0 * static_cast<double>(ts) / static_cast<double>(n);
      m.pf = 100.0 * static_cast<double>(pf) / static_cast<double>(n);
    }
    if (tu_n) m.tu = 100.0 * static_cast<double>(tu_ok) / static_cast<double>(tu_n);
    if (fc_n) m.fc = fc_sum / static_cast<double>(fc_n);
    return m;
  }
};

}  // namespace detail

inline CorpusMetrics aggregate(const std::vector<CorpusItem>& items,
                               const std::vector<ScoredItem>& scored) {
  detail::Tally all;
  std::map<Capability, detail::Tally> per;
  for (std::size_t i = 0; i < items.size(); ++i) {
    all.add(scored[i]);
    per[items[i].capability].add(scored[i]);
  }
  CorpusMetrics m;
  static_cast<MetricSlice&>(m) = all.slice();
  for (const auto& [cap, tally] : per) m.per_capability[cap] = tally.slice();
  return m;
}

inline CorpusMetrics score_corpus(const std::vector<CorpusItem>& items,
                                  const FeedbackScorer& fc = {}) {
  std::vector<ScoredItem> scored;
  scored.reserve(items.size());
  for (const auto& item : items) scored.push_back(score_item(item, fc));
  return aggregate(items, scored);
}

inline json slice_json(const MetricSlice& s) {
  json j{{"ts", s.ts}, {"pf", s.pf}, {"tu", nullptr}, {"n_items", s.n_items}, {"n_tu", s.n_tu}};
  if (s.tu) j["tu"] = *s.tu;
  if (s.fc) j["fc"] = *s.fc;
  return j;
}

inline json metrics_json(const CorpusMetrics& m) {
  json j = slice_json(m);
  json per = json::object();
  for (const auto& [cap, s] : m.per_capability) per[std::string(to_string(cap))] = slice_json(s);
  j["per_capability"] = per;
  return j;
}

inline CorpusItem corpus_item_from_json(const json& j) {
  CorpusItem item;
  const auto& id = j.at("id");
  item.id = id.is_string() ? id.get<std::string>() : id.dump();
  item.capability = capability_from(j.at("capability").get<std::string>());
  item.target = j.at("target").get<std::string>();
  item.output = j.at("output").get<std::string>();
  return item;
}

inline std::vector<CorpusItem> parse_corpus(std::string_view text,
                                            const std::string& source = "corpus") {
  std::vector<CorpusItem> out;
  for (const auto& line : parse_jsonl(text, source)) {
    try {
      out.push_back(corpus_item_from_json(line.value));
    } catch (const UnknownCapability&) {
      throw;
    } catch (const std::exception& e) {
      throw InvalidValue(source + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace voxkit
