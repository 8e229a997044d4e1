#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/json_io.hpp"

namespace voxkit {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidValue("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Writes to a sibling temp file and renames it over the target, so readers
// see either the old content or the complete new one.
inline void atomic_write(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  static std::atomic<unsigned> counter{0};
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename onto " + path + ": " + ec.message());
  }
}

struct JsonlLine {
  std::size_t line_number;
  json value;
};

// Blank lines are skipped; a bad line raises InvalidValue naming it.
inline std::vector<JsonlLine> parse_jsonl(std::string_view text, const std::string& source = "input") {
  std::vector<JsonlLine> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++lineno;
    if (!trim(line).empty()) {
      try {
        out.push_back({lineno, json::parse(line)});
      } catch (const json::parse_error& e) {
        throw InvalidValue(source + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

inline std::vector<JsonlLine> read_jsonl(const std::string& path) {
  return parse_jsonl(read_text_file(path), path);
}

template <class T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    json j = item;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

// Replaces ${NAME} with the environment value; unset variables are an error
// so a missing secret never turns into an empty string silently.
inline std::string interpolate_env(std::string_view text,
                                   const std::function<const char*(const char*)>& getenv_fn =
                                       [](const char* n) { return std::getenv(n); }) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const std::size_t close = text.find('}', i + 2);
      if (close == std::string_view::npos) throw InvalidValue("unterminated ${ in config");
      const std::string name(text.substr(i + 2, close - i - 2));
      if (name.empty()) throw InvalidValue("empty ${} in config");
      const char* v = getenv_fn(name.c_str());
      if (!v) throw InvalidValue("environment variable " + name + " is not set");
      out += v;
      i = close + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

inline json interpolate_env_json(const json& j) {
  if (j.is_string()) return json(interpolate_env(std::string_view(j.get_ref<const std::string&>())));
  json out = j;
  if (out.is_array() || out.is_object())
    for (auto it = out.begin(); it != out.end(); ++it) *it = interpolate_env_json(*it);
  return out;
}

inline json load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidValue("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidValue("config " + path + " must be a JSON object");
  return interpolate_env_json(j);
}

}  // namespace voxkit
