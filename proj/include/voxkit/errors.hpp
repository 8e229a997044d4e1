#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxkit {

// Root of every error the library throws. Callers that only care about
// "voxkit failed" catch this; the subclasses carry the detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was not met by the caller.
class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

class DuplicateName : public Error {
 public:
  explicit DuplicateName(const std::string& name)
      : Error("tool name already registered: " + name), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownTool : public Error {
 public:
  explicit UnknownTool(const std::string& what) : Error("unknown tool: " + what) {}
};

class EmptyPool : public Error {
 public:
  EmptyPool() : Error("global tool pool is empty") {}
};

class RetrieveLoopExceeded : public Error {
 public:
  explicit RetrieveLoopExceeded(int limit)
      : Error("retrieve emitted more than " + std::to_string(limit) +
              " consecutive times"),
        limit_(limit) {}
  int limit() const noexcept { return limit_; }

 private:
  int limit_;
};

class ScriptExhausted : public Error {
 public:
  explicit ScriptExhausted(std::size_t consumed)
      : Error("scripted backend exhausted after " + std::to_string(consumed) +
              " steps") {}
};

class HttpError : public Error {
 public:
  HttpError(int status, std::string body_excerpt)
      : Error("http error " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Tool-call markers promised a call array but the payload did not deliver.
class MalformedToolCall : public Error {
 public:
  MalformedToolCall(std::size_t offset, const std::string& why)
      : Error("malformed tool call at byte " + std::to_string(offset) + ": " + why),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class GeneratorFormatError : public Error {
 public:
  using Error::Error;
};

class RefinerFormatError : public Error {
 public:
  using Error::Error;
};

class ScorerFormatError : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class CompressionBudgetExceeded : public Error {
 public:
  CompressionBudgetExceeded(std::size_t limit, int tries)
      : Error("compressed trace still exceeds " + std::to_string(limit) +
              " words after " + std::to_string(tries) + " tries") {}
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UnknownCapability : public Error {
 public:
  explicit UnknownCapability(const std::string& name)
      : Error("unknown capability: " + name) {}
};

}  // namespace voxkit
