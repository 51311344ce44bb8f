#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace asmopt {

/// Base class of every error the harness raises. Candidate misbehaviour is
/// never reported through exceptions; these signal unusable inputs or a
/// broken environment.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CompileError : public Error {
 public:
  CompileError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

class ReferenceRuntimeError : public Error {
 public:
  using Error::Error;
};

class SandboxSetupError : public Error {
 public:
  using Error::Error;
};

class TimeoutDuringTiming : public Error {
 public:
  TimeoutDuringTiming(const std::string& what, std::size_t test_index, std::string binary = {})
      : Error(what), test_index_(test_index), binary_(std::move(binary)) {}
  std::size_t test_index() const noexcept { return test_index_; }
  const std::string& binary() const noexcept { return binary_; }

 private:
  std::size_t test_index_;
  std::string binary_;
};

// A timed run that crashed or exited nonzero.
class TimingRunFailed : public Error {
 public:
  TimingRunFailed(const std::string& what, std::size_t test_index, std::string binary = {})
      : Error(what), test_index_(test_index), binary_(std::move(binary)) {}
  std::size_t test_index() const noexcept { return test_index_; }
  const std::string& binary() const noexcept { return binary_; }

 private:
  std::size_t test_index_;
  std::string binary_;
};

class ClockError : public Error {
 public:
  using Error::Error;
};

class MissingRatio : public Error {
 public:
  using Error::Error;
};

class EmptySplit : public Error {
 public:
  using Error::Error;
};

class EmptyResults : public Error {
 public:
  using Error::Error;
};

class EmptyValues : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class UnknownInstance : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  EndpointError(const std::string& what, bool retryable, int http_status = 0)
      : Error(what), retryable_(retryable), http_status_(http_status) {}
  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

class ResponseEmpty : public Error {
 public:
  using Error::Error;
};

}  // namespace asmopt
