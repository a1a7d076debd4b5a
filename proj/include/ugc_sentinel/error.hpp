#pragma once

#include <stdexcept>
#include <string>

namespace ugcs {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs, bad config, violated preconditions. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Remote provider failed past the retry budget, auth failed, etc.
// CLI exit code 4.
class ProviderError : public Error {
 public:
  using Error::Error;
};

// Provider refused to process the document. Surfaced separately so
// callers can skip the document instead of aborting the run.
class RefusalError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Pipeline stage failed mid-run. CLI exit code 3.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace ugcs
