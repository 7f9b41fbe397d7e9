// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROOTPROBE_ERRORS_HPP_
#define ROOTPROBE_ERRORS_HPP_

#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rootprobe {

// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// The answerer failed to produce a prediction. Transport failures of remote
// answerers are retryable; everything else is not.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what, bool retryable = false)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// A remote answerer returned a payload that violates the wire protocol.
class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class TargetNotFound : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Thread-safe collector for non-fatal warnings (skipped answers, dropped
// examples, ...).
class Diagnostics {
 public:
  void add(std::string message) {
    std::lock_guard<std::mutex> lock(mu_);
    messages_.push_back(std::move(message));
  }
  std::vector<std::string> messages() const {
    std::lock_guard<std::mutex> lock(mu_);
    return messages_;
  }
  bool empty() const {
    std::lock_guard<std::mutex> lock(mu_);
    return messages_.empty();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> messages_;
};

inline void note(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->add(std::move(message));
}

}  // namespace rootprobe

#endif  // ROOTPROBE_ERRORS_HPP_
