/*
 * Copyright 2026 The alk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace alk {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { Config = 1, Numerical = 2, Invariant = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Invalid input: malformed configuration, bad parameters, missing files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Numerical failure: diverged power flow, singular matrices, failed fits.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Raised by an expensive evaluator when a sample cannot be evaluated.
class EvaluationError : public NumericalError {
 public:
  explicit EvaluationError(const std::string& what) : NumericalError(what) {}
};

/// Internal invariant violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ErrorKind::Invariant, what) {}
};

#define ALK_REQUIRE(cond, msg)                     \
  do {                                             \
    if (!(cond)) throw ::alk::ConfigError(msg);    \
  } while (0)

}  // namespace alk
