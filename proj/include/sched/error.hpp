// Copyright 2026 The sched-decode Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sched {

// Root of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument (step, progress, index) lies outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Input data violates a documented precondition (e.g. mask tokens in a clean
// sequence).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Two cooperating pieces of data disagree (missing margin for a region
// position, mismatched lengths, empty transfer set).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidVocabularyError : public Error {
 public:
  using Error::Error;
};

class InvalidDistributionError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  enum class Kind { kOrdering, kSlope };
  ScheduleError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Anything that goes wrong while obtaining logits from a provider.
class ProviderError : public Error {
 public:
  using Error::Error;
};

// I/O failure talking to an external provider, or an explicit error message
// sent by the server.
class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// The peer sent something that is not a valid protocol message.
class ProtocolError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

}  // namespace sched
