// Copyright 2026 The dbcabac Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dbcabac {

// Error codes are part of the result-envelope wire format; names are stable.
enum class ErrorCode {
  InvalidPolicy,
  PolicyExists,
  Unauthorized,
  NotFound,
  KeyMismatch,
  BadCertificate,
  NotOwner,
  UnknownUser,
  MalformedRequest,
  UnknownFunction,
  ContractError,
  EndorsementMismatch,
  InsufficientEndorsements,
  BrokenChain,
  StateAccessOutsideSimulation,
  BadSecret,
  AlreadyRegistered,
  UnknownId,
  AccessRejected,
  DataNotFound,
  ForwardFailed,
  UnknownDomain,
  GrantNotFound,
  HashMismatch,
  LedgerError,
  FixtureError,
  ConfigError,
  PortInUse,
  NetworkError,
};

std::string_view error_code_name(ErrorCode code) noexcept;
// Throws std::invalid_argument for unknown names.
ErrorCode error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace dbcabac
