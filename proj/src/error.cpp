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

#include "dbcabac/error.hpp"

#include <array>
#include <utility>

namespace dbcabac {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 29> kNames{{
    {ErrorCode::InvalidPolicy, "InvalidPolicy"},
    {ErrorCode::PolicyExists, "PolicyExists"},
    {ErrorCode::Unauthorized, "Unauthorized"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::KeyMismatch, "KeyMismatch"},
    {ErrorCode::BadCertificate, "BadCertificate"},
    {ErrorCode::NotOwner, "NotOwner"},
    {ErrorCode::UnknownUser, "UnknownUser"},
    {ErrorCode::MalformedRequest, "MalformedRequest"},
    {ErrorCode::UnknownFunction, "UnknownFunction"},
    {ErrorCode::ContractError, "ContractError"},
    {ErrorCode::EndorsementMismatch, "EndorsementMismatch"},
    {ErrorCode::InsufficientEndorsements, "InsufficientEndorsements"},
    {ErrorCode::BrokenChain, "BrokenChain"},
    {ErrorCode::StateAccessOutsideSimulation, "StateAccessOutsideSimulation"},
    {ErrorCode::BadSecret, "BadSecret"},
    {ErrorCode::AlreadyRegistered, "AlreadyRegistered"},
    {ErrorCode::UnknownId, "UnknownId"},
    {ErrorCode::AccessRejected, "AccessRejected"},
    {ErrorCode::DataNotFound, "DataNotFound"},
    {ErrorCode::ForwardFailed, "ForwardFailed"},
    {ErrorCode::UnknownDomain, "UnknownDomain"},
    {ErrorCode::GrantNotFound, "GrantNotFound"},
    {ErrorCode::HashMismatch, "HashMismatch"},
    {ErrorCode::LedgerError, "LedgerError"},
    {ErrorCode::FixtureError, "FixtureError"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::PortInUse, "PortInUse"},
    {ErrorCode::NetworkError, "NetworkError"},
}};

}  // namespace

std::string_view error_code_name(ErrorCode code) noexcept {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

ErrorCode error_code_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  throw std::invalid_argument("unknown error code: " + std::string(name));
}

}  // namespace dbcabac
