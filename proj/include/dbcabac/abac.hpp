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

// ABAC data model and policy matching. Pure values and pure functions; no
// ledger or I/O dependencies.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dbcabac/canonical.hpp"

namespace dbcabac::abac {

// UTC seconds. Window bounds are inclusive.
using Timestamp = std::int64_t;

using AttributeValue = std::variant<std::string, std::int64_t, bool>;

// A single name/value pairing. Names are case-sensitive and non-empty.
struct Attribute {
  std::string name;
  AttributeValue value;

  // Throws std::invalid_argument on an empty name.
  static Attribute make(std::string name, AttributeValue value);
  bool operator==(const Attribute&) const = default;
};

struct SubjectAttributes {
  std::string user_id;
  std::string role;
  std::string domain_id;

  bool operator==(const SubjectAttributes&) const = default;
};

struct ObjectAttributes {
  std::string device_id;
  std::string domain_id;
  // Kept sorted and duplicate-free.
  std::vector<std::string> owner_ids;
  std::string data_type;

  bool has_owner(std::string_view user_id) const;
  // Set insertion; returns false when the owner was already present.
  bool add_owner(const std::string& user_id);

  bool operator==(const ObjectAttributes&) const = default;
};

enum class Operation { Read, Write };

std::string_view to_string(Operation op) noexcept;
// Accepts "read"/"write" in any case.
std::optional<Operation> parse_operation(std::string_view text);

struct PermissionAttributes {
  std::uint8_t read = 1;
  std::uint8_t write = 1;

  bool allows(Operation op) const noexcept {
    return (op == Operation::Read ? read : write) == 1;
  }
  bool operator==(const PermissionAttributes&) const = default;
};

std::optional<std::uint32_t> parse_ipv4(std::string_view text);

// A v4 address or CIDR prefix. A bare address is a /32.
struct Ipv4Prefix {
  std::uint32_t network = 0;
  int length = 32;

  static std::optional<Ipv4Prefix> parse(std::string_view text);
  bool contains(std::uint32_t address) const noexcept;
};

struct EnvironmentAttributes {
  std::string allowed_ip;
  Timestamp start_time = 0;
  Timestamp end_time = 0;

  bool operator==(const EnvironmentAttributes&) const = default;
};

struct Policy {
  SubjectAttributes sa;
  ObjectAttributes oa;
  PermissionAttributes pa;
  EnvironmentAttributes ea;

  bool operator==(const Policy&) const = default;
};

struct ObjectRef {
  std::string device_id;
  std::string domain_id;

  bool operator==(const ObjectRef&) const = default;
};

struct AccessRequest {
  SubjectAttributes subject;
  ObjectRef object_ref;
  Operation operation = Operation::Read;
  std::string client_ip;
  Timestamp request_time = 0;

  bool operator==(const AccessRequest&) const = default;
};

enum class Verdict { Approve, Reject };

enum class Reason {
  Match,
  NoPolicy,
  SubjectMismatch,
  PermissionDenied,
  OutsideTimeWindow,
  IpNotAllowed,
  PolicyExpired,
};

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(Reason r) noexcept;
std::optional<Verdict> parse_verdict(std::string_view text);
std::optional<Reason> parse_reason(std::string_view text);

struct AccessDecision {
  Verdict verdict = Verdict::Reject;
  Reason reason = Reason::NoPolicy;
  std::optional<std::string> matched_policy_key;

  bool approved() const noexcept { return verdict == Verdict::Approve; }
  bool operator==(const AccessDecision&) const = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

// Checks a structurally parsed policy document against the fixed
// four-component schema. Reports every violation, not just the first.
ValidationResult validate_policy(const Document& doc);

// Throws dbcabac::Error(InvalidPolicy) listing the violations.
Policy policy_from_document(const Document& doc);
Document to_document(const Policy& policy);

Document to_document(const SubjectAttributes& sa);
Document to_document(const AccessRequest& request);
Document to_document(const AccessDecision& decision);
// Throw dbcabac::Error(MalformedRequest) on schema errors.
SubjectAttributes subject_from_document(const Document& doc);
AccessRequest request_from_document(const Document& doc);
AccessDecision decision_from_document(const Document& doc);

// Evaluates one policy. Checks run in a fixed order (object, subject,
// permission, time, ip) and the first failure names the reason. The subject
// clause passes when the requester is a listed owner or matches SA exactly.
AccessDecision match_policy(const AccessRequest& request, const Policy& policy,
                            std::string_view policy_key = {});

struct KeyedPolicy {
  std::string key;
  Policy policy;
};

// Permit-overrides over the candidates. The approving key reported is the
// lexicographically smallest one. When everything rejects, the reason comes
// from the candidate that got furthest through the check order.
AccessDecision select_decision(const AccessRequest& request,
                               std::span<const KeyedPolicy> candidates);

}  // namespace dbcabac::abac
