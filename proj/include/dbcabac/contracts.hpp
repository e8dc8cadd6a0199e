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

// The two chaincodes. PolicyContract administers policies (PAP);
// AccessContract resolves caller attributes and decides requests (PIP + PDP)
// and writes an audit record for every decision.
//
// Every function runs inside ledger simulation. Caller attributes come only
// from the submitter's verified certificate.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dbcabac/abac.hpp"
#include "dbcabac/error.hpp"
#include "dbcabac/identity.hpp"
#include "dbcabac/ledger.hpp"

namespace dbcabac::contracts {

inline constexpr std::string_view kPolicyPrefix = "policy/";
inline constexpr std::string_view kAuditPrefix = "audit/";
inline constexpr std::string_view kDataPrefix = "data/";

// "policy/{domain_id}/{device_id}/{user_id}" from the policy's OA and SA.
std::string policy_key(const abac::Policy& policy);
std::string audit_key(std::string_view tx_id);
std::string data_key(std::string_view domain_id, std::string_view device_id,
                     std::string_view content_hash);

// Whether a user has been enrolled anywhere in the network.
class MemberDirectory {
 public:
  virtual ~MemberDirectory() = default;
  virtual bool is_enrolled(std::string_view user_id) const = 0;
};

struct Environment {
  std::shared_ptr<const identity::TrustStore> trust;
  std::shared_ptr<const MemberDirectory> members;
};

// --- selectors and argument documents ---

struct ByObject {
  std::string domain_id;
  std::string device_id;
};
struct BySubject {
  std::string user_id;
};
struct ByKey {
  std::string key;
};
using Selector = std::variant<ByObject, BySubject, ByKey>;

Document to_document(const Selector& selector);
Selector selector_from_document(const Document& doc);

struct AccessQuery {
  abac::ObjectRef object_ref;
  abac::Operation operation = abac::Operation::Read;
  std::string client_ip;
};

Document to_document(const AccessQuery& query);
// Throws Error(MalformedRequest), e.g. when the operation is missing.
AccessQuery access_query_from_document(const Document& doc);

struct AccessAuditRecord {
  std::string key;
  abac::AccessRequest request;
  abac::AccessDecision decision;
  abac::Timestamp decided_at = 0;
};

Document to_document(const AccessAuditRecord& record);
AccessAuditRecord audit_from_document(const Document& doc);

struct DataEntry {
  std::string device_id;
  std::string domain_id;
  std::string data_type;
  std::string content_hash;
  abac::Timestamp produced_at = 0;
};

Document to_document(const DataEntry& entry);
DataEntry data_entry_from_document(const Document& doc);

// --- envelopes ---

// {contract, function, args[]}
struct CallEnvelope {
  ledger::ContractId contract = ledger::ContractId::PolicyContract;
  std::string function;
  std::vector<std::string> args;
};

Document to_document(const CallEnvelope& call);
CallEnvelope call_from_document(const Document& doc);

// {status: "ok", payload} | {status: "error", error: {code, message}}
Document ok_envelope(const Document& payload);
Document error_envelope(const Error& error);

// --- chaincodes ---

class PolicyContract final : public ledger::Chaincode {
 public:
  explicit PolicyContract(Environment env) : env_(std::move(env)) {}
  bool has_function(std::string_view function) const override;
  std::string invoke(ledger::TxContext& ctx) override;

 private:
  Environment env_;
};

class AccessContract final : public ledger::Chaincode {
 public:
  explicit AccessContract(Environment env) : env_(std::move(env)) {}
  bool has_function(std::string_view function) const override;
  std::string invoke(ledger::TxContext& ctx) override;

 private:
  Environment env_;
};

std::shared_ptr<const ledger::ContractRegistry> make_registry(Environment env);

// --- shared helpers, usable from tests and the CLI ---

// Verifies the submitter certificate and the proposal signature.
// Throws Error(BadCertificate).
identity::IdentityCertificate authenticate(const ledger::TxContext& ctx, const identity::TrustStore& trust);

// QueryPolicy semantics over a context: selector match, expiry filtering
// with lazy tombstoning, key-sorted output.
std::vector<abac::KeyedPolicy> query_policies(ledger::TxContext& ctx, const Selector& selector);

}  // namespace dbcabac::contracts
