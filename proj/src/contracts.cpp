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

#include "dbcabac/contracts.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbcabac::contracts {
namespace {

using identity::RoleClass;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedRequest, what); }

Document arg_doc(const ledger::TxContext& ctx, std::size_t i) {
  if (i >= ctx.args().size()) malformed("missing argument " + std::to_string(i));
  try {
    return parse_document(ctx.args()[i]);
  } catch (const std::invalid_argument& e) {
    malformed(e.what());
  }
}

std::string arg_string(const ledger::TxContext& ctx, std::size_t i) {
  auto doc = arg_doc(ctx, i);
  if (!doc.is_string()) malformed("argument " + std::to_string(i) + " must be a string");
  return doc.get<std::string>();
}

std::string str_field(const Document& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) malformed(std::string("missing field ") + field);
  return it->get<std::string>();
}

abac::Policy decode_stored(const std::string& bytes) {
  return abac::policy_from_document(parse_document(bytes));
}

void require_local_admin(const identity::IdentityCertificate& caller, std::string_view domain_id) {
  if (caller.role_class != RoleClass::LocalAdmin || caller.attributes.domain_id != domain_id) {
    throw Error(ErrorCode::Unauthorized,
                caller.subject_id + " is not the local admin of " + std::string(domain_id));
  }
}

void check_key_components(const abac::Policy& p) {
  for (const auto* part : {&p.oa.domain_id, &p.oa.device_id, &p.sa.user_id}) {
    if (part->find('/') != std::string::npos) {
      throw Error(ErrorCode::InvalidPolicy, "key component '" + *part + "' contains '/'");
    }
  }
}

abac::Policy policy_arg(const ledger::TxContext& ctx, std::size_t i) {
  return abac::policy_from_document(arg_doc(ctx, i));
}

std::string encode_policy(const abac::Policy& p) { return canonical(abac::to_document(p)); }

Document keyed_list(const std::vector<abac::KeyedPolicy>& list) {
  Document out = Document::array();
  for (const auto& kp : list) out.push_back({{"key", kp.key}, {"policy", abac::to_document(kp.policy)}});
  return out;
}

bool expired(const abac::Policy& p, abac::Timestamp now) { return p.ea.end_time < now; }

}  // namespace

std::string policy_key(const abac::Policy& p) {
  return std::string(kPolicyPrefix) + p.oa.domain_id + "/" + p.oa.device_id + "/" + p.sa.user_id;
}

std::string audit_key(std::string_view tx_id) { return std::string(kAuditPrefix) + std::string(tx_id); }

std::string data_key(std::string_view domain_id, std::string_view device_id, std::string_view content_hash) {
  return std::string(kDataPrefix) + std::string(domain_id) + "/" + std::string(device_id) + "/" +
         std::string(content_hash);
}

Document to_document(const Selector& selector) {
  return std::visit(
      [](const auto& s) -> Document {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ByObject>) {
          return {{"by", "object"}, {"domain_id", s.domain_id}, {"device_id", s.device_id}};
        } else if constexpr (std::is_same_v<T, BySubject>) {
          return {{"by", "subject"}, {"user_id", s.user_id}};
        } else {
          return {{"by", "key"}, {"key", s.key}};
        }
      },
      selector);
}

Selector selector_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("selector must be an object");
  auto by = str_field(doc, "by");
  if (by == "object") return ByObject{str_field(doc, "domain_id"), str_field(doc, "device_id")};
  if (by == "subject") return BySubject{str_field(doc, "user_id")};
  if (by == "key") return ByKey{str_field(doc, "key")};
  malformed("unknown selector '" + by + "'");
}

Document to_document(const AccessQuery& q) {
  return {{"object_ref", {{"device_id", q.object_ref.device_id}, {"domain_id", q.object_ref.domain_id}}},
          {"operation", abac::to_string(q.operation)},
          {"client_ip", q.client_ip}};
}

AccessQuery access_query_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("request must be an object");
  auto ref = doc.find("object_ref");
  if (ref == doc.end() || !ref->is_object()) malformed("missing field object_ref");
  AccessQuery q;
  q.object_ref = {str_field(*ref, "device_id"), str_field(*ref, "domain_id")};
  auto op = abac::parse_operation(str_field(doc, "operation"));
  if (!op) malformed("operation must be read or write");
  q.operation = *op;
  q.client_ip = str_field(doc, "client_ip");
  return q;
}

Document to_document(const AccessAuditRecord& r) {
  return {{"key", r.key},
          {"request", abac::to_document(r.request)},
          {"decision", abac::to_document(r.decision)},
          {"decided_at", r.decided_at}};
}

AccessAuditRecord audit_from_document(const Document& doc) {
  if (!doc.is_object() || !doc.contains("request") || !doc.contains("decision")) malformed("bad audit record");
  return {str_field(doc, "key"), abac::request_from_document(doc["request"]),
          abac::decision_from_document(doc["decision"]), doc.value("decided_at", abac::Timestamp{0})};
}

Document to_document(const DataEntry& e) {
  return {{"device_id", e.device_id},     {"domain_id", e.domain_id},
          {"data_type", e.data_type},     {"content_hash", e.content_hash},
          {"produced_at", e.produced_at}};
}

DataEntry data_entry_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("data entry must be an object");
  auto at = doc.find("produced_at");
  if (at == doc.end() || !at->is_number_integer()) malformed("missing field produced_at");
  return {str_field(doc, "device_id"), str_field(doc, "domain_id"), str_field(doc, "data_type"),
          str_field(doc, "content_hash"), at->get<abac::Timestamp>()};
}

Document to_document(const CallEnvelope& call) {
  return {{"contract", ledger::to_string(call.contract)}, {"function", call.function}, {"args", call.args}};
}

CallEnvelope call_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("call envelope must be an object");
  auto contract = ledger::parse_contract(str_field(doc, "contract"));
  if (!contract) malformed("unknown contract");
  CallEnvelope call{*contract, str_field(doc, "function"), {}};
  auto args = doc.find("args");
  if (args == doc.end() || !args->is_array()) malformed("missing field args");
  for (const auto& a : *args) {
    if (!a.is_string()) malformed("args must be canonical document strings");
    call.args.push_back(a.get<std::string>());
  }
  return call;
}

Document ok_envelope(const Document& payload) { return {{"status", "ok"}, {"payload", payload}}; }

Document error_envelope(const Error& error) {
  return {{"status", "error"},
          {"error", {{"code", error_code_name(error.code())}, {"message", error.detail()}}}};
}

identity::IdentityCertificate authenticate(const ledger::TxContext& ctx, const identity::TrustStore& trust) {
  identity::IdentityCertificate cert;
  try {
    cert = identity::certificate_from_document(parse_document(ctx.proposal().submitter));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::BadCertificate, e.what());
  }
  auto result = identity::verify(cert, trust);
  if (!result.ok()) throw Error(ErrorCode::BadCertificate, std::string(identity::to_string(*result.failure)));
  auto sig = crypto::array_from_hex<crypto::kSignatureSize>(ctx.proposal().creator_signature);
  if (!sig || !crypto::verify(cert.public_key, ctx.tx_id(), *sig)) {
    throw Error(ErrorCode::BadCertificate, "proposal signature does not match certificate");
  }
  return cert;
}

std::vector<abac::KeyedPolicy> query_policies(ledger::TxContext& ctx, const Selector& selector) {
  std::vector<std::pair<std::string, std::string>> raw;
  if (const auto* by_key = std::get_if<ByKey>(&selector)) {
    if (auto v = ctx.get_state(by_key->key); v && by_key->key.starts_with(kPolicyPrefix)) {
      raw.emplace_back(by_key->key, *v);
    }
  } else if (const auto* by_object = std::get_if<ByObject>(&selector)) {
    raw = ctx.scan_prefix(std::string(kPolicyPrefix) + by_object->domain_id + "/" + by_object->device_id + "/");
  } else {
    raw = ctx.scan_prefix(std::string(kPolicyPrefix));
  }

  std::vector<abac::KeyedPolicy> out;
  for (auto& [key, bytes] : raw) {
    auto policy = decode_stored(bytes);
    if (expired(policy, ctx.timestamp())) {
      ctx.delete_state(key);
      continue;
    }
    if (const auto* by_subject = std::get_if<BySubject>(&selector)) {
      if (policy.sa.user_id != by_subject->user_id && !policy.oa.has_owner(by_subject->user_id)) continue;
    }
    out.push_back({key, std::move(policy)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

// --- PolicyContract ---

bool PolicyContract::has_function(std::string_view f) const {
  return f == "ValidatePolicy" || f == "AddPolicy" || f == "UpdatePolicy" || f == "DeletePolicy" ||
         f == "QueryPolicy" || f == "SweepExpired";
}

std::string PolicyContract::invoke(ledger::TxContext& ctx) {
  const auto& fn = ctx.proposal().function;

  if (fn == "ValidatePolicy") {
    auto result = abac::validate_policy(arg_doc(ctx, 0));
    return canonical({{"ok", result.ok()}, {"violations", result.violations}});
  }

  const auto caller = authenticate(ctx, *env_.trust);

  if (fn == "AddPolicy") {
    auto policy = policy_arg(ctx, 0);
    check_key_components(policy);
    require_local_admin(caller, policy.oa.domain_id);
    auto key = policy_key(policy);
    if (ctx.get_state(key)) throw Error(ErrorCode::PolicyExists, key);
    ctx.put_state(key, encode_policy(policy));
    return canonical(Document(key));
  }

  if (fn == "UpdatePolicy") {
    auto key = arg_string(ctx, 0);
    auto policy = policy_arg(ctx, 1);
    auto existing = ctx.get_state(key);
    if (!existing) throw Error(ErrorCode::NotFound, key);
    require_local_admin(caller, decode_stored(*existing).oa.domain_id);
    if (policy_key(policy) != key) {
      throw Error(ErrorCode::KeyMismatch, "policy derives key " + policy_key(policy) + ", not " + key);
    }
    ctx.put_state(key, encode_policy(policy));
    return canonical(Document("ok"));
  }

  if (fn == "DeletePolicy") {
    auto key = arg_string(ctx, 0);
    auto existing = ctx.get_state(key);
    if (!existing || !key.starts_with(kPolicyPrefix)) throw Error(ErrorCode::NotFound, key);
    require_local_admin(caller, decode_stored(*existing).oa.domain_id);
    ctx.delete_state(key);
    return canonical(Document("ok"));
  }

  if (fn == "QueryPolicy") {
    return canonical(keyed_list(query_policies(ctx, selector_from_document(arg_doc(ctx, 0)))));
  }

  // SweepExpired: admin-invoked removal of expired policies in the caller's domain.
  if (caller.role_class != RoleClass::LocalAdmin) throw Error(ErrorCode::Unauthorized, "local admin only");
  Document removed = Document::array();
  const auto prefix = std::string(kPolicyPrefix) + caller.attributes.domain_id + "/";
  for (const auto& [key, bytes] : ctx.scan_prefix(prefix)) {
    if (expired(decode_stored(bytes), ctx.timestamp())) {
      ctx.delete_state(key);
      removed.push_back(key);
    }
  }
  return canonical(removed);
}

// --- AccessContract ---

bool AccessContract::has_function(std::string_view f) const {
  return f == "GetAtts" || f == "CheckAccess" || f == "DelegateAccess" || f == "RecordData";
}

namespace {

abac::AccessRequest get_atts(const identity::IdentityCertificate& caller, const AccessQuery& q,
                             abac::Timestamp now) {
  return {caller.attributes, q.object_ref, q.operation, q.client_ip, now};
}

}  // namespace

std::string AccessContract::invoke(ledger::TxContext& ctx) {
  const auto& fn = ctx.proposal().function;
  const auto caller = authenticate(ctx, *env_.trust);

  if (fn == "GetAtts") {
    auto query = access_query_from_document(arg_doc(ctx, 0));
    return canonical(abac::to_document(get_atts(caller, query, ctx.timestamp())));
  }

  if (fn == "CheckAccess") {
    auto query = access_query_from_document(arg_doc(ctx, 0));
    auto request = get_atts(caller, query, ctx.timestamp());
    auto candidates = query_policies(ctx, ByObject{query.object_ref.domain_id, query.object_ref.device_id});
    auto decision = abac::select_decision(request, candidates);
    AccessAuditRecord record{audit_key(ctx.tx_id()), request, decision, ctx.timestamp()};
    ctx.put_state(record.key, canonical(to_document(record)));
    auto out = abac::to_document(decision);
    out["audit_key"] = record.key;
    return canonical(out);
  }

  if (fn == "DelegateAccess") {
    auto key = arg_string(ctx, 0);
    auto new_owner = arg_string(ctx, 1);
    auto existing = ctx.get_state(key);
    if (!existing || !key.starts_with(kPolicyPrefix)) throw Error(ErrorCode::NotFound, key);
    auto policy = decode_stored(*existing);
    if (!policy.oa.has_owner(caller.attributes.user_id)) {
      throw Error(ErrorCode::NotOwner, caller.attributes.user_id + " does not own " + key);
    }
    if (new_owner.empty() || !env_.members || !env_.members->is_enrolled(new_owner)) {
      throw Error(ErrorCode::UnknownUser, new_owner);
    }
    if (policy.oa.add_owner(new_owner)) ctx.put_state(key, encode_policy(policy));
    return canonical(Document("ok"));
  }

  // RecordData: a gateway anchors the content hash of an ingested payload.
  auto entry = data_entry_from_document(arg_doc(ctx, 0));
  if (caller.role_class != RoleClass::Peer || caller.attributes.domain_id != entry.domain_id) {
    throw Error(ErrorCode::Unauthorized, caller.subject_id + " is not a gateway of " + entry.domain_id);
  }
  if (entry.content_hash.size() != crypto::kHashSize * 2 || !crypto::from_hex(entry.content_hash)) {
    malformed("content_hash must be a hex SHA-256 digest");
  }
  for (const auto* part : {&entry.domain_id, &entry.device_id}) {
    if (part->empty() || part->find('/') != std::string::npos) malformed("bad key component '" + *part + "'");
  }
  auto key = data_key(entry.domain_id, entry.device_id, entry.content_hash);
  ctx.put_state(key, canonical(to_document(entry)));
  return canonical(Document(key));
}

std::shared_ptr<const ledger::ContractRegistry> make_registry(Environment env) {
  auto registry = std::make_shared<ledger::ContractRegistry>();
  (*registry)[ledger::ContractId::PolicyContract] = std::make_shared<PolicyContract>(env);
  (*registry)[ledger::ContractId::AccessContract] = std::make_shared<AccessContract>(env);
  return registry;
}

}  // namespace dbcabac::contracts
