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

#include "dbcabac/abac.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <stdexcept>

#include "dbcabac/error.hpp"

namespace dbcabac::abac {
namespace {

using Violations = std::vector<std::string>;

void check_string(const Document& obj, std::string_view group, const char* field,
                  Violations& out) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    out.push_back("missing " + std::string(group) + "." + field);
  } else if (!it->is_string()) {
    out.push_back(std::string(group) + "." + field + " must be a string");
  } else if (it->get_ref<const std::string&>().empty()) {
    out.push_back(std::string(group) + "." + field + " must be non-empty");
  }
}

void check_keys(const Document& obj, std::string_view group,
                std::initializer_list<std::string_view> allowed, Violations& out) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      out.push_back("unexpected field " + std::string(group) + "." + key);
    }
  }
}

void check_bit(const Document& pa, const char* field, Violations& out) {
  auto it = pa.find(field);
  if (it == pa.end()) {
    out.push_back(std::string("missing PA.") + field);
  } else if (!it->is_number_integer()) {
    out.push_back(std::string("PA.") + field + " must be an integer bit");
  } else {
    auto v = it->get<std::int64_t>();
    if (v != 0 && v != 1) out.push_back(std::string("PA bit out of range: ") + field);
  }
}

// Upper-case group names ("SA") are used in violation messages.
const Document* group(const Document& doc, const char* key, const char* label,
                      Violations& out) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    out.push_back(std::string("missing ") + label);
    return nullptr;
  }
  if (!it->is_object()) {
    out.push_back(std::string(label) + " must be an object");
    return nullptr;
  }
  return &*it;
}

int progress(Reason r) {
  switch (r) {
    case Reason::NoPolicy: return 0;
    case Reason::SubjectMismatch: return 1;
    case Reason::PermissionDenied: return 2;
    case Reason::OutsideTimeWindow:
    case Reason::PolicyExpired: return 3;
    case Reason::IpNotAllowed: return 4;
    case Reason::Match: return 5;
  }
  return 0;
}

AccessDecision reject(Reason r) { return {Verdict::Reject, r, std::nullopt}; }

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedRequest, what);
}

std::string required_string(const Document& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) malformed(std::string("missing field ") + field);
  return it->get<std::string>();
}

}  // namespace

Attribute Attribute::make(std::string name, AttributeValue value) {
  if (name.empty()) throw std::invalid_argument("attribute name must be non-empty");
  return {std::move(name), std::move(value)};
}

bool ObjectAttributes::has_owner(std::string_view user_id) const {
  return std::binary_search(owner_ids.begin(), owner_ids.end(), user_id);
}

bool ObjectAttributes::add_owner(const std::string& user_id) {
  auto it = std::lower_bound(owner_ids.begin(), owner_ids.end(), user_id);
  if (it != owner_ids.end() && *it == user_id) return false;
  owner_ids.insert(it, user_id);
  return true;
}

std::string_view to_string(Operation op) noexcept {
  return op == Operation::Read ? "read" : "write";
}

std::optional<Operation> parse_operation(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "read") return Operation::Read;
  if (lower == "write") return Operation::Write;
  return std::nullopt;
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t addr = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || value > 255 || next - p > 3) return std::nullopt;
    // No leading zeros ("01"), which some parsers read as octal.
    if (next - p > 1 && *p == '0') return std::nullopt;
    addr = (addr << 8) | value;
    p = next;
  }
  if (p != end) return std::nullopt;
  return addr;
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view text) {
  auto slash = text.find('/');
  auto addr = parse_ipv4(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int length = 32;
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    if (digits.empty() || digits.size() > 2) return std::nullopt;
    auto [next, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
    if (ec != std::errc{} || next != digits.data() + digits.size()) return std::nullopt;
    if (length < 0 || length > 32) return std::nullopt;
  }
  std::uint32_t mask = length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  return Ipv4Prefix{*addr & mask, length};
}

bool Ipv4Prefix::contains(std::uint32_t address) const noexcept {
  std::uint32_t mask = length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  return (address & mask) == network;
}

namespace {
constexpr std::array<std::string_view, 7> kReasonNames{
    "Match", "NoPolicy", "SubjectMismatch", "PermissionDenied",
    "OutsideTimeWindow", "IpNotAllowed", "PolicyExpired"};
}

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::Approve ? "approve" : "reject";
}

std::string_view to_string(Reason r) noexcept {
  return kReasonNames[static_cast<std::size_t>(r)];
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "approve") return Verdict::Approve;
  if (text == "reject") return Verdict::Reject;
  return std::nullopt;
}

std::optional<Reason> parse_reason(std::string_view text) {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
    if (kReasonNames[i] == text) return static_cast<Reason>(i);
  }
  return std::nullopt;
}

ValidationResult validate_policy(const Document& doc) {
  ValidationResult result;
  auto& out = result.violations;
  if (!doc.is_object()) {
    out.push_back("policy must be an object");
    return result;
  }
  check_keys(doc, "policy", {"sa", "oa", "pa", "ea"}, out);

  if (const auto* sa = group(doc, "sa", "SA", out)) {
    check_keys(*sa, "SA", {"user_id", "role", "domain_id"}, out);
    for (const char* f : {"user_id", "role", "domain_id"}) check_string(*sa, "SA", f, out);
  }

  if (const auto* oa = group(doc, "oa", "OA", out)) {
    check_keys(*oa, "OA", {"device_id", "domain_id", "owner_ids", "data_type"}, out);
    for (const char* f : {"device_id", "domain_id", "data_type"}) check_string(*oa, "OA", f, out);
    auto it = oa->find("owner_ids");
    if (it == oa->end()) {
      out.push_back("missing OA.owner_ids");
    } else if (!it->is_array()) {
      out.push_back("OA.owner_ids must be an array");
    } else if (it->empty()) {
      out.push_back("OA.owner_ids must be non-empty");
    } else {
      std::vector<std::string> seen;
      bool bad_entry = false;
      for (const auto& owner : *it) {
        if (!owner.is_string() || owner.get_ref<const std::string&>().empty()) {
          bad_entry = true;
          continue;
        }
        seen.push_back(owner.get<std::string>());
      }
      if (bad_entry) out.push_back("OA.owner_ids entries must be non-empty strings");
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        out.push_back("OA.owner_ids contains duplicates");
      }
    }
  }

  if (const auto* pa = group(doc, "pa", "PA", out)) {
    check_keys(*pa, "PA", {"read", "write"}, out);
    check_bit(*pa, "read", out);
    check_bit(*pa, "write", out);
  }

  if (const auto* ea = group(doc, "ea", "EA", out)) {
    check_keys(*ea, "EA", {"allowed_ip", "start_time", "end_time"}, out);
    auto ip = ea->find("allowed_ip");
    if (ip == ea->end()) {
      out.push_back("missing EA.allowed_ip");
    } else if (!ip->is_string() || !Ipv4Prefix::parse(ip->get<std::string>())) {
      out.push_back("EA.allowed_ip must be a v4 address or CIDR prefix");
    }
    bool times_ok = true;
    for (const char* f : {"start_time", "end_time"}) {
      auto t = ea->find(f);
      if (t == ea->end()) {
        out.push_back(std::string("missing EA.") + f);
        times_ok = false;
      } else if (!t->is_number_integer()) {
        out.push_back(std::string("EA.") + f + " must be an integer timestamp");
        times_ok = false;
      }
    }
    if (times_ok && (*ea)["start_time"].get<std::int64_t>() > (*ea)["end_time"].get<std::int64_t>()) {
      out.push_back("EA.start_time is after EA.end_time");
    }
  }
  return result;
}

Policy policy_from_document(const Document& doc) {
  auto validation = validate_policy(doc);
  if (!validation.ok()) {
    std::string joined;
    for (const auto& v : validation.violations) {
      if (!joined.empty()) joined += "; ";
      joined += v;
    }
    throw Error(ErrorCode::InvalidPolicy, joined);
  }
  Policy p;
  const auto& sa = doc["sa"];
  p.sa = {sa["user_id"], sa["role"], sa["domain_id"]};
  const auto& oa = doc["oa"];
  p.oa.device_id = oa["device_id"];
  p.oa.domain_id = oa["domain_id"];
  p.oa.data_type = oa["data_type"];
  for (const auto& owner : oa["owner_ids"]) p.oa.add_owner(owner.get<std::string>());
  p.pa.read = static_cast<std::uint8_t>(doc["pa"]["read"].get<int>());
  p.pa.write = static_cast<std::uint8_t>(doc["pa"]["write"].get<int>());
  const auto& ea = doc["ea"];
  p.ea = {ea["allowed_ip"], ea["start_time"], ea["end_time"]};
  return p;
}

Document to_document(const SubjectAttributes& sa) {
  return {{"user_id", sa.user_id}, {"role", sa.role}, {"domain_id", sa.domain_id}};
}

Document to_document(const Policy& p) {
  Document doc;
  doc["sa"] = to_document(p.sa);
  doc["oa"] = {{"device_id", p.oa.device_id},
               {"domain_id", p.oa.domain_id},
               {"owner_ids", p.oa.owner_ids},
               {"data_type", p.oa.data_type}};
  doc["pa"] = {{"read", p.pa.read}, {"write", p.pa.write}};
  doc["ea"] = {{"allowed_ip", p.ea.allowed_ip},
               {"start_time", p.ea.start_time},
               {"end_time", p.ea.end_time}};
  return doc;
}

Document to_document(const AccessRequest& r) {
  return {{"subject", to_document(r.subject)},
          {"object_ref", {{"device_id", r.object_ref.device_id},
                          {"domain_id", r.object_ref.domain_id}}},
          {"operation", to_string(r.operation)},
          {"client_ip", r.client_ip},
          {"request_time", r.request_time}};
}

Document to_document(const AccessDecision& d) {
  Document doc{{"verdict", to_string(d.verdict)}, {"reason", to_string(d.reason)}};
  doc["matched_policy_key"] =
      d.matched_policy_key ? Document(*d.matched_policy_key) : Document(nullptr);
  return doc;
}

SubjectAttributes subject_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("subject must be an object");
  SubjectAttributes sa{required_string(doc, "user_id"), required_string(doc, "role"),
                       required_string(doc, "domain_id")};
  if (sa.user_id.empty() || sa.role.empty() || sa.domain_id.empty()) {
    malformed("subject fields must be non-empty");
  }
  return sa;
}

AccessRequest request_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("request must be an object");
  AccessRequest r;
  if (!doc.contains("subject")) malformed("missing field subject");
  r.subject = subject_from_document(doc["subject"]);
  if (!doc.contains("object_ref") || !doc["object_ref"].is_object()) {
    malformed("missing field object_ref");
  }
  r.object_ref = {required_string(doc["object_ref"], "device_id"),
                  required_string(doc["object_ref"], "domain_id")};
  auto op = parse_operation(required_string(doc, "operation"));
  if (!op) malformed("operation must be read or write");
  r.operation = *op;
  r.client_ip = required_string(doc, "client_ip");
  if (!doc.contains("request_time") || !doc["request_time"].is_number_integer()) {
    malformed("missing field request_time");
  }
  r.request_time = doc["request_time"];
  return r;
}

AccessDecision decision_from_document(const Document& doc) {
  if (!doc.is_object()) malformed("decision must be an object");
  auto verdict = parse_verdict(required_string(doc, "verdict"));
  auto reason = parse_reason(required_string(doc, "reason"));
  if (!verdict || !reason) malformed("unknown verdict or reason");
  AccessDecision d{*verdict, *reason, std::nullopt};
  if (auto it = doc.find("matched_policy_key"); it != doc.end() && it->is_string()) {
    d.matched_policy_key = it->get<std::string>();
  }
  return d;
}

AccessDecision match_policy(const AccessRequest& request, const Policy& policy,
                            std::string_view policy_key) {
  if (request.object_ref.device_id != policy.oa.device_id ||
      request.object_ref.domain_id != policy.oa.domain_id) {
    return reject(Reason::NoPolicy);
  }
  if (!policy.oa.has_owner(request.subject.user_id) && request.subject != policy.sa) {
    return reject(Reason::SubjectMismatch);
  }
  if (!policy.pa.allows(request.operation)) return reject(Reason::PermissionDenied);
  if (request.request_time < policy.ea.start_time) return reject(Reason::OutsideTimeWindow);
  if (request.request_time > policy.ea.end_time) return reject(Reason::PolicyExpired);
  auto allowed = Ipv4Prefix::parse(policy.ea.allowed_ip);
  auto client = parse_ipv4(request.client_ip);
  if (!allowed || !client || !allowed->contains(*client)) return reject(Reason::IpNotAllowed);
  return {Verdict::Approve, Reason::Match, std::string(policy_key)};
}

AccessDecision select_decision(const AccessRequest& request,
                               std::span<const KeyedPolicy> candidates) {
  std::vector<const KeyedPolicy*> ordered;
  ordered.reserve(candidates.size());
  for (const auto& c : candidates) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const KeyedPolicy* a, const KeyedPolicy* b) { return a->key < b->key; });

  AccessDecision best = reject(Reason::NoPolicy);
  int best_progress = -1;
  for (const auto* c : ordered) {
    auto d = match_policy(request, c->policy, c->key);
    if (d.approved()) return d;
    // Strictly greater keeps the smallest key among equally-far rejections.
    if (progress(d.reason) > best_progress) {
      best = d;
      best_progress = progress(d.reason);
    }
  }
  return best;
}

}  // namespace dbcabac::abac
