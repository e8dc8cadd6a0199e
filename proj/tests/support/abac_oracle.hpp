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

// Brute-force truth-table oracle for single-policy ABAC decisions. Written
// independently of the engine: every predicate is evaluated up front, then the
// decision is read off a table. IPv4 containment is checked on dotted-quad
// text expanded to 32-character bit strings.

#include <bitset>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dbcabac/abac.hpp"

namespace oracle {

inline std::string bits_of(const std::string& dotted) {
  std::stringstream ss(dotted);
  std::string part, bits;
  while (std::getline(ss, part, '.')) bits += std::bitset<8>(std::stoul(part)).to_string();
  return bits;
}

inline bool ip_in(const std::string& client, const std::string& allowed) {
  auto slash = allowed.find('/');
  std::string base = allowed.substr(0, slash);
  std::size_t len = slash == std::string::npos ? 32 : std::stoul(allowed.substr(slash + 1));
  return bits_of(client).substr(0, len) == bits_of(base).substr(0, len);
}

struct Row {
  bool object_ok, subject_ok, perm_ok, not_early, not_late, ip_ok;
};

inline dbcabac::abac::AccessDecision decide(const dbcabac::abac::AccessRequest& r,
                                            const dbcabac::abac::Policy& p,
                                            const std::string& key) {
  using namespace dbcabac::abac;
  bool owner = false;
  for (const auto& o : p.oa.owner_ids) owner = owner || (o == r.subject.user_id);
  bool exact = r.subject.user_id == p.sa.user_id && r.subject.role == p.sa.role &&
               r.subject.domain_id == p.sa.domain_id;
  Row row{
      r.object_ref.device_id == p.oa.device_id && r.object_ref.domain_id == p.oa.domain_id,
      owner || exact,
      r.operation == Operation::Read ? p.pa.read == 1 : p.pa.write == 1,
      !(r.request_time < p.ea.start_time),
      !(r.request_time > p.ea.end_time),
      ip_in(r.client_ip, p.ea.allowed_ip),
  };
  // Table: the first false column determines the reason.
  const bool cols[] = {row.object_ok, row.subject_ok, row.perm_ok,
                       row.not_early, row.not_late, row.ip_ok};
  const Reason reasons[] = {Reason::NoPolicy, Reason::SubjectMismatch,
                            Reason::PermissionDenied, Reason::OutsideTimeWindow,
                            Reason::PolicyExpired, Reason::IpNotAllowed};
  for (int i = 0; i < 6; ++i) {
    if (!cols[i]) return {Verdict::Reject, reasons[i], std::nullopt};
  }
  return {Verdict::Approve, Reason::Match, key};
}

// The exhaustive small universe: 3 users x 2 roles x 2 domains, 2 devices,
// 2 ops, 3 time points, 2 client ips.
struct Universe {
  std::vector<dbcabac::abac::AccessRequest> requests;
  std::vector<dbcabac::abac::Policy> policies;
};

inline Universe small_universe() {
  using namespace dbcabac::abac;
  const std::vector<std::string> users{"user1", "user2", "user3"};
  const std::vector<std::string> roles{"doctor", "nurse"};
  const std::vector<std::string> domains{"domA", "domB"};
  const std::vector<std::string> devices{"d1", "d2"};
  const std::vector<Timestamp> times{99, 200, 201};
  const std::vector<std::string> ips{"10.1.2.3", "192.168.1.5"};
  Universe u;
  std::vector<SubjectAttributes> subjects;
  for (const auto& user : users)
    for (const auto& role : roles)
      for (const auto& dom : domains) subjects.push_back({user, role, dom});

  for (const auto& s : subjects)
    for (const auto& dev : devices)
      for (const auto& dom : domains)
        for (auto op : {Operation::Read, Operation::Write})
          for (auto t : times)
            for (const auto& ip : ips) u.requests.push_back({s, {dev, dom}, op, ip, t});

  for (const auto& sa : subjects)
    for (unsigned owners = 1; owners < 8; ++owners)
      for (const auto& dev : devices)
        for (const auto& dom : domains)
          for (std::uint8_t read : {0, 1})
            for (std::uint8_t write : {0, 1}) {
              Policy p;
              p.sa = sa;
              p.oa.device_id = dev;
              p.oa.domain_id = dom;
              p.oa.data_type = "temperature";
              for (unsigned i = 0; i < 3; ++i)
                if (owners & (1u << i)) p.oa.add_owner(users[i]);
              p.pa = {read, write};
              p.ea = {"10.0.0.0/8", 100, 200};
              u.policies.push_back(std::move(p));
            }
  return u;
}

}  // namespace oracle
