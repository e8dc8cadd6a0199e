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

// A full two-domain network in a temporary directory, with a settable clock
// and a handful of enrolled identities.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dbcabac/abac.hpp"
#include "dbcabac/contracts.hpp"
#include "dbcabac/domains.hpp"
#include "dbcabac/identity.hpp"

namespace testnet {

class TempDir {
 public:
  TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "dbcabac-XXXXXX").string();
    if (::mkdtemp(templ.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

struct AbacNetOptions {
  bool threaded = false;
  dbcabac::domains::Network::TransportKind transport = dbcabac::domains::Network::TransportKind::Loopback;
  std::uint16_t base_port = 7051;
  std::function<void(dbcabac::domains::NetworkConfig&)> tweak;
};

class AbacNet {
 public:
  using Credential = dbcabac::identity::Credential;
  using RoleClass = dbcabac::identity::RoleClass;
  using ContractId = dbcabac::ledger::ContractId;

  explicit AbacNet(AbacNetOptions options = {}) : AbacNet(std::make_shared<TempDir>(), options) {}

  AbacNet(std::shared_ptr<TempDir> dir, AbacNetOptions options) : dir_(std::move(dir)) {
    config_ = dbcabac::domains::NetworkConfig::reference(dir_->path() / "net", options.base_port);
    if (options.tweak) options.tweak(config_);
    dbcabac::domains::Network::Options net_options;
    net_options.threaded_ordering = options.threaded;
    net_options.transport = options.transport;
    net_options.clock = [this] { return clock_.load(); };
    net = std::make_unique<dbcabac::domains::Network>(config_, net_options);
    if (!net->ca("org1").is_registered("ladmin.domA")) {
      admin_a = enroll("org1", "ladmin.domA", RoleClass::LocalAdmin, "local-admin", "domA");
      admin_b = enroll("org2", "ladmin.domB", RoleClass::LocalAdmin, "local-admin", "domB");
      alice = enroll("org1", "alice", RoleClass::User, "user", "domA");
      carol = enroll("org1", "carol", RoleClass::User, "user", "domA");
      bob = enroll("org2", "bob", RoleClass::User, "user", "domB");
    }
  }

  ~AbacNet() { net.reset(); }
  AbacNet(const AbacNet&) = delete;
  AbacNet& operator=(const AbacNet&) = delete;

  Credential enroll(const std::string& org, const std::string& id, RoleClass role_class,
                    const std::string& role, const std::string& domain) {
    return net->register_and_enroll(org, id, role_class, {id, role, domain});
  }

  void set_time(dbcabac::abac::Timestamp t) { clock_.store(t); }
  dbcabac::abac::Timestamp time() const { return clock_.load(); }

  static dbcabac::abac::Policy policy_for(const Credential& who, const std::string& device,
                                          const std::string& domain, std::vector<std::string> owners = {},
                                          int read = 1, int write = 1, std::string ip = "0.0.0.0/0",
                                          dbcabac::abac::Timestamp start = 0,
                                          dbcabac::abac::Timestamp end = 4000000000) {
    dbcabac::abac::Policy p;
    p.sa = who.cert.attributes;
    p.oa.device_id = device;
    p.oa.domain_id = domain;
    if (owners.empty()) owners.push_back(who.cert.attributes.user_id);
    for (auto& o : owners) p.oa.add_owner(o);
    p.oa.data_type = "telemetry";
    p.pa.read = read;
    p.pa.write = write;
    p.ea = {std::move(ip), start, end};
    return p;
  }

  dbcabac::Document call(const Credential& who, ContractId contract, const std::string& fn,
                         const std::vector<dbcabac::Document>& args) {
    return net->call(who, contract, fn, args);
  }
  dbcabac::Document add(const Credential& admin, const dbcabac::abac::Policy& p) {
    return call(admin, ContractId::PolicyContract, "AddPolicy", {dbcabac::abac::to_document(p)});
  }
  dbcabac::Document check(const Credential& who, const std::string& device, const std::string& domain,
                          const std::string& ip = "10.1.2.3",
                          dbcabac::abac::Operation op = dbcabac::abac::Operation::Read) {
    dbcabac::contracts::AccessQuery q{{device, domain}, op, ip};
    return call(who, ContractId::AccessContract, "CheckAccess", {dbcabac::contracts::to_document(q)});
  }
  dbcabac::ledger::Proposal proposal(const Credential& who, ContractId contract, const std::string& fn,
                                     const std::vector<dbcabac::Document>& args) {
    return net->proposal(who, contract, fn, args);
  }
  dbcabac::ledger::Peer& peer(std::size_t i = 0) { return net->edges().at(i)->peer(); }

  const dbcabac::domains::NetworkConfig& config() const { return config_; }
  const std::shared_ptr<TempDir>& dir() const { return dir_; }

  Credential admin_a, admin_b, alice, carol, bob;
  std::unique_ptr<dbcabac::domains::Network> net;

 private:
  std::shared_ptr<TempDir> dir_;
  dbcabac::domains::NetworkConfig config_;
  std::atomic<dbcabac::abac::Timestamp> clock_{1000};
};

}  // namespace testnet
