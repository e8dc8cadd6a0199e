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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "dbcabac/abac.hpp"
#include "dbcabac/canonical.hpp"
#include "dbcabac/error.hpp"
#include "support/abac_net.hpp"
#include "support/ports.hpp"

namespace {

namespace fs = std::filesystem;
using dbcabac::ErrorCode;
using dbcabac::cli::run_cli;
using testnet::AbacNet;

struct Outcome {
  int rc;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int rc = run_cli(args, out, err);
  return {rc, out.str(), err.str()};
}

// Runs the installed binary; needed where the CLI forks a daemon.
Outcome tool(const std::string& args) {
  std::string cmd = std::string(DBCABAC_TOOL) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 512> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, ""};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(CliExitCodeTest, ErrorCodesMapToDocumentedExits) {
  using dbcabac::cli::exit_code_for;
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::AccessRejected), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::NetworkError), 5);
  EXPECT_EQ(exit_code_for(ErrorCode::PortInUse), 5);
  EXPECT_EQ(exit_code_for(ErrorCode::ForwardFailed), 5);
  for (auto code : {ErrorCode::Unauthorized, ErrorCode::PolicyExists, ErrorCode::NotFound,
                    ErrorCode::BadCertificate, ErrorCode::BadSecret, ErrorCode::HashMismatch,
                    ErrorCode::BrokenChain}) {
    EXPECT_EQ(exit_code_for(code), 4) << dbcabac::error_code_name(code);
  }
}

TEST(CliUsageTest, ParseErrorsExitTwo) {
  EXPECT_EQ(cli({}).rc, 2);
  EXPECT_EQ(cli({"--bogus", "net", "status"}).rc, 2);
  EXPECT_EQ(cli({"policy", "add"}).rc, 2);
  EXPECT_EQ(cli({"--out", "xml", "net", "status"}).rc, 2);
  EXPECT_EQ(cli({"--help"}).rc, 0);
}

TEST(CliUsageTest, MissingConfigIsAConfigError) {
  ::unsetenv("DBCABAC_CONFIG");
  auto r = cli({"net", "status"});
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("ConfigError"), std::string::npos);
}

class CliNetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testnet::AbacNetOptions options;
    options.threaded = true;
    options.transport = dbcabac::domains::Network::TransportKind::Tcp;
    options.tweak = [](dbcabac::domains::NetworkConfig& c) {
      c.domains[0].endpoint = "127.0.0.1:" + std::to_string(testnet::free_port());
      c.domains[1].endpoint = "127.0.0.1:" + std::to_string(testnet::free_port());
      c.block_timeout = std::chrono::milliseconds(20);
    };
    t = std::make_unique<AbacNet>(options);
    t->net->listen();
    dir = t->dir()->path() / "cli";
    fs::create_directories(dir);
    config = (t->config().data_dir / "network.json").string();
    t->admin_a.save(dir / "admin_a.id");
    t->alice.save(dir / "alice.id");
    t->carol.save(dir / "carol.id");
    t->bob.save(dir / "bob.id");
  }

  Outcome as(const std::string& who, std::vector<std::string> args) {
    std::vector<std::string> full{"--config", config, "--identity", (dir / (who + ".id")).string()};
    full.insert(full.end(), args.begin(), args.end());
    return cli(full);
  }

  std::string policy_file(const std::string& user, const std::string& device, const std::string& domain,
                          int read = 1, int write = 1) {
    const auto& who = user == "alice" ? t->alice : user == "carol" ? t->carol : t->bob;
    auto p = AbacNet::policy_for(who, device, domain, {}, read, write);
    auto path = dir / (user + "-" + device + ".json");
    write_file(path, dbcabac::canonical(dbcabac::abac::to_document(p)));
    return path.string();
  }

  std::unique_ptr<AbacNet> t;
  fs::path dir;
  std::string config;
};

TEST_F(CliNetTest, PolicyLifecycleThroughTheCli) {
  auto file = policy_file("alice", "cam-1", "domA");
  EXPECT_EQ(as("admin_a", {"policy", "validate", "-f", file}).rc, 0);
  auto added = as("admin_a", {"policy", "add", "-f", file});
  ASSERT_EQ(added.rc, 0) << added.err;
  EXPECT_EQ(added.out, "policy/domA/cam-1/alice\n");

  auto again = as("admin_a", {"policy", "add", "-f", file});
  EXPECT_EQ(again.rc, 4);
  EXPECT_NE(again.err.find("PolicyExists"), std::string::npos);

  auto approved = as("alice", {"access", "check", "--device", "cam-1", "--domain", "domA"});
  EXPECT_EQ(approved.rc, 0);
  EXPECT_EQ(approved.out, "approve\n");

  auto read_only = policy_file("alice", "cam-1", "domA", 1, 0);
  ASSERT_EQ(as("admin_a", {"policy", "update", "--key", "policy/domA/cam-1/alice", "-f", read_only}).rc, 0);
  auto denied = as("alice", {"access", "check", "--device", "cam-1", "--domain", "domA", "--op", "write"});
  EXPECT_EQ(denied.rc, 3);
  EXPECT_EQ(denied.out, "reject: PermissionDenied\n");

  ASSERT_EQ(as("admin_a", {"policy", "delete", "--key", "policy/domA/cam-1/alice"}).rc, 0);
  auto gone = as("alice", {"access", "check", "--device", "cam-1", "--domain", "domA"});
  EXPECT_EQ(gone.rc, 3);
  EXPECT_EQ(gone.out, "reject: NoPolicy\n");
}

TEST_F(CliNetTest, UnauthorizedCallsExitFour) {
  auto r = as("alice", {"policy", "add", "-f", policy_file("alice", "cam-2", "domA")});
  EXPECT_EQ(r.rc, 4);
  EXPECT_NE(r.err.find("Unauthorized"), std::string::npos);
  auto json = as("alice", {"--out", "json", "policy", "add", "-f", policy_file("alice", "cam-2", "domA")});
  auto env = dbcabac::parse_document(json.out);
  EXPECT_EQ(env["status"], "error");
  EXPECT_EQ(env["error"]["code"], "Unauthorized");
}

TEST_F(CliNetTest, QueryOutputIsDeterministicAcrossEdges) {
  ASSERT_EQ(as("admin_a", {"policy", "add", "-f", policy_file("alice", "cam-3", "domA")}).rc, 0);
  ASSERT_EQ(as("admin_a", {"policy", "add", "-f", policy_file("carol", "cam-3", "domA")}).rc, 0);
  t->net->settle();
  std::vector<std::string> query{"--out", "json", "policy", "query", "--device", "cam-3", "--domain", "domA"};
  auto a = as("admin_a", query);
  auto again = as("admin_a", query);
  std::vector<std::string> via_b{"--edge", "domB"};
  via_b.insert(via_b.end(), query.begin(), query.end());
  auto b = as("admin_a", via_b);
  ASSERT_EQ(a.rc, 0) << a.err;
  EXPECT_EQ(a.out, again.out);
  EXPECT_EQ(a.out, b.out);
  auto doc = dbcabac::parse_document(a.out);
  ASSERT_EQ(doc["envelope"]["payload"].size(), 2u);
  EXPECT_EQ(doc["envelope"]["payload"][0]["key"], "policy/domA/cam-3/alice");
  EXPECT_EQ(doc["envelope"]["payload"][1]["key"], "policy/domA/cam-3/carol");
}

TEST_F(CliNetTest, DelegationGrantsTheDelegate) {
  ASSERT_EQ(as("admin_a", {"policy", "add", "-f", policy_file("alice", "cam-4", "domA")}).rc, 0);
  EXPECT_EQ(as("carol", {"access", "check", "--device", "cam-4", "--domain", "domA"}).rc, 3);
  auto d = as("alice", {"access", "delegate", "--key", "policy/domA/cam-4/alice", "--to", "carol"});
  ASSERT_EQ(d.rc, 0) << d.err;
  auto after = as("carol", {"access", "check", "--device", "cam-4", "--domain", "domA"});
  EXPECT_EQ(after.rc, 0) << after.out << after.err;
}

TEST_F(CliNetTest, IngestThenCrossDomainGet) {
  auto gateway = t->config().identity_path("gateway.domB").string();
  auto payload_path = dir / "reading.bin";
  std::string payload(3000, '\0');
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(i * 31 + 7);
  write_file(payload_path, payload);
  auto ingest = cli({"--config", config, "--identity", gateway, "data", "ingest", "--device", "meter-9", "--file",
                     payload_path.string()});
  ASSERT_EQ(ingest.rc, 0) << ingest.err;

  auto grant = AbacNet::policy_for(t->alice, "meter-9", "domB", {}, 1, 0);
  t->add(t->admin_b, grant);

  auto out_path = dir / "got.bin";
  auto get = as("alice", {"data", "get", "--device", "meter-9", "--domain", "domB", "-o", out_path.string()});
  ASSERT_EQ(get.rc, 0) << get.err;
  EXPECT_EQ(read_file(out_path), payload);
  EXPECT_NE(get.out.find("(forwarded)"), std::string::npos);

  auto stranger = as("carol", {"data", "get", "--device", "meter-9", "--domain", "domB", "-o",
                               (dir / "nope.bin").string()});
  EXPECT_EQ(stranger.rc, 3);
  EXPECT_FALSE(fs::exists(dir / "nope.bin"));
}

TEST_F(CliNetTest, UserCannotIngest) {
  auto payload_path = dir / "x.bin";
  write_file(payload_path, "abc");
  auto r = as("alice", {"data", "ingest", "--device", "meter-1", "--file", payload_path.string()});
  EXPECT_EQ(r.rc, 4);
  EXPECT_NE(r.err.find("Unauthorized"), std::string::npos);
}

TEST_F(CliNetTest, StatusListsBothDomains) {
  auto r = cli({"--config", config, "--out", "json", "net", "status"});
  ASSERT_EQ(r.rc, 0) << r.err;
  auto doc = dbcabac::parse_document(r.out);
  ASSERT_EQ(doc["domains"].size(), 2u);
  EXPECT_EQ(doc["domains"][0]["tip_hash"], doc["domains"][1]["tip_hash"]);
}

class CliDaemonTest : public ::testing::Test {
 protected:
  testnet::TempDir tmp;
  std::string root = (tmp.path() / "net").string();
  std::string cfg() const { return "--config " + root + "/network.json "; }
};

TEST_F(CliDaemonTest, InitStartStopAndVerify) {
  auto base = testnet::free_port();
  auto init = tool("net init --dir " + root + " --base-port " + std::to_string(base));
  ASSERT_EQ(init.rc, 0) << init.out;
  EXPECT_EQ(tool("net init --dir " + root).rc, 2);

  auto start = tool(cfg() + "net start --detach");
  ASSERT_EQ(start.rc, 0) << start.out;
  auto twice = tool(cfg() + "net start --detach");
  EXPECT_EQ(twice.rc, 5) << twice.out;
  EXPECT_NE(twice.out.find("PortInUse"), std::string::npos);

  auto admin = (tmp.path() / "admin.id").string();
  EXPECT_EQ(tool(cfg() + "identity enroll-admin --org org1 --secret wrong --save " + admin).rc, 4);
  ASSERT_EQ(tool(cfg() + "identity enroll-admin --org org1 --secret adminpw-org1 --save " + admin).rc, 0);
  EXPECT_EQ(tool(cfg() + "identity register --org org1 --id la --class local-admin --domain domA").rc, 4);
  auto reg = tool(cfg() + "--out json --identity " + admin +
                  " identity register --org org1 --id la --class local-admin --domain domA");
  ASSERT_EQ(reg.rc, 0) << reg.out;
  auto secret = dbcabac::parse_document(reg.out)["secret"].get<std::string>();
  auto la = (tmp.path() / "la.id").string();
  ASSERT_EQ(tool(cfg() + "identity enroll --org org1 --id la --secret " + secret + " --save " + la).rc, 0);
  EXPECT_EQ(tool(cfg() + "identity enroll --org org1 --id la --secret nope --save " + la).rc, 4);
  EXPECT_EQ(tool(cfg() + "--identity " + la + " identity show").rc, 0);

  auto status = tool(cfg() + "net status");
  EXPECT_EQ(status.rc, 0) << status.out;
  EXPECT_NE(status.out.find("domA"), std::string::npos);

  auto stop = tool(cfg() + "net stop");
  ASSERT_EQ(stop.rc, 0) << stop.out;
  EXPECT_EQ(tool(cfg() + "net status").rc, 5);

  auto verify = tool(cfg() + "ledger verify");
  EXPECT_EQ(verify.rc, 0) << verify.out;
  auto exported = tool(cfg() + "ledger export --output " + (tmp.path() / "blocks.json").string());
  EXPECT_EQ(exported.rc, 0) << exported.out;

  auto archive = fs::path(root) / "ledger" / "peer0.org2.blocks";
  std::fstream f(archive, std::ios::in | std::ios::out | std::ios::binary);
  auto mid = static_cast<std::streamoff>(fs::file_size(archive) / 2);
  f.seekg(mid);
  char c;
  f.get(c);
  f.seekp(mid);
  f.put(static_cast<char>(c ^ 0x20));
  f.close();
  auto broken = tool(cfg() + "ledger verify");
  EXPECT_EQ(broken.rc, 4) << broken.out;
  EXPECT_NE(broken.out.find("peer0.org2: broken"), std::string::npos);
}

}  // namespace
