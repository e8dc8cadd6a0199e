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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbcabac/canonical.hpp"
#include "dbcabac/domains.hpp"
#include "dbcabac/identity.hpp"

namespace dbcabac::bench {

enum class Function { AddPolicy, UpdatePolicy, QueryPolicy, DeletePolicy, CheckAccess };
inline constexpr Function kAllFunctions[] = {Function::AddPolicy, Function::UpdatePolicy, Function::QueryPolicy,
                                             Function::DeletePolicy, Function::CheckAccess};

std::string_view to_string(Function f) noexcept;
std::optional<Function> parse_function(std::string_view text);

struct Scenario {
  Function function = Function::QueryPolicy;
  double send_rate_tps = 5;
  std::size_t total_tx = 100;
  std::size_t warmup_tx = 10;

  // Throws Error(ConfigError).
  void validate() const;
  Document to_document() const;
};

struct Report {
  Scenario scenario;
  std::size_t submitted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  double min_latency_s = 0;
  double avg_latency_s = 0;
  double max_latency_s = 0;
  double throughput_tps = 0;
  // Time from the first to the last measured submission.
  double submission_span_s = 0;
  std::map<std::string, std::size_t> errors;

  Document to_document() const;
};

// Identities the generated transactions are signed with.
struct Fixture {
  identity::Credential admin;  // LocalAdmin of domain_id
  identity::Credential user;
  std::string domain_id;
  std::string run_id;  // keeps keys of repeated runs on one network apart
};

// Registers a fresh local admin and user in the first configured domain.
Fixture seed_identities(domains::Network& network);

// Pre-seeds the policies the scenario needs, then issues warmup and measured
// transactions open-loop at the configured rate. Throws Error(ConfigError),
// Error(FixtureError), or Error(NetworkError) when an edge is unreachable.
Report run_scenario(const Scenario& scenario, domains::Network& network, const Fixture& fixture);
Report run_scenario(const Scenario& scenario, domains::Network& network);

// Five functions at 5 and 50 TPS, 100 transactions each.
std::vector<Scenario> reference_scenarios();

struct SuiteOptions {
  std::filesystem::path work_dir;
  std::vector<Scenario> scenarios = reference_scenarios();
  // Produces the network configuration for each fresh network.
  std::function<domains::NetworkConfig(const std::filesystem::path&)> make_config;
};

struct SuiteResult {
  std::vector<Report> rows;

  Document to_document() const;
  // Function x rate table of average latency and throughput.
  std::string table() const;
};

// Runs every scenario on its own fresh network.
SuiteResult run_suite(const SuiteOptions& options);

void write_report(const std::filesystem::path& path, const Document& doc);

}  // namespace dbcabac::bench
