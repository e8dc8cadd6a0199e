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

#include "dbcabac/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "dbcabac/abac.hpp"
#include "dbcabac/contracts.hpp"
#include "dbcabac/crypto.hpp"
#include "dbcabac/error.hpp"

namespace dbcabac::bench {
namespace {

using Clock = std::chrono::steady_clock;
using ledger::ContractId;

constexpr std::array<std::pair<Function, std::string_view>, 5> kNames{{
    {Function::AddPolicy, "AddPolicy"},
    {Function::UpdatePolicy, "UpdatePolicy"},
    {Function::QueryPolicy, "QueryPolicy"},
    {Function::DeletePolicy, "DeletePolicy"},
    {Function::CheckAccess, "CheckAccess"},
}};

constexpr std::size_t kSeedConcurrency = 50;

struct Sample {
  Clock::time_point submitted{};
  Clock::time_point committed{};
  bool ok = false;
  std::string error;
};

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

std::string device_of(const Fixture& f, std::size_t i) { return "bench-" + f.run_id + "-" + std::to_string(i); }

abac::Policy grant(const Fixture& f, std::size_t i) {
  abac::Policy p;
  p.sa = f.user.cert.attributes;
  p.oa.device_id = device_of(f, i);
  p.oa.domain_id = f.domain_id;
  p.oa.add_owner(f.user.cert.attributes.user_id);
  p.oa.data_type = "telemetry";
  p.ea = {"0.0.0.0/0", 0, 4102444800};
  return p;
}

ledger::Proposal make_tx(Function fn, domains::Network& net, const Fixture& f, std::size_t i) {
  auto policy = grant(f, i);
  auto key = contracts::policy_key(policy);
  switch (fn) {
    case Function::AddPolicy:
      return net.proposal(f.admin, ContractId::PolicyContract, "AddPolicy", {abac::to_document(policy)});
    case Function::UpdatePolicy:
      policy.pa.write = 0;
      return net.proposal(f.admin, ContractId::PolicyContract, "UpdatePolicy", {key, abac::to_document(policy)});
    case Function::QueryPolicy:
      return net.proposal(f.user, ContractId::PolicyContract, "QueryPolicy",
                          {contracts::to_document(contracts::Selector{contracts::ByKey{key}})});
    case Function::DeletePolicy:
      return net.proposal(f.admin, ContractId::PolicyContract, "DeletePolicy", {key});
    case Function::CheckAccess:
      break;
  }
  contracts::AccessQuery q{{policy.oa.device_id, f.domain_id}, abac::Operation::Read, "10.0.0.1"};
  return net.proposal(f.user, ContractId::AccessContract, "CheckAccess", {contracts::to_document(q)});
}

// Runs one blocking submission per index, at most `width` at a time.
std::vector<std::string> submit_parallel(domains::Network& net, domains::Edge& edge, std::size_t count,
                                         const std::function<ledger::Proposal(std::size_t)>& make,
                                         std::size_t width) {
  std::vector<std::string> errors(count);
  for (std::size_t base = 0; base < count; base += width) {
    std::vector<std::thread> threads;
    for (std::size_t i = base; i < std::min(count, base + width); ++i) {
      threads.emplace_back([&, i] {
        try {
          auto r = net.submit(make(i), edge);
          if (!r.outcome.valid) errors[i] = "invalidated: " + r.outcome.reason;
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  return errors;
}

void preflight(domains::Network& net) {
  for (auto* edge : net.edges()) {
    auto reply = net.transport().request(edge->config().endpoint, {wire::MessageType::Status, Document::object()});
    if (reply.type != wire::MessageType::StatusResponse) {
      throw Error(ErrorCode::NetworkError, edge->domain_id() + " did not answer a status probe");
    }
  }
}

}  // namespace

std::string_view to_string(Function f) noexcept {
  for (const auto& [v, name] : kNames) {
    if (v == f) return name;
  }
  return "QueryPolicy";
}

std::optional<Function> parse_function(std::string_view text) {
  for (const auto& [v, name] : kNames) {
    if (name == text) return v;
  }
  return std::nullopt;
}

void Scenario::validate() const {
  if (total_tx == 0) throw Error(ErrorCode::ConfigError, "total_tx must be at least 1");
  if (!(send_rate_tps > 0) || !std::isfinite(send_rate_tps)) {
    throw Error(ErrorCode::ConfigError, "send_rate_tps must be a positive number");
  }
}

Document Scenario::to_document() const {
  return {{"function", std::string(bench::to_string(function))},
          {"send_rate_tps", send_rate_tps},
          {"total_tx", total_tx},
          {"warmup_tx", warmup_tx}};
}

Document Report::to_document() const {
  return {{"scenario", scenario.to_document()},
          {"submitted", submitted},
          {"succeeded", succeeded},
          {"failed", failed},
          {"min_latency_s", min_latency_s},
          {"avg_latency_s", avg_latency_s},
          {"max_latency_s", max_latency_s},
          {"throughput_tps", throughput_tps},
          {"submission_span_s", submission_span_s},
          {"errors", errors}};
}

Fixture seed_identities(domains::Network& net) {
  const auto& domain = net.config().domains.front();
  Fixture f;
  f.domain_id = domain.domain_id;
  f.run_id = crypto::random_token(4);
  auto admin_id = "bench-admin-" + f.run_id;
  auto user_id = "bench-user-" + f.run_id;
  try {
    f.admin = net.register_and_enroll(domain.org_id, admin_id, identity::RoleClass::LocalAdmin,
                                      {admin_id, "local-admin", f.domain_id});
    f.user = net.register_and_enroll(domain.org_id, user_id, identity::RoleClass::User, {user_id, "user", f.domain_id});
  } catch (const Error& e) {
    throw Error(ErrorCode::FixtureError, std::string("identity seeding failed: ") + e.what());
  }
  return f;
}

Report run_scenario(const Scenario& scenario, domains::Network& net) {
  scenario.validate();
  preflight(net);
  return run_scenario(scenario, net, seed_identities(net));
}

Report run_scenario(const Scenario& scenario, domains::Network& net, const Fixture& fixture) {
  scenario.validate();
  preflight(net);
  const std::size_t n = scenario.warmup_tx + scenario.total_tx;
  auto& edge = net.edge(fixture.domain_id);

  if (scenario.function != Function::AddPolicy) {
    auto errors = submit_parallel(
        net, edge, n,
        [&](std::size_t i) {
          return net.proposal(fixture.admin, ContractId::PolicyContract, "AddPolicy",
                              {abac::to_document(grant(fixture, i))});
        },
        kSeedConcurrency);
    for (const auto& e : errors) {
      if (!e.empty()) throw Error(ErrorCode::FixtureError, "pre-seeding failed: " + e);
    }
  }

  std::vector<Sample> samples(n);
  std::vector<std::thread> workers;
  workers.reserve(n);
  const auto gap = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / scenario.send_rate_tps));
  const auto start = Clock::now() + std::chrono::milliseconds(20);
  for (std::size_t i = 0; i < n; ++i) {
    std::this_thread::sleep_until(start + gap * static_cast<Clock::rep>(i));
    samples[i].submitted = Clock::now();
    workers.emplace_back([&, i] {
      auto& s = samples[i];
      try {
        auto r = net.submit(make_tx(scenario.function, net, fixture, i), edge);
        s.committed = Clock::now();
        s.ok = r.outcome.valid;
        if (!s.ok) s.error = "Invalidated";
      } catch (const Error& e) {
        s.committed = Clock::now();
        s.error = std::string(error_code_name(e.code()));
      } catch (const std::exception& e) {
        s.committed = Clock::now();
        s.error = e.what();
      }
    });
  }
  for (auto& w : workers) w.join();

  Report report;
  report.scenario = scenario;
  report.submitted = scenario.total_tx;
  double min_lat = std::numeric_limits<double>::infinity();
  double max_lat = 0;
  double sum_lat = 0;
  auto first_submit = Clock::time_point::max();
  auto last_submit = Clock::time_point::min();
  auto last_commit = Clock::time_point::min();
  for (std::size_t i = scenario.warmup_tx; i < n; ++i) {
    const auto& s = samples[i];
    first_submit = std::min(first_submit, s.submitted);
    last_submit = std::max(last_submit, s.submitted);
    if (!s.ok) {
      ++report.failed;
      ++report.errors[s.error];
      continue;
    }
    ++report.succeeded;
    double lat = seconds(s.committed - s.submitted);
    min_lat = std::min(min_lat, lat);
    max_lat = std::max(max_lat, lat);
    sum_lat += lat;
    last_commit = std::max(last_commit, s.committed);
  }
  report.submission_span_s = seconds(last_submit - first_submit);
  if (report.succeeded > 0) {
    report.min_latency_s = min_lat;
    report.max_latency_s = max_lat;
    report.avg_latency_s = sum_lat / static_cast<double>(report.succeeded);
    double window = seconds(last_commit - first_submit);
    report.throughput_tps = window > 0 ? static_cast<double>(report.succeeded) / window : 0;
  }
  return report;
}

std::vector<Scenario> reference_scenarios() {
  std::vector<Scenario> out;
  for (double rate : {5.0, 50.0}) {
    for (auto fn : kAllFunctions) out.push_back({fn, rate, 100, 10});
  }
  return out;
}

SuiteResult run_suite(const SuiteOptions& options) {
  for (const auto& s : options.scenarios) s.validate();
  SuiteResult result;
  for (const auto& s : options.scenarios) {
    char name[64];
    std::snprintf(name, sizeof name, "%s-%g", std::string(to_string(s.function)).c_str(), s.send_rate_tps);
    auto dir = options.work_dir / name;
    std::filesystem::remove_all(dir);
    auto config = options.make_config ? options.make_config(dir) : domains::NetworkConfig::reference(dir);
    domains::Network::Options net_options;
    net_options.threaded_ordering = true;
    domains::Network net(config, net_options);
    result.rows.push_back(run_scenario(s, net));
  }
  return result;
}

Document SuiteResult::to_document() const {
  Document rows_doc = Document::array();
  for (const auto& r : rows) rows_doc.push_back(r.to_document());
  return {{"rows", rows_doc}};
}

std::string SuiteResult::table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-13s %8s %10s %10s %10s %12s %9s\n", "function", "rate", "avg_lat_s",
                "min_lat_s", "max_lat_s", "throughput", "ok/total");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-13s %8g %10.3f %10.3f %10.3f %12.2f %4zu/%-4zu\n",
                  std::string(to_string(r.scenario.function)).c_str(), r.scenario.send_rate_tps, r.avg_latency_s,
                  r.min_latency_s, r.max_latency_s, r.throughput_tps, r.succeeded, r.submitted);
    out += line;
  }
  return out;
}

void write_report(const std::filesystem::path& path, const Document& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write report to " + path.string());
}

}  // namespace dbcabac::bench
