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

#include "cli.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "dbcabac/abac.hpp"
#include "dbcabac/bench.hpp"
#include "dbcabac/canonical.hpp"
#include "dbcabac/contracts.hpp"
#include "dbcabac/crypto.hpp"
#include "dbcabac/domains.hpp"
#include "dbcabac/identity.hpp"
#include "dbcabac/ledger.hpp"
#include "dbcabac/wire.hpp"

namespace dbcabac::cli {
namespace {

namespace fs = std::filesystem;
using domains::NetworkConfig;
using identity::Credential;
using ledger::ContractId;

std::atomic<bool> g_stop_signal{false};

extern "C" void on_stop_signal(int) { g_stop_signal.store(true); }

struct Context {
  Context(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  std::ostream& out;
  std::ostream& err;
  std::string config_path;
  std::string identity_path;
  std::string format = "human";
  std::string edge;

  bool json() const { return format == "json"; }

  fs::path resolved_config() const {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("DBCABAC_CONFIG")) path = env;
    }
    if (path.empty()) throw Error(ErrorCode::ConfigError, "no network config: pass --config or set DBCABAC_CONFIG");
    return path;
  }

  NetworkConfig config() const { return NetworkConfig::load(resolved_config()); }

  std::optional<fs::path> identity_file() const {
    std::string path = identity_path;
    if (path.empty()) {
      if (const char* env = std::getenv("DBCABAC_IDENTITY")) path = env;
    }
    if (path.empty()) return std::nullopt;
    return fs::path(path);
  }

  Credential identity() const {
    auto path = identity_file();
    if (!path) throw Error(ErrorCode::ConfigError, "no identity: pass --identity or set DBCABAC_IDENTITY");
    return Credential::load(*path);
  }
};

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_bytes_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
}

Document read_document_file(const fs::path& path) {
  try {
    return parse_document(read_text_file(path));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

// Prints the human form, or the canonical document in json mode.
void emit(const Context& ctx, const Document& doc, const std::string& human) {
  if (ctx.json()) {
    ctx.out << canonical(doc) << "\n";
  } else {
    ctx.out << human;
    if (!human.empty() && human.back() != '\n') ctx.out << "\n";
  }
}

std::string human_payload(const Document& payload) {
  return payload.is_string() ? payload.get<std::string>() : payload.dump(2);
}

// ------------------------------------------------------------------ client

std::string endpoint_for(const Context& ctx, const NetworkConfig& cfg, const Credential* who) {
  if (!ctx.edge.empty()) return cfg.domain(ctx.edge).endpoint;
  if (who) {
    for (const auto& d : cfg.domains) {
      if (d.domain_id == who->cert.attributes.domain_id) return d.endpoint;
    }
  }
  return cfg.domains.front().endpoint;
}

// Returns the payload of an ok envelope; throws the carried error otherwise.
const Document& unwrap(const wire::Message& response) {
  const Document& body = response.body;
  if (!body.is_object() || !body.contains("envelope")) {
    throw Error(ErrorCode::NetworkError, "response without an envelope");
  }
  const Document& env = body["envelope"];
  if (env.value("status", "") == "ok") return env["payload"];
  std::string code = "ContractError";
  std::string message;
  if (env.contains("error") && env["error"].is_object()) {
    code = env["error"].value("code", code);
    message = env["error"].value("message", "");
  }
  ErrorCode parsed = ErrorCode::ContractError;
  try {
    parsed = error_code_from_name(code);
  } catch (const std::invalid_argument&) {
  }
  throw Error(parsed, message);
}

wire::Message send(const std::string& endpoint, wire::MessageType type, Document body) {
  wire::TcpTransport transport;
  return transport.request(endpoint, {type, std::move(body)});
}

wire::Message call(const Context& ctx, ContractId contract, const std::string& function,
                   const std::vector<Document>& args, bool evaluate) {
  auto cfg = ctx.config();
  auto who = ctx.identity();
  auto proposal = domains::make_proposal(who, contract, function, args, domains::system_clock_seconds());
  return send(endpoint_for(ctx, cfg, &who), evaluate ? wire::MessageType::Evaluate : wire::MessageType::Submit,
              {{"proposal", ledger::to_document(proposal)}});
}

// Submits, prints the envelope and returns the exit code.
int call_and_print(const Context& ctx, ContractId contract, const std::string& function,
                   const std::vector<Document>& args, bool evaluate = false) {
  auto response = call(ctx, contract, function, args, evaluate);
  const Document& payload = unwrap(response);
  emit(ctx, response.body, human_payload(payload));
  return kExitOk;
}

// ------------------------------------------------------------------ daemon

void report_ready(int fd, const std::string& line) {
  if (fd < 0) return;
  std::string msg = line + "\n";
  [[maybe_unused]] auto n = ::write(fd, msg.data(), msg.size());
  ::close(fd);
}

int run_daemon(const NetworkConfig& cfg, int ready_fd, std::ostream& log) {
  std::unique_ptr<domains::Network> net;
  try {
    domains::Network::Options options;
    options.threaded_ordering = true;
    options.transport = domains::Network::TransportKind::Tcp;
    net = std::make_unique<domains::Network>(cfg, options);
    net->listen();
  } catch (const Error& e) {
    report_ready(ready_fd, "err " + std::string(error_code_name(e.code())) + " " + e.detail());
    if (ready_fd < 0) throw;
    return exit_code_for(e.code());
  }
  auto pid_file = cfg.data_dir / "daemon.pid";
  write_bytes_file(pid_file, std::to_string(::getpid()) + "\n");
  ::signal(SIGINT, on_stop_signal);
  ::signal(SIGTERM, on_stop_signal);
  ::signal(SIGPIPE, SIG_IGN);
  for (const auto& d : cfg.domains) log << "edge " << d.domain_id << " listening on " << d.endpoint << "\n";
  log.flush();
  report_ready(ready_fd, "ok " + std::to_string(::getpid()));
  while (!net->shutdown_requested() && !g_stop_signal.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  net->shutdown();
  net.reset();
  std::error_code ec;
  fs::remove(pid_file, ec);
  log << "stopped\n";
  log.flush();
  return kExitOk;
}

int start_detached(const Context& ctx, const NetworkConfig& cfg) {
  int fds[2];
  if (::pipe(fds) != 0) throw Error(ErrorCode::NetworkError, "pipe failed");
  ctx.out.flush();
  ctx.err.flush();
  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::NetworkError, "fork failed");
  if (pid == 0) {
    ::close(fds[0]);
    ::setsid();
    int devnull = ::open("/dev/null", O_RDONLY);
    int logfd = ::open((cfg.data_dir / "daemon.log").c_str(), O_CREAT | O_APPEND | O_WRONLY, 0600);
    if (devnull >= 0) ::dup2(devnull, 0);
    if (logfd >= 0) {
      ::dup2(logfd, 1);
      ::dup2(logfd, 2);
    }
    int rc = kExitNetwork;
    try {
      rc = run_daemon(cfg, fds[1], std::cerr);
    } catch (const std::exception& e) {
      std::cerr << "daemon failed: " << e.what() << "\n";
    }
    std::cerr.flush();
    ::_exit(rc);
  }
  ::close(fds[1]);
  std::string line;
  char buf[256];
  ssize_t n;
  while ((n = ::read(fds[0], buf, sizeof buf)) > 0) line.append(buf, static_cast<std::size_t>(n));
  ::close(fds[0]);
  if (line.rfind("ok ", 0) == 0) {
    std::string child = line.substr(3, line.find('\n') - 3);
    emit(ctx, {{"status", "started"}, {"pid", std::stoll(child)}}, "network started (pid " + child + ")");
    return kExitOk;
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (line.rfind("err ", 0) == 0) {
    auto rest = line.substr(4);
    if (!rest.empty() && rest.back() == '\n') rest.pop_back();
    auto space = rest.find(' ');
    auto code_name = rest.substr(0, space);
    auto message = space == std::string::npos ? "" : rest.substr(space + 1);
    ErrorCode code = ErrorCode::NetworkError;
    try {
      code = error_code_from_name(code_name);
    } catch (const std::invalid_argument&) {
    }
    throw Error(code, message);
  }
  throw Error(ErrorCode::NetworkError, "daemon exited before becoming ready; see " +
                                           (cfg.data_dir / "daemon.log").string());
}

// ---------------------------------------------------------------- commands

int net_init(const Context& ctx, const std::string& dir, std::uint16_t base_port, const std::string& from) {
  NetworkConfig cfg = from.empty() ? NetworkConfig::reference(fs::absolute(dir), base_port)
                                   : NetworkConfig::from_document(read_document_file(from));
  cfg.data_dir = fs::absolute(dir);
  domains::Network::bootstrap(cfg);
  {
    domains::Network::Options options;
    options.threaded_ordering = false;
    domains::Network genesis(cfg, options);
  }
  Document artifacts = Document::array();
  std::string human = "initialized network in " + cfg.data_dir.string() + "\n";
  for (const auto& c : cfg.cas) {
    artifacts.push_back(cfg.ca_path(c.org_id).string());
    human += "  ca       " + c.ca_id + "  " + cfg.ca_path(c.org_id).string() + "\n";
  }
  for (const auto& d : cfg.domains) {
    auto id_path = cfg.identity_path(d.peer_id);
    artifacts.push_back(id_path.string());
    artifacts.push_back(cfg.identity_path(d.gateway_id).string());
    human += "  peer     " + d.peer_id + "  " + d.domain_id + "  " + d.endpoint + "\n";
    human += "  gateway  " + d.gateway_id + "  " + cfg.identity_path(d.gateway_id).string() + "\n";
  }
  human += "  orderer  " + cfg.orderer_id + "\n";
  human += "export DBCABAC_CONFIG=" + (cfg.data_dir / "network.json").string();
  emit(ctx, {{"config", (cfg.data_dir / "network.json").string()}, {"artifacts", artifacts}}, human);
  return kExitOk;
}

int net_stop(const Context& ctx) {
  auto cfg = ctx.config();
  const auto& endpoint = cfg.domains.front().endpoint;
  unwrap(send(endpoint, wire::MessageType::Shutdown, Document::object()));
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(15);
  auto pid_file = cfg.data_dir / "daemon.pid";
  while (std::chrono::steady_clock::now() < deadline) {
    bool reachable = true;
    try {
      send(endpoint, wire::MessageType::Status, Document::object());
    } catch (const Error&) {
      reachable = false;
    }
    if (!reachable && !fs::exists(pid_file)) {
      emit(ctx, {{"status", "stopped"}}, "network stopped");
      return kExitOk;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  throw Error(ErrorCode::NetworkError, "network did not stop within 15 s");
}

int net_status(const Context& ctx) {
  auto cfg = ctx.config();
  auto response = send(endpoint_for(ctx, cfg, nullptr), wire::MessageType::Status, Document::object());
  const auto& payload = unwrap(response);
  std::string human = "orderer height " + std::to_string(payload["orderer_height"].get<std::uint64_t>()) + "\n";
  for (const auto& d : payload["domains"]) {
    human += d["domain_id"].get<std::string>() + "  " + d["peer_id"].get<std::string>() + "  height " +
             std::to_string(d["height"].get<std::uint64_t>()) + "  tip " +
             d["tip_hash"].get<std::string>().substr(0, 16) + "\n";
  }
  emit(ctx, payload, human);
  return kExitOk;
}

identity::CertificateAuthority load_ca(const NetworkConfig& cfg, const std::string& org) {
  cfg.ca(org);
  return identity::CertificateAuthority::load(cfg.ca_path(org));
}

int identity_enroll_admin(const Context& ctx, const std::string& org, std::string id, const std::string& secret,
                          const std::string& save) {
  auto cfg = ctx.config();
  if (id.empty()) id = cfg.ca(org).registrar_id;
  auto ca = load_ca(cfg, org);
  auto cred = ca.enroll_admin(id, secret);
  ca.save(cfg.ca_path(org));
  cred.save(save);
  emit(ctx, {{"id", id}, {"credential", save}}, "enrolled " + id + " -> " + save);
  return kExitOk;
}

int identity_register(const Context& ctx, const std::string& org, const std::string& id, const std::string& klass,
                      std::string role, const std::string& domain) {
  auto cfg = ctx.config();
  auto registrar_file = ctx.identity_file();
  if (!registrar_file) throw Error(ErrorCode::Unauthorized, "register requires --identity with a registrar credential");
  auto registrar = Credential::load(*registrar_file);
  auto role_class = identity::parse_role_class(klass);
  if (!role_class) throw Error(ErrorCode::ConfigError, "unknown role class " + klass);
  if (role.empty()) role = klass;
  auto ca = load_ca(cfg, org);
  auto secret = ca.register_identity(registrar, id, *role_class, {id, role, domain});
  ca.save(cfg.ca_path(org));
  emit(ctx, {{"id", id}, {"secret", secret}}, "registered " + id + "\nsecret: " + secret);
  return kExitOk;
}

int identity_enroll(const Context& ctx, const std::string& org, const std::string& id, const std::string& secret,
                    const std::string& save) {
  auto cfg = ctx.config();
  auto ca = load_ca(cfg, org);
  auto cred = ca.enroll(id, secret);
  ca.save(cfg.ca_path(org));
  cred.save(save);
  emit(ctx, {{"id", id}, {"credential", save}}, "enrolled " + id + " -> " + save);
  return kExitOk;
}

int identity_show(const Context& ctx) {
  auto who = ctx.identity();
  auto doc = identity::to_document(who.cert);
  emit(ctx, doc, doc.dump(2));
  return kExitOk;
}

int access_check(const Context& ctx, const std::string& device, const std::string& domain, const std::string& op,
                 const std::string& ip) {
  auto operation = abac::parse_operation(op);
  if (!operation) throw Error(ErrorCode::ConfigError, "operation must be read or write");
  contracts::AccessQuery q{{device, domain}, *operation, ip};
  auto response = call(ctx, ContractId::AccessContract, "CheckAccess", {contracts::to_document(q)}, false);
  const auto& payload = unwrap(response);
  auto decision = abac::decision_from_document(payload);
  std::string human = decision.approved()
                          ? std::string("approve")
                          : "reject: " + std::string(abac::to_string(decision.reason));
  emit(ctx, response.body, human);
  return decision.approved() ? kExitOk : kExitRejected;
}

int policy_query(const Context& ctx, const std::string& key, const std::string& device, const std::string& domain,
                 const std::string& user) {
  Document selector;
  if (!key.empty()) {
    selector = {{"by", "key"}, {"key", key}};
  } else if (!device.empty() && !domain.empty()) {
    selector = {{"by", "object"}, {"device_id", device}, {"domain_id", domain}};
  } else if (!user.empty()) {
    selector = {{"by", "subject"}, {"user_id", user}};
  } else {
    throw Error(ErrorCode::ConfigError, "query needs --key, --device with --domain, or --user");
  }
  return call_and_print(ctx, ContractId::PolicyContract, "QueryPolicy", {selector}, true);
}

int policy_validate(const Context& ctx, const std::string& file) {
  auto response = call(ctx, ContractId::PolicyContract, "ValidatePolicy", {read_document_file(file)}, true);
  const auto& payload = unwrap(response);
  bool ok = payload["ok"].get<bool>();
  std::string human = ok ? "valid" : "invalid";
  for (const auto& v : payload["violations"]) human += "\n  " + v.get<std::string>();
  emit(ctx, response.body, human);
  return ok ? kExitOk : kExitContract;
}

int data_ingest(const Context& ctx, const std::string& device, const std::string& type, const std::string& file) {
  auto cfg = ctx.config();
  auto gateway = ctx.identity();
  auto payload = read_text_file(file);
  contracts::DataEntry entry{device, gateway.cert.attributes.domain_id, type, crypto::sha256_hex(payload),
                             domains::system_clock_seconds()};
  auto proposal = domains::make_proposal(gateway, ContractId::AccessContract, "RecordData",
                                         {contracts::to_document(entry)}, entry.produced_at);
  auto response = send(endpoint_for(ctx, cfg, &gateway), wire::MessageType::Ingest,
                       {{"proposal", ledger::to_document(proposal)}, {"payload_hex", crypto::to_hex(payload)}});
  const auto& recorded = unwrap(response);
  emit(ctx, response.body, "recorded " + recorded["content_hash"].get<std::string>() + " (" +
                               std::to_string(payload.size()) + " bytes)");
  return kExitOk;
}

int data_get(const Context& ctx, const std::string& device, const std::string& domain, const std::string& ip,
             const std::string& output) {
  auto cfg = ctx.config();
  auto who = ctx.identity();
  contracts::AccessQuery q{{device, domain}, abac::Operation::Read, ip};
  auto proposal = domains::make_proposal(who, ContractId::AccessContract, "CheckAccess",
                                         {contracts::to_document(q)}, domains::system_clock_seconds());
  auto response = send(endpoint_for(ctx, cfg, &who), wire::MessageType::DataGet,
                       {{"proposal", ledger::to_document(proposal)}});
  domains::RetrievalResult result;
  try {
    result = domains::retrieval_from_document(unwrap(response));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AccessRejected) throw;
    emit(ctx, response.body, "reject: " + e.detail());
    return kExitRejected;
  }
  write_bytes_file(output, result.payload);
  auto summary = to_document(result);
  summary.erase("payload_hex");
  emit(ctx, summary,
       "wrote " + std::to_string(result.payload.size()) + " bytes to " + output + "\n  content_hash " +
           result.record.content_hash + "\n  served_by " + result.served_by +
           (result.forwarded ? " (forwarded)" : "") + "\n  grant " + result.grant_tx_id + " at height " +
           std::to_string(result.grant_height));
  return kExitOk;
}

std::vector<std::pair<std::string, fs::path>> archives(const NetworkConfig& cfg) {
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& d : cfg.domains) out.emplace_back(d.peer_id, cfg.archive_path(d.peer_id));
  out.emplace_back(cfg.orderer_id, cfg.archive_path(cfg.orderer_id));
  return out;
}

int ledger_verify(const Context& ctx) {
  auto cfg = ctx.config();
  bool all_ok = true;
  Document doc = Document::object();
  std::string human;
  for (const auto& [id, path] : archives(cfg)) {
    auto check = ledger::verify_archive(path);
    auto blocks = check.ok ? ledger::read_archive_blocks(path).size() : 0;
    all_ok = all_ok && check.ok;
    doc[id] = {{"ok", check.ok}, {"blocks", blocks}, {"detail", check.detail}};
    human += id + ": " +
             (check.ok ? "ok (" + std::to_string(blocks) + " blocks)"
                       : "broken at record " + std::to_string(check.broken_height.value_or(0)) + ": " + check.detail) +
             "\n";
  }
  emit(ctx, doc, human);
  return all_ok ? kExitOk : kExitContract;
}

int ledger_export(const Context& ctx, std::string peer, const std::string& output) {
  auto cfg = ctx.config();
  if (peer.empty()) peer = cfg.domains.front().peer_id;
  fs::path path;
  for (const auto& [id, p] : archives(cfg)) {
    if (id == peer) path = p;
  }
  if (path.empty()) throw Error(ErrorCode::ConfigError, "unknown peer " + peer);
  Document blocks = Document::array();
  for (const auto& b : ledger::read_archive_blocks(path)) blocks.push_back(ledger::to_document(b));
  if (output.empty()) {
    ctx.out << (ctx.json() ? canonical(blocks) : blocks.dump(2)) << "\n";
  } else {
    write_bytes_file(output, blocks.dump(2) + "\n");
    emit(ctx, {{"blocks", blocks.size()}, {"output", output}},
         "exported " + std::to_string(blocks.size()) + " blocks to " + output);
  }
  return kExitOk;
}

std::string report_line(const bench::Report& r) {
  char line[200];
  std::snprintf(line, sizeof line, "%s @ %g TPS: %zu/%zu ok, avg %.3f s (min %.3f, max %.3f), throughput %.2f TPS",
                std::string(bench::to_string(r.scenario.function)).c_str(), r.scenario.send_rate_tps, r.succeeded,
                r.submitted, r.avg_latency_s, r.min_latency_s, r.max_latency_s, r.throughput_tps);
  return line;
}

struct ScratchDir {
  fs::path path;
  bool owned = false;
  explicit ScratchDir(const std::string& requested) {
    if (!requested.empty()) {
      path = fs::absolute(requested);
      fs::create_directories(path);
      return;
    }
    std::string templ = (fs::temp_directory_path() / "dbcabac-bench-XXXXXX").string();
    if (::mkdtemp(templ.data()) == nullptr) throw Error(ErrorCode::ConfigError, "mkdtemp failed");
    path = templ;
    owned = true;
  }
  ~ScratchDir() {
    std::error_code ec;
    if (owned) fs::remove_all(path, ec);
  }
};

int bench_run(const Context& ctx, const std::string& function, double rate, std::size_t total, std::size_t warmup,
              const std::string& out_path, const std::string& work_dir) {
  auto fn = bench::parse_function(function);
  if (!fn) throw Error(ErrorCode::ConfigError, "unknown function " + function);
  bench::Scenario scenario{*fn, rate, total, warmup};
  scenario.validate();
  ScratchDir scratch(work_dir);
  bench::SuiteOptions options;
  options.work_dir = scratch.path;
  options.scenarios = {scenario};
  auto suite = bench::run_suite(options);
  const auto& report = suite.rows.front();
  if (!out_path.empty()) bench::write_report(out_path, report.to_document());
  emit(ctx, report.to_document(), report_line(report));
  return kExitOk;
}

int bench_suite(const Context& ctx, const std::string& out_dir, std::size_t total, std::size_t warmup) {
  if (out_dir.empty()) throw Error(ErrorCode::ConfigError, "--out directory is required");
  fs::path dir = fs::absolute(out_dir);
  bench::SuiteOptions options;
  options.work_dir = dir / "networks";
  options.scenarios.clear();
  for (auto s : bench::reference_scenarios()) {
    s.total_tx = total;
    s.warmup_tx = warmup;
    options.scenarios.push_back(s);
  }
  auto suite = bench::run_suite(options);
  fs::remove_all(options.work_dir);
  for (const auto& r : suite.rows) {
    char name[64];
    std::snprintf(name, sizeof name, "%s-%g.json", std::string(bench::to_string(r.scenario.function)).c_str(),
                  r.scenario.send_rate_tps);
    bench::write_report(dir / name, r.to_document());
  }
  bench::write_report(dir / "suite.json", suite.to_document());
  write_bytes_file(dir / "table.txt", suite.table());
  emit(ctx, suite.to_document(), suite.table());
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
      return kExitUsage;
    case ErrorCode::AccessRejected:
      return kExitRejected;
    case ErrorCode::NetworkError:
    case ErrorCode::PortInUse:
    case ErrorCode::ForwardFailed:
      return kExitNetwork;
    default:
      return kExitContract;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Distributed attribute-based access control for IoT data domains", "dbcabac"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", ctx.config_path, "Network config file (default $DBCABAC_CONFIG)");
  app.add_option("--identity", ctx.identity_path, "Credential file (default $DBCABAC_IDENTITY)");
  app.add_option("--out", ctx.format, "Output format")->check(CLI::IsMember({"human", "json"}));
  app.add_option("--edge", ctx.edge, "Domain whose edge handles the request");

  std::function<int()> action;
  auto on = [&action](CLI::App* sub, std::function<int()> f) {
    sub->callback([&action, f = std::move(f)] { action = f; });
  };

  // net
  auto* net = app.add_subcommand("net", "Bootstrap and run the network")->require_subcommand(1);
  std::string init_dir, init_from;
  std::uint16_t base_port = 7051;
  auto* net_init_cmd = net->add_subcommand("init", "Create CAs, identities and genesis blocks");
  net_init_cmd->add_option("--dir", init_dir, "Data directory")->required();
  net_init_cmd->add_option("--base-port", base_port, "First edge port");
  net_init_cmd->add_option("--from", init_from, "Declarative network file");
  on(net_init_cmd, [&] { return net_init(ctx, init_dir, base_port, init_from); });
  bool detach = false;
  auto* net_start = net->add_subcommand("start", "Run every edge and the sequencer");
  net_start->add_flag("--detach", detach, "Run in the background");
  on(net_start, [&] {
    auto cfg = ctx.config();
    if (detach) return start_detached(ctx, cfg);
    return run_daemon(cfg, -1, ctx.out);
  });
  on(net->add_subcommand("stop", "Stop a running network"), [&] { return net_stop(ctx); });
  on(net->add_subcommand("status", "Show ledger heights"), [&] { return net_status(ctx); });

  // identity
  auto* ident = app.add_subcommand("identity", "CA workflows")->require_subcommand(1);
  std::string org, id, secret, save, klass = "user", role, domain;
  auto* enroll_admin = ident->add_subcommand("enroll-admin", "Enroll the CA registrar");
  enroll_admin->add_option("--org", org)->required();
  enroll_admin->add_option("--id", id, "Registrar id (default from config)");
  enroll_admin->add_option("--secret", secret)->required();
  enroll_admin->add_option("--save", save, "Credential output file")->required();
  on(enroll_admin, [&] { return identity_enroll_admin(ctx, org, id, secret, save); });
  auto* reg = ident->add_subcommand("register", "Register an identity (prints its secret once)");
  reg->add_option("--org", org)->required();
  reg->add_option("--id", id)->required();
  reg->add_option("--class", klass, "user, local-admin, peer or orderer");
  reg->add_option("--role", role, "SA role attribute (default: the class)");
  reg->add_option("--domain", domain, "SA domain attribute")->required();
  on(reg, [&] { return identity_register(ctx, org, id, klass, role, domain); });
  auto* enroll = ident->add_subcommand("enroll", "Exchange a secret for a credential");
  enroll->add_option("--org", org)->required();
  enroll->add_option("--id", id)->required();
  enroll->add_option("--secret", secret)->required();
  enroll->add_option("--save", save, "Credential output file")->required();
  on(enroll, [&] { return identity_enroll(ctx, org, id, secret, save); });
  on(ident->add_subcommand("show", "Print the certificate of --identity"), [&] { return identity_show(ctx); });

  // policy
  auto* policy = app.add_subcommand("policy", "Policy administration")->require_subcommand(1);
  std::string file, key, device, user;
  auto* padd = policy->add_subcommand("add", "Add a policy");
  padd->add_option("-f,--file", file)->required();
  on(padd, [&] {
    return call_and_print(ctx, ContractId::PolicyContract, "AddPolicy", {read_document_file(file)});
  });
  auto* pupdate = policy->add_subcommand("update", "Replace a policy");
  pupdate->add_option("--key", key)->required();
  pupdate->add_option("-f,--file", file)->required();
  on(pupdate, [&] {
    return call_and_print(ctx, ContractId::PolicyContract, "UpdatePolicy", {key, read_document_file(file)});
  });
  auto* pdelete = policy->add_subcommand("delete", "Delete a policy");
  pdelete->add_option("--key", key)->required();
  on(pdelete, [&] { return call_and_print(ctx, ContractId::PolicyContract, "DeletePolicy", {key}); });
  auto* pquery = policy->add_subcommand("query", "Query policies");
  pquery->add_option("--key", key);
  pquery->add_option("--device", device);
  pquery->add_option("--domain", domain);
  pquery->add_option("--user", user);
  on(pquery, [&] { return policy_query(ctx, key, device, domain, user); });
  auto* pvalidate = policy->add_subcommand("validate", "Check a policy document");
  pvalidate->add_option("-f,--file", file)->required();
  on(pvalidate, [&] { return policy_validate(ctx, file); });

  // access
  auto* access = app.add_subcommand("access", "Access decisions and delegation")->require_subcommand(1);
  std::string op = "read", ip = "127.0.0.1", to;
  auto* check = access->add_subcommand("check", "Request an access decision");
  check->add_option("--device", device)->required();
  check->add_option("--domain", domain)->required();
  check->add_option("--op", op)->check(CLI::IsMember({"read", "write"}));
  check->add_option("--ip", ip, "Client address");
  on(check, [&] { return access_check(ctx, device, domain, op, ip); });
  auto* delegate = access->add_subcommand("delegate", "Add an owner to a policy");
  delegate->add_option("--key", key)->required();
  delegate->add_option("--to", to)->required();
  on(delegate, [&] { return call_and_print(ctx, ContractId::AccessContract, "DelegateAccess", {key, to}); });
  auto* atts = access->add_subcommand("atts", "Show the request attributes the contract would use");
  atts->add_option("--device", device)->required();
  atts->add_option("--domain", domain)->required();
  atts->add_option("--op", op)->check(CLI::IsMember({"read", "write"}));
  atts->add_option("--ip", ip);
  on(atts, [&] {
    contracts::AccessQuery q{{device, domain}, *abac::parse_operation(op), ip};
    return call_and_print(ctx, ContractId::AccessContract, "GetAtts", {contracts::to_document(q)}, true);
  });

  // data
  auto* data = app.add_subcommand("data", "Device data")->require_subcommand(1);
  std::string type = "telemetry", output;
  auto* ingest = data->add_subcommand("ingest", "Store a payload and record its hash (gateway identity)");
  ingest->add_option("--device", device)->required();
  ingest->add_option("--type", type);
  ingest->add_option("--file", file)->required();
  on(ingest, [&] { return data_ingest(ctx, device, type, file); });
  auto* get = data->add_subcommand("get", "Fetch the latest payload of a device");
  get->add_option("--device", device)->required();
  get->add_option("--domain", domain)->required();
  get->add_option("--ip", ip);
  get->add_option("-o,--output", output)->required();
  on(get, [&] { return data_get(ctx, device, domain, ip, output); });

  // ledger
  auto* ledger_cmd = app.add_subcommand("ledger", "Ledger audit")->require_subcommand(1);
  std::string peer;
  auto* lexport = ledger_cmd->add_subcommand("export", "Dump a peer's blocks");
  lexport->add_option("--peer", peer);
  lexport->add_option("-o,--output", output);
  on(lexport, [&] { return ledger_export(ctx, peer, output); });
  on(ledger_cmd->add_subcommand("verify", "Check every archive's hash chain"), [&] { return ledger_verify(ctx); });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Load benchmarks")->require_subcommand(1);
  std::string function, bench_out, work_dir;
  double rate = 5;
  std::size_t total = 100, warmup = 10;
  auto* brun = bench_cmd->add_subcommand("run", "One scenario on a fresh network");
  brun->add_option("--function", function)->required();
  brun->add_option("--rate", rate, "Send rate (TPS)");
  brun->add_option("--total", total);
  brun->add_option("--warmup", warmup);
  brun->add_option("--out", bench_out, "Report file");
  brun->add_option("--work-dir", work_dir, "Where the scratch network lives");
  on(brun, [&] { return bench_run(ctx, function, rate, total, warmup, bench_out, work_dir); });
  auto* bsuite = bench_cmd->add_subcommand("suite", "All functions at 5 and 50 TPS");
  bsuite->add_option("--out", bench_out, "Report directory")->required();
  bsuite->add_option("--total", total);
  bsuite->add_option("--warmup", warmup);
  on(bsuite, [&] { return bench_suite(ctx, bench_out, total, warmup); });

  std::vector<std::string> argv_storage;
  argv_storage.push_back("dbcabac");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (ctx.json()) out << canonical(contracts::error_envelope(e)) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitContract;
  }
}

}  // namespace dbcabac::cli
