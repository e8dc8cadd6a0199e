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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dbcabac/abac.hpp"
#include "dbcabac/channel.hpp"
#include "dbcabac/contracts.hpp"
#include "dbcabac/identity.hpp"
#include "dbcabac/ledger.hpp"
#include "dbcabac/ordering.hpp"
#include "dbcabac/wire.hpp"

namespace dbcabac::domains {

using ClockFn = std::function<abac::Timestamp()>;

// Seconds since the Unix epoch.
abac::Timestamp system_clock_seconds();

// Content-addressed off-chain store: one file per payload, named by the hex
// SHA-256 of its bytes.
class DdssStore {
 public:
  explicit DdssStore(std::filesystem::path root);

  // Returns the content hash. Storing the same bytes twice is a no-op.
  std::string put(std::string_view payload);
  // Throws Error(DataNotFound) or Error(HashMismatch) when the stored bytes
  // no longer hash to their name.
  std::string get(std::string_view content_hash) const;
  bool contains(std::string_view content_hash) const;

  std::filesystem::path path_for(std::string_view content_hash) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

struct CaConfig {
  std::string org_id;
  std::string ca_id;
  std::string registrar_id;
  std::string registrar_secret;
};

struct DomainConfig {
  std::string domain_id;
  std::string org_id;
  std::string peer_id;
  std::string gateway_id;
  std::string endpoint;  // host:port
};

struct NetworkConfig {
  std::string channel = "mychannel";
  std::filesystem::path data_dir;
  std::vector<CaConfig> cas;
  std::vector<DomainConfig> domains;
  std::string orderer_org = "ordererOrg";
  std::string orderer_id = "orderer.ordererOrg";
  // Peers whose endorsement is required; empty means every domain peer.
  std::vector<std::string> endorsers;
  std::size_t max_block_txs = 10;
  std::chrono::milliseconds block_timeout{250};

  // Two domains (domA on org1, domB on org2) plus an orderer organization.
  static NetworkConfig reference(std::filesystem::path data_dir, std::uint16_t base_port = 7051);

  const DomainConfig& domain(std::string_view domain_id) const;  // Error(UnknownDomain)
  const CaConfig& ca(std::string_view org_id) const;             // Error(ConfigError)

  Document to_document() const;
  // Throws Error(ConfigError).
  static NetworkConfig from_document(const Document& doc);
  void save(const std::filesystem::path& path) const;
  static NetworkConfig load(const std::filesystem::path& path);

  std::filesystem::path ca_path(std::string_view org_id) const;
  std::filesystem::path identity_path(std::string_view id) const;
  std::filesystem::path archive_path(std::string_view id) const;
  std::filesystem::path ddss_path(std::string_view domain_id) const;
};

// Result of a data request routed through an edge.
struct RetrievalResult {
  abac::AccessDecision decision;
  std::string grant_tx_id;
  std::uint64_t grant_height = 0;
  std::string served_by;  // domain whose DDSS released the bytes
  bool forwarded = false;
  contracts::DataEntry record;
  std::string payload;
  std::uint64_t served_height = 0;  // serving edge's ledger height at release
};

Document to_document(const RetrievalResult& result);
RetrievalResult retrieval_from_document(const Document& doc);

// Outcome of a submitted transaction as seen by the client.
struct SubmitResult {
  ledger::TxOutcome outcome;
  Document payload;  // parsed contract response when valid
};

// Signed proposal from a credential; args are serialized canonically.
ledger::Proposal make_proposal(const identity::Credential& who, ledger::ContractId contract, std::string function,
                               const std::vector<Document>& args, abac::Timestamp timestamp);

class Network;

class Edge {
 public:
  Edge(Network& network, DomainConfig config, std::unique_ptr<ledger::Peer> peer);

  const DomainConfig& config() const noexcept { return config_; }
  const std::string& domain_id() const noexcept { return config_.domain_id; }
  ledger::Peer& peer() noexcept { return *peer_; }
  const ledger::Peer& peer() const noexcept { return *peer_; }
  DdssStore& ddss() noexcept { return ddss_; }

  // Stores the payload and records its hash on chain. The gateway must be a
  // Peer-class identity of this domain (Error(Unauthorized) otherwise).
  contracts::DataEntry ingest(const identity::Credential& gateway, std::string_view payload,
                              std::string_view device_id, std::string_view data_type);
  // Same, from a RecordData proposal already signed by the gateway.
  contracts::DataEntry ingest_signed(const ledger::Proposal& record_data, std::string_view payload);

  // Commits a CheckAccess decision, then releases the latest record of the
  // device from the owning domain. Throws Error(AccessRejected) with the
  // rejection reason as detail, Error(GrantNotFound), Error(HashMismatch),
  // Error(DataNotFound) or Error(ForwardFailed).
  RetrievalResult handle_access(const identity::Credential& requester,
                                const contracts::AccessQuery& query);
  RetrievalResult handle_access_signed(const ledger::Proposal& check_access);

  // Destination side of a cross-domain request.
  Document serve_forward(const Document& request);

  // Fetches and validates blocks this edge is missing from another edge.
  // Returns how many blocks were committed. Throws Error(BrokenChain) and
  // keeps the local chain unchanged when a fetched block does not validate.
  std::size_t sync_from(const std::string& endpoint);
  // Tries every other edge in configuration order.
  std::size_t sync();

  // Orderer delivery entry point.
  void on_block(const ledger::Block& block);
  // While paused, delivered blocks are dropped (simulated downtime).
  void set_delivery_paused(bool paused) { paused_.store(paused); }

  wire::Message handle(const wire::Message& message);

 private:
  std::optional<contracts::DataEntry> latest_record(const abac::ObjectRef& object) const;
  RetrievalResult release_local(const abac::ObjectRef& object, RetrievalResult result);
  RetrievalResult forward(const abac::ObjectRef& object, RetrievalResult result);

  Network& network_;
  DomainConfig config_;
  std::unique_ptr<ledger::Peer> peer_;
  DdssStore ddss_;
  std::mutex commit_mutex_;
  std::atomic<bool> paused_{false};
};

class Network {
 public:
  enum class TransportKind { Loopback, Tcp };

  struct Options {
    // Threaded ordering cuts blocks on the orderer's timer. Without it,
    // submit() flushes the orderer itself.
    bool threaded_ordering = true;
    TransportKind transport = TransportKind::Loopback;
    ClockFn clock;  // defaults to system_clock_seconds
    std::chrono::milliseconds commit_timeout{10000};
  };

  // Creates CA state, identities and genesis archives under data_dir.
  // Throws Error(ConfigError) when the directory is already initialized.
  static void bootstrap(const NetworkConfig& config);
  static bool is_initialized(const std::filesystem::path& data_dir);

  // Loads a bootstrapped network, bootstrapping first when needed.
  Network(NetworkConfig config, Options options);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const NetworkConfig& config() const noexcept { return config_; }
  abac::Timestamp now() const { return clock_(); }

  Edge& edge(std::string_view domain_id);
  std::vector<Edge*> edges();
  identity::CertificateAuthority& ca(std::string_view org_id);
  const identity::TrustStore& trust() const noexcept { return *trust_; }
  ledger::Sequencer& sequencer() noexcept { return *sequencer_; }
  ledger::Channel& channel() noexcept { return *channel_; }
  wire::Transport& transport() noexcept { return *transport_; }
  const ledger::EndorsementPolicy& policy() const noexcept { return *policy_; }

  // Registrar credential for an organization (enrolled on first use).
  const identity::Credential& registrar(std::string_view org_id);
  // Registers and enrolls in one step.
  identity::Credential register_and_enroll(std::string_view org_id, const std::string& id,
                                           identity::RoleClass role,
                                           const abac::SubjectAttributes& attributes);
  const identity::Credential& gateway(std::string_view domain_id);

  ledger::Proposal proposal(const identity::Credential& who, ledger::ContractId contract,
                            std::string function, const std::vector<Document>& args) const;

  // Endorses, orders and waits for commit on `via`. Contract errors from
  // endorsement propagate as dbcabac::Error.
  SubmitResult submit(const ledger::Proposal& proposal, Edge& via);
  // Convenience: builds the proposal, submits through the caller's home
  // edge, and throws Error(LedgerError) when the transaction is invalidated.
  Document call(const identity::Credential& who, ledger::ContractId contract,
                std::string function, const std::vector<Document>& args);
  // Read-only evaluation on one peer.
  Document evaluate(const ledger::Proposal& proposal, Edge& via);

  // Edge whose organization issued the credential, else the first edge.
  Edge& home_edge(const identity::Credential& who);

  // Serves every edge on its configured endpoint (TCP transport only).
  void listen();
  void shutdown();
  bool shutdown_requested() const noexcept { return shutdown_requested_.load(); }
  void request_shutdown() noexcept { shutdown_requested_.store(true); }

  // Quiesces ordering: flushes pending transactions and waits until every
  // edge has caught up with the orderer.
  void settle(std::chrono::milliseconds timeout = std::chrono::seconds(5));

  // Client protocol entry point shared by every edge.
  wire::Message handle_client(Edge& edge, const wire::Message& message);

 private:
  NetworkConfig config_;
  Options options_;
  ClockFn clock_;
  std::map<std::string, std::unique_ptr<identity::CertificateAuthority>, std::less<>> cas_;
  std::map<std::string, identity::Credential, std::less<>> registrars_;
  std::map<std::string, identity::Credential, std::less<>> gateways_;
  std::shared_ptr<identity::TrustStore> trust_;
  std::shared_ptr<contracts::MemberDirectory> members_;
  std::unique_ptr<ledger::EndorsementPolicy> policy_;
  std::unique_ptr<ledger::Sequencer> sequencer_;
  std::vector<std::unique_ptr<Edge>> edges_;
  std::unique_ptr<ledger::Channel> channel_;
  std::shared_ptr<wire::Transport> transport_;
  std::vector<std::unique_ptr<wire::TcpServer>> servers_;
  std::mutex mutex_;
  std::mutex flush_mutex_;
  std::atomic<bool> shutdown_requested_{false};
  bool stopped_ = false;
};

}  // namespace dbcabac::domains
