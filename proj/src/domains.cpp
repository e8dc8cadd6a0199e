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

#include "dbcabac/domains.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>
#include <tuple>

#include "dbcabac/crypto.hpp"
#include "dbcabac/error.hpp"

namespace dbcabac::domains {
namespace fs = std::filesystem;
using identity::Credential;
using identity::RoleClass;

abac::Timestamp system_clock_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

bool is_hex_digest(std::string_view text) {
  return text.size() == crypto::kHashSize * 2 &&
         std::all_of(text.begin(), text.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

const Document& field(const Document& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw Error(ErrorCode::ConfigError, std::string("missing field ") + name);
  return *it;
}

std::string string_field(const Document& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_string()) throw Error(ErrorCode::ConfigError, std::string(name) + " must be a string");
  return v.get<std::string>();
}

std::string request_string(const Document& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRequest, std::string(name) + " must be a string");
  }
  return it->get<std::string>();
}

abac::ObjectRef object_ref_from(const Document& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedRequest, "object_ref must be an object");
  return {request_string(doc, "device_id"), request_string(doc, "domain_id")};
}

Document object_ref_doc(const abac::ObjectRef& ref) {
  return {{"device_id", ref.device_id}, {"domain_id", ref.domain_id}};
}

Document envelope_ok(const Document& payload) { return contracts::ok_envelope(payload); }

// Throws the error carried by an error envelope.
[[noreturn]] void raise_envelope(const Document& envelope, ErrorCode fallback) {
  std::string code = fallback == ErrorCode::ForwardFailed ? "ForwardFailed" : "NetworkError";
  std::string message = "error response";
  if (envelope.is_object() && envelope.contains("error") && envelope["error"].is_object()) {
    const auto& e = envelope["error"];
    if (e.contains("code") && e["code"].is_string()) code = e["code"].get<std::string>();
    if (e.contains("message") && e["message"].is_string()) message = e["message"].get<std::string>();
  }
  ErrorCode parsed = fallback;
  try {
    parsed = error_code_from_name(code);
  } catch (const std::invalid_argument&) {
  }
  throw Error(parsed, message);
}

const Document& envelope_payload(const wire::Message& response, ErrorCode fallback) {
  if (response.type == wire::MessageType::Error) {
    raise_envelope({{"error", response.body}}, fallback);
  }
  const auto& envelope = response.body.contains("envelope") ? response.body["envelope"] : response.body;
  if (!envelope.is_object() || !envelope.contains("status") || envelope["status"] != "ok") {
    raise_envelope(envelope, fallback);
  }
  return envelope["payload"];
}

void require_call(const ledger::Proposal& p, ledger::ContractId contract, std::string_view function) {
  if (p.contract != contract || p.function != function || p.args.size() != 1) {
    throw Error(ErrorCode::MalformedRequest,
                "expected " + std::string(ledger::to_string(contract)) + "." + std::string(function));
  }
}

Document parse_arg(std::string_view arg) {
  try {
    return parse_document(arg);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::MalformedRequest, e.what());
  }
}

identity::IdentityCertificate submitter_cert(const ledger::Proposal& p) {
  try {
    return identity::certificate_from_document(parse_document(p.submitter));
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadCertificate, "submitter certificate is malformed");
  }
}

// Enrollment lookups consult the in-memory CAs first, then the CA files on
// disk so identities enrolled by other processes are visible.
class CaDirectory final : public contracts::MemberDirectory {
 public:
  using Lookup = std::function<bool(std::string_view)>;
  explicit CaDirectory(Lookup in_memory, std::vector<fs::path> files)
      : in_memory_(std::move(in_memory)), files_(std::move(files)) {}

  bool is_enrolled(std::string_view user_id) const override {
    if (in_memory_(user_id)) return true;
    for (const auto& path : files_) {
      std::error_code ec;
      if (!fs::exists(path, ec)) continue;
      try {
        if (identity::CertificateAuthority::load(path).is_enrolled(user_id)) return true;
      } catch (const Error&) {
        continue;
      }
    }
    return false;
  }

 private:
  Lookup in_memory_;
  std::vector<fs::path> files_;
};

}  // namespace

// ---------------------------------------------------------------- DdssStore

DdssStore::DdssStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path DdssStore::path_for(std::string_view content_hash) const {
  return root_ / std::string(content_hash);
}

std::string DdssStore::put(std::string_view payload) {
  std::string hash = crypto::sha256_hex(payload);
  fs::path path = path_for(hash);
  std::error_code ec;
  if (fs::exists(path, ec) && crypto::sha256_hex(read_file(path)) == hash) return hash;
  write_file_atomic(path, payload);
  return hash;
}

std::string DdssStore::get(std::string_view content_hash) const {
  if (!is_hex_digest(content_hash)) {
    throw Error(ErrorCode::MalformedRequest, "content hash must be 64 lowercase hex digits");
  }
  fs::path path = path_for(content_hash);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::DataNotFound, std::string(content_hash));
  std::string bytes = read_file(path);
  if (crypto::sha256_hex(bytes) != content_hash) {
    throw Error(ErrorCode::HashMismatch, "stored bytes for " + std::string(content_hash) +
                                             " do not match their hash");
  }
  return bytes;
}

bool DdssStore::contains(std::string_view content_hash) const {
  std::error_code ec;
  return is_hex_digest(content_hash) && fs::exists(path_for(content_hash), ec);
}

// ------------------------------------------------------------ NetworkConfig

NetworkConfig NetworkConfig::reference(fs::path data_dir, std::uint16_t base_port) {
  NetworkConfig c;
  c.data_dir = std::move(data_dir);
  c.cas = {
      {"org1", "ca.org1", "admin-org1", "adminpw-org1"},
      {"org2", "ca.org2", "admin-org2", "adminpw-org2"},
      {"ordererOrg", "ca.ordererOrg", "admin-ordererOrg", "adminpw-ordererOrg"},
  };
  c.domains = {
      {"domA", "org1", "peer0.org1", "gateway.domA", "127.0.0.1:" + std::to_string(base_port)},
      {"domB", "org2", "peer0.org2", "gateway.domB", "127.0.0.1:" + std::to_string(base_port + 1)},
  };
  return c;
}

const DomainConfig& NetworkConfig::domain(std::string_view domain_id) const {
  for (const auto& d : domains) {
    if (d.domain_id == domain_id) return d;
  }
  throw Error(ErrorCode::UnknownDomain, std::string(domain_id));
}

const CaConfig& NetworkConfig::ca(std::string_view org_id) const {
  for (const auto& c : cas) {
    if (c.org_id == org_id) return c;
  }
  throw Error(ErrorCode::ConfigError, "no CA for organization " + std::string(org_id));
}

Document NetworkConfig::to_document() const {
  Document cas_doc = Document::array();
  for (const auto& c : cas) {
    cas_doc.push_back({{"org_id", c.org_id},
                       {"ca_id", c.ca_id},
                       {"registrar_id", c.registrar_id},
                       {"registrar_secret", c.registrar_secret}});
  }
  Document domains_doc = Document::array();
  for (const auto& d : domains) {
    domains_doc.push_back({{"domain_id", d.domain_id},
                           {"org_id", d.org_id},
                           {"peer_id", d.peer_id},
                           {"gateway_id", d.gateway_id},
                           {"endpoint", d.endpoint}});
  }
  return {{"channel", channel},
          {"data_dir", data_dir.string()},
          {"cas", cas_doc},
          {"domains", domains_doc},
          {"orderer_org", orderer_org},
          {"orderer_id", orderer_id},
          {"endorsers", endorsers},
          {"max_block_txs", max_block_txs},
          {"block_timeout_ms", block_timeout.count()}};
}

NetworkConfig NetworkConfig::from_document(const Document& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "network config must be an object");
  NetworkConfig c;
  try {
    c.channel = string_field(doc, "channel");
    c.data_dir = string_field(doc, "data_dir");
    for (const auto& ca : field(doc, "cas")) {
      c.cas.push_back({string_field(ca, "org_id"), string_field(ca, "ca_id"),
                       string_field(ca, "registrar_id"), string_field(ca, "registrar_secret")});
    }
    for (const auto& d : field(doc, "domains")) {
      c.domains.push_back({string_field(d, "domain_id"), string_field(d, "org_id"),
                           string_field(d, "peer_id"), string_field(d, "gateway_id"),
                           string_field(d, "endpoint")});
    }
    c.orderer_org = string_field(doc, "orderer_org");
    c.orderer_id = string_field(doc, "orderer_id");
    if (doc.contains("endorsers")) c.endorsers = doc["endorsers"].get<std::vector<std::string>>();
    if (doc.contains("max_block_txs")) c.max_block_txs = doc["max_block_txs"].get<std::size_t>();
    if (doc.contains("block_timeout_ms")) {
      c.block_timeout = std::chrono::milliseconds(doc["block_timeout_ms"].get<std::int64_t>());
    }
  } catch (const Document::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (c.domains.empty()) throw Error(ErrorCode::ConfigError, "at least one domain is required");
  if (c.max_block_txs == 0) throw Error(ErrorCode::ConfigError, "max_block_txs must be positive");
  if (c.block_timeout.count() <= 0) throw Error(ErrorCode::ConfigError, "block_timeout_ms must be positive");
  for (const auto& d : c.domains) {
    c.ca(d.org_id);
    wire::parse_endpoint(d.endpoint);
  }
  c.ca(c.orderer_org);
  return c;
}

void NetworkConfig::save(const fs::path& path) const {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  write_file_atomic(path, to_document().dump(2) + "\n");
}

NetworkConfig NetworkConfig::load(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::ConfigError, "no network config at " + path.string());
  NetworkConfig c;
  try {
    c = from_document(parse_document(read_file(path)));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  if (c.data_dir.is_relative()) c.data_dir = fs::absolute(path).parent_path() / c.data_dir;
  return c;
}

fs::path NetworkConfig::ca_path(std::string_view org_id) const {
  return data_dir / "ca" / (std::string(org_id) + ".json");
}
fs::path NetworkConfig::identity_path(std::string_view id) const {
  return data_dir / "identities" / (std::string(id) + ".id");
}
fs::path NetworkConfig::archive_path(std::string_view id) const {
  return data_dir / "ledger" / (std::string(id) + ".blocks");
}
fs::path NetworkConfig::ddss_path(std::string_view domain_id) const {
  return data_dir / "ddss" / std::string(domain_id);
}

// ---------------------------------------------------------- RetrievalResult

Document to_document(const RetrievalResult& r) {
  return {{"decision", abac::to_document(r.decision)},
          {"grant_tx_id", r.grant_tx_id},
          {"grant_height", r.grant_height},
          {"served_by", r.served_by},
          {"forwarded", r.forwarded},
          {"record", contracts::to_document(r.record)},
          {"payload_hex", crypto::to_hex(r.payload)},
          {"served_height", r.served_height}};
}

RetrievalResult retrieval_from_document(const Document& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::MalformedRequest, "retrieval result must be an object");
  RetrievalResult r;
  try {
    r.decision = abac::decision_from_document(doc.at("decision"));
    r.grant_tx_id = doc.at("grant_tx_id").get<std::string>();
    r.grant_height = doc.at("grant_height").get<std::uint64_t>();
    r.served_by = doc.at("served_by").get<std::string>();
    r.forwarded = doc.at("forwarded").get<bool>();
    r.record = contracts::data_entry_from_document(doc.at("record"));
    auto bytes = crypto::from_hex(doc.at("payload_hex").get<std::string>());
    if (!bytes) throw Error(ErrorCode::MalformedRequest, "payload_hex is not hex");
    r.payload = std::move(*bytes);
    r.served_height = doc.at("served_height").get<std::uint64_t>();
  } catch (const Document::exception& e) {
    throw Error(ErrorCode::MalformedRequest, e.what());
  }
  return r;
}

// --------------------------------------------------------------------- Edge

Edge::Edge(Network& network, DomainConfig config, std::unique_ptr<ledger::Peer> peer)
    : network_(network),
      config_(std::move(config)),
      peer_(std::move(peer)),
      ddss_(network.config().ddss_path(config_.domain_id)) {}

contracts::DataEntry Edge::ingest(const Credential& gateway, std::string_view payload,
                                  std::string_view device_id, std::string_view data_type) {
  contracts::DataEntry entry{std::string(device_id), domain_id(), std::string(data_type),
                             crypto::sha256_hex(payload), network_.now()};
  auto proposal = network_.proposal(gateway, ledger::ContractId::AccessContract, "RecordData",
                                    {contracts::to_document(entry)});
  return ingest_signed(proposal, payload);
}

contracts::DataEntry Edge::ingest_signed(const ledger::Proposal& record_data, std::string_view payload) {
  require_call(record_data, ledger::ContractId::AccessContract, "RecordData");
  auto entry = contracts::data_entry_from_document(parse_arg(record_data.args[0]));
  auto gateway = submitter_cert(record_data);
  if (!identity::verify(gateway, network_.trust()).ok()) {
    throw Error(ErrorCode::BadCertificate, gateway.subject_id);
  }
  if (gateway.role_class != RoleClass::Peer || gateway.attributes.domain_id != domain_id() ||
      entry.domain_id != domain_id()) {
    throw Error(ErrorCode::Unauthorized, gateway.subject_id + " is not a gateway of " + domain_id());
  }
  if (crypto::sha256_hex(payload) != entry.content_hash) {
    throw Error(ErrorCode::HashMismatch, "payload does not hash to the recorded content_hash");
  }
  ddss_.put(payload);
  auto result = network_.submit(record_data, *this);
  if (!result.outcome.valid) {
    throw Error(ErrorCode::LedgerError, "RecordData invalidated: " + result.outcome.reason);
  }
  return entry;
}

RetrievalResult Edge::handle_access(const Credential& requester, const contracts::AccessQuery& query) {
  auto proposal = network_.proposal(requester, ledger::ContractId::AccessContract, "CheckAccess",
                                    {contracts::to_document(query)});
  return handle_access_signed(proposal);
}

RetrievalResult Edge::handle_access_signed(const ledger::Proposal& check_access) {
  require_call(check_access, ledger::ContractId::AccessContract, "CheckAccess");
  auto query = contracts::access_query_from_document(parse_arg(check_access.args[0]));
  if (query.operation != abac::Operation::Read) {
    throw Error(ErrorCode::MalformedRequest, "data retrieval requires a read operation");
  }
  auto submitted = network_.submit(check_access, *this);
  if (!submitted.outcome.valid) {
    throw Error(ErrorCode::LedgerError, "CheckAccess invalidated: " + submitted.outcome.reason);
  }
  RetrievalResult result;
  result.decision = abac::decision_from_document(submitted.payload);
  result.grant_tx_id = submitted.outcome.tx_id;
  result.grant_height = submitted.outcome.block_height;
  if (!result.decision.approved()) {
    throw Error(ErrorCode::AccessRejected, std::string(abac::to_string(result.decision.reason)));
  }
  if (query.object_ref.domain_id == domain_id()) return release_local(query.object_ref, std::move(result));
  return forward(query.object_ref, std::move(result));
}

std::optional<contracts::DataEntry> Edge::latest_record(const abac::ObjectRef& object) const {
  std::string prefix = std::string(contracts::kDataPrefix) + object.domain_id + "/" + object.device_id + "/";
  std::optional<contracts::DataEntry> best;
  for (const auto& [key, value] : peer_->ledger().scan(prefix)) {
    auto entry = contracts::data_entry_from_document(parse_document(value.value));
    if (!best || std::tie(entry.produced_at, entry.content_hash) >
                     std::tie(best->produced_at, best->content_hash)) {
      best = std::move(entry);
    }
  }
  return best;
}

RetrievalResult Edge::release_local(const abac::ObjectRef& object, RetrievalResult result) {
  auto record = latest_record(object);
  if (!record) {
    throw Error(ErrorCode::DataNotFound, "no data recorded for " + object.domain_id + "/" + object.device_id);
  }
  result.payload = ddss_.get(record->content_hash);
  result.record = std::move(*record);
  result.served_by = domain_id();
  result.forwarded = false;
  result.served_height = peer_->ledger().height();
  return result;
}

RetrievalResult Edge::forward(const abac::ObjectRef& object, RetrievalResult result) {
  const auto& destination = network_.config().domain(object.domain_id);
  // TODO: sign forward requests with the edge's peer key so destinations can
  // authenticate the relaying edge, not just the grant.
  wire::Message request{wire::MessageType::ForwardRequest,
                        {{"grant_tx_id", result.grant_tx_id},
                         {"object_ref", object_ref_doc(object)},
                         {"requester_domain", domain_id()}}};
  wire::Message response;
  try {
    response = network_.transport().request(destination.endpoint, request);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NetworkError) throw;
    throw Error(ErrorCode::ForwardFailed, destination.domain_id + " unreachable: " + e.detail());
  }
  const Document& payload = envelope_payload(response, ErrorCode::ForwardFailed);
  contracts::DataEntry record;
  std::optional<std::string> bytes;
  std::uint64_t served_height = 0;
  try {
    record = contracts::data_entry_from_document(payload.at("record"));
    bytes = crypto::from_hex(payload.at("payload_hex").get<std::string>());
    served_height = payload.at("served_height").get<std::uint64_t>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ForwardFailed, std::string("malformed forward response: ") + e.what());
  }
  if (!bytes) throw Error(ErrorCode::ForwardFailed, "payload is not hex");
  if (record.domain_id != object.domain_id || record.device_id != object.device_id) {
    throw Error(ErrorCode::ForwardFailed, "destination returned a record for another object");
  }
  if (crypto::sha256_hex(*bytes) != record.content_hash) {
    throw Error(ErrorCode::HashMismatch, "forwarded payload does not match its content hash");
  }
  auto anchor = contracts::data_key(record.domain_id, record.device_id, record.content_hash);
  if (!peer_->ledger().get_state(anchor)) {
    sync();
    if (!peer_->ledger().get_state(anchor)) {
      throw Error(ErrorCode::HashMismatch, "forwarded content hash is not recorded on chain");
    }
  }
  result.payload = std::move(*bytes);
  result.record = std::move(record);
  result.served_by = destination.domain_id;
  result.forwarded = true;
  result.served_height = served_height;
  return result;
}

Document Edge::serve_forward(const Document& request) {
  if (!request.is_object()) throw Error(ErrorCode::MalformedRequest, "forward request must be an object");
  auto grant_tx_id = request_string(request, "grant_tx_id");
  auto object = object_ref_from(request.contains("object_ref") ? request["object_ref"] : Document());
  if (object.domain_id != domain_id()) {
    throw Error(ErrorCode::MalformedRequest, object.domain_id + " is not served by " + domain_id());
  }
  auto key = contracts::audit_key(grant_tx_id);
  auto audit = peer_->ledger().get_state(key);
  if (!audit) {
    try {
      sync();
    } catch (const Error&) {
      // Fall through: a failed catch-up means the grant is still unknown here.
    }
    audit = peer_->ledger().get_state(key);
  }
  if (!audit) throw Error(ErrorCode::GrantNotFound, grant_tx_id);
  auto record = contracts::audit_from_document(parse_document(audit->value));
  if (!record.decision.approved() || record.request.object_ref != object ||
      record.request.operation != abac::Operation::Read) {
    throw Error(ErrorCode::GrantNotFound, grant_tx_id + " does not grant read on " + object.domain_id +
                                              "/" + object.device_id);
  }
  auto served = release_local(object, RetrievalResult{});
  return {{"record", contracts::to_document(served.record)},
          {"payload_hex", crypto::to_hex(served.payload)},
          {"served_height", served.served_height},
          {"grant_height", audit->version.block_height}};
}

std::size_t Edge::sync_from(const std::string& endpoint) {
  std::lock_guard lock(commit_mutex_);
  auto& ledger = peer_->ledger();
  std::uint64_t from = ledger.height() + 1;
  auto response = network_.transport().request(
      endpoint, wire::Message{wire::MessageType::BlockFetch, {{"from_height", from}}});
  if (response.type != wire::MessageType::BlockResponse) {
    throw Error(ErrorCode::NetworkError, "unexpected reply to BlockFetch from " + endpoint);
  }
  std::vector<ledger::Block> blocks;
  try {
    for (const auto& doc : response.body.at("blocks")) blocks.push_back(ledger::block_from_document(doc));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BrokenChain, std::string("malformed block from ") + endpoint + ": " + e.what());
  }
  if (blocks.empty()) return 0;
  if (auto check = ledger::verify_segment(blocks, from, ledger.tip_hash()); !check.ok) {
    throw Error(ErrorCode::BrokenChain, "fetched block " + std::to_string(check.broken_height.value_or(0)) +
                                            " does not verify: " + check.detail);
  }
  std::size_t committed = 0;
  for (const auto& block : blocks) {
    peer_->deliver(block);
    ++committed;
  }
  return committed;
}

std::size_t Edge::sync() {
  std::size_t total = 0;
  for (const auto& other : network_.config().domains) {
    if (other.domain_id == domain_id()) continue;
    try {
      total += sync_from(other.endpoint);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NetworkError) throw;
    }
  }
  return total;
}

void Edge::on_block(const ledger::Block& block) {
  if (paused_.load()) return;
  auto height = peer_->ledger().height();
  if (block.height <= height) return;
  if (block.height > height + 1) sync();
  std::lock_guard lock(commit_mutex_);
  if (block.height != peer_->ledger().height() + 1) return;
  peer_->deliver(block);
}

wire::Message Edge::handle(const wire::Message& message) {
  using wire::MessageType;
  switch (message.type) {
    case MessageType::ForwardRequest:
      try {
        return {MessageType::ForwardResponse, {{"envelope", envelope_ok(serve_forward(message.body))}}};
      } catch (const Error& e) {
        return {MessageType::ForwardResponse, {{"envelope", contracts::error_envelope(e)}}};
      }
    case MessageType::BlockFetch: {
      std::uint64_t from = 0;
      if (message.body.contains("from_height") && message.body["from_height"].is_number_unsigned()) {
        from = message.body["from_height"].get<std::uint64_t>();
      }
      Document blocks = Document::array();
      for (const auto& block : peer_->ledger().blocks(from)) blocks.push_back(ledger::to_document(block));
      return {MessageType::BlockResponse, {{"blocks", blocks}}};
    }
    default:
      return network_.handle_client(*this, message);
  }
}

// ------------------------------------------------------------------ Network

bool Network::is_initialized(const fs::path& data_dir) {
  std::error_code ec;
  return fs::exists(data_dir / "network.json", ec);
}

void Network::bootstrap(const NetworkConfig& config) {
  if (config.data_dir.empty()) throw Error(ErrorCode::ConfigError, "data_dir is required");
  if (is_initialized(config.data_dir)) {
    throw Error(ErrorCode::ConfigError, config.data_dir.string() + " is already initialized");
  }
  for (const char* sub : {"ca", "identities", "ledger", "ddss"}) fs::create_directories(config.data_dir / sub);

  std::map<std::string, identity::CertificateAuthority, std::less<>> cas;
  std::map<std::string, Credential, std::less<>> registrars;
  for (const auto& c : config.cas) {
    auto [it, inserted] = cas.emplace(c.org_id, identity::CertificateAuthority(c.ca_id, c.org_id,
                                                                               c.registrar_id, c.registrar_secret));
    if (!inserted) throw Error(ErrorCode::ConfigError, "duplicate CA for " + c.org_id);
    registrars.emplace(c.org_id, it->second.enroll_admin(c.registrar_id, c.registrar_secret));
  }
  auto issue = [&](const std::string& org, const std::string& id, RoleClass role, const std::string& role_name,
                   const std::string& domain) {
    auto& ca = cas.at(org);
    auto secret = ca.register_identity(registrars.at(org), id, role, {id, role_name, domain});
    ca.enroll(id, secret).save(config.identity_path(id));
  };
  issue(config.orderer_org, config.orderer_id, RoleClass::Orderer, "orderer", config.orderer_org);
  for (const auto& d : config.domains) {
    issue(d.org_id, d.peer_id, RoleClass::Peer, "peer", d.domain_id);
    issue(d.org_id, d.gateway_id, RoleClass::Peer, "gateway", d.domain_id);
    fs::create_directories(config.ddss_path(d.domain_id));
  }
  for (const auto& [org, ca] : cas) ca.save(config.ca_path(org));
  config.save(config.data_dir / "network.json");
}

Network::Network(NetworkConfig config, Options options)
    : config_(std::move(config)), options_(std::move(options)) {
  clock_ = options_.clock ? options_.clock : ClockFn(system_clock_seconds);
  if (!is_initialized(config_.data_dir)) bootstrap(config_);

  trust_ = std::make_shared<identity::TrustStore>();
  std::vector<fs::path> ca_files;
  for (const auto& c : config_.cas) {
    auto ca = std::make_unique<identity::CertificateAuthority>(
        identity::CertificateAuthority::load(config_.ca_path(c.org_id)));
    trust_->add(c.org_id, ca->trusted());
    ca_files.push_back(config_.ca_path(c.org_id));
    cas_.emplace(c.org_id, std::move(ca));
  }
  members_ = std::make_shared<CaDirectory>(
      [this](std::string_view id) {
        return std::any_of(cas_.begin(), cas_.end(), [id](const auto& kv) { return kv.second->is_enrolled(id); });
      },
      std::move(ca_files));

  std::map<std::string, Credential> peer_credentials;
  std::map<std::string, crypto::PublicKey> endorser_keys;
  for (const auto& d : config_.domains) {
    auto cred = Credential::load(config_.identity_path(d.peer_id));
    bool required = config_.endorsers.empty() ||
                    std::find(config_.endorsers.begin(), config_.endorsers.end(), d.peer_id) != config_.endorsers.end();
    if (required) endorser_keys[d.peer_id] = cred.cert.public_key;
    peer_credentials.emplace(d.peer_id, std::move(cred));
  }
  for (const auto& e : config_.endorsers) {
    if (!peer_credentials.count(e)) throw Error(ErrorCode::ConfigError, "unknown endorser " + e);
  }
  policy_ = std::make_unique<ledger::EndorsementPolicy>(endorser_keys);
  auto registry = contracts::make_registry({trust_, members_});

  std::vector<ledger::Peer*> peers;
  for (const auto& d : config_.domains) {
    const auto& cred = peer_credentials.at(d.peer_id);
    auto peer = std::make_unique<ledger::Peer>(d.peer_id, crypto::KeyPair{cred.cert.public_key, cred.secret_key},
                                               registry, *policy_, config_.archive_path(d.peer_id));
    edges_.push_back(std::make_unique<Edge>(*this, d, std::move(peer)));
    peers.push_back(&edges_.back()->peer());
  }
  sequencer_ = std::make_unique<ledger::Sequencer>(
      ledger::Sequencer::Options{config_.max_block_txs, config_.block_timeout}, *policy_,
      config_.archive_path(config_.orderer_id));
  for (auto& edge : edges_) {
    Edge* e = edge.get();
    sequencer_->subscribe([e](const ledger::Block& block) { e->on_block(block); });
  }
  channel_ = std::make_unique<ledger::Channel>(peers, *sequencer_, *policy_);

  if (options_.transport == TransportKind::Loopback) {
    auto loopback = std::make_shared<wire::LoopbackTransport>();
    for (auto& edge : edges_) {
      Edge* e = edge.get();
      loopback->bind(e->config().endpoint, [e](const wire::Message& m) { return e->handle(m); });
    }
    transport_ = loopback;
  } else {
    transport_ = std::make_shared<wire::TcpTransport>();
  }
  if (options_.threaded_ordering) sequencer_->start();
}

Network::~Network() { shutdown(); }

void Network::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopped_) return;
    stopped_ = true;
  }
  for (auto& server : servers_) server->stop();
  servers_.clear();
  if (options_.threaded_ordering) sequencer_->stop();
}

void Network::listen() {
  if (options_.transport != TransportKind::Tcp) {
    throw Error(ErrorCode::ConfigError, "listen() requires the TCP transport");
  }
  for (auto& edge : edges_) {
    Edge* e = edge.get();
    servers_.push_back(std::make_unique<wire::TcpServer>(e->config().endpoint,
                                                         [e](const wire::Message& m) { return e->handle(m); }));
  }
}

Edge& Network::edge(std::string_view domain_id) {
  for (auto& e : edges_) {
    if (e->domain_id() == domain_id) return *e;
  }
  throw Error(ErrorCode::UnknownDomain, std::string(domain_id));
}

std::vector<Edge*> Network::edges() {
  std::vector<Edge*> out;
  for (auto& e : edges_) out.push_back(e.get());
  return out;
}

identity::CertificateAuthority& Network::ca(std::string_view org_id) {
  auto it = cas_.find(org_id);
  if (it == cas_.end()) throw Error(ErrorCode::ConfigError, "no CA for organization " + std::string(org_id));
  return *it->second;
}

const Credential& Network::registrar(std::string_view org_id) {
  std::lock_guard lock(mutex_);
  auto it = registrars_.find(org_id);
  if (it != registrars_.end()) return it->second;
  const auto& c = config_.ca(org_id);
  auto cred = ca(org_id).enroll_admin(c.registrar_id, c.registrar_secret);
  return registrars_.emplace(std::string(org_id), std::move(cred)).first->second;
}

Credential Network::register_and_enroll(std::string_view org_id, const std::string& id, RoleClass role,
                                        const abac::SubjectAttributes& attributes) {
  auto& authority = ca(org_id);
  auto secret = authority.register_identity(registrar(org_id), id, role, attributes);
  auto cred = authority.enroll(id, secret);
  authority.save(config_.ca_path(org_id));
  return cred;
}

const Credential& Network::gateway(std::string_view domain_id) {
  std::lock_guard lock(mutex_);
  auto it = gateways_.find(domain_id);
  if (it != gateways_.end()) return it->second;
  auto cred = Credential::load(config_.identity_path(config_.domain(domain_id).gateway_id));
  return gateways_.emplace(std::string(domain_id), std::move(cred)).first->second;
}

ledger::Proposal make_proposal(const Credential& who, ledger::ContractId contract, std::string function,
                               const std::vector<Document>& args, abac::Timestamp timestamp) {
  ledger::Proposal p;
  p.submitter = canonical(identity::to_document(who.cert));
  p.contract = contract;
  p.function = std::move(function);
  for (const auto& a : args) p.args.push_back(canonical(a));
  p.timestamp = timestamp;
  p.sign(who.secret_key);
  return p;
}

ledger::Proposal Network::proposal(const Credential& who, ledger::ContractId contract, std::string function,
                                   const std::vector<Document>& args) const {
  return make_proposal(who, contract, std::move(function), args, clock_());
}

SubmitResult Network::submit(const ledger::Proposal& proposal, Edge& via) {
  auto future = channel_->submit_async(proposal, via.peer());
  if (!options_.threaded_ordering) {
    std::lock_guard lock(flush_mutex_);
    sequencer_->flush();
  }
  if (future.wait_for(options_.commit_timeout) != std::future_status::ready) {
    throw Error(ErrorCode::LedgerError, "timed out waiting for commit of " + proposal.tx_id());
  }
  SubmitResult result{future.get(), nullptr};
  if (result.outcome.valid) result.payload = parse_document(result.outcome.response);
  return result;
}

Document Network::call(const Credential& who, ledger::ContractId contract, std::string function,
                       const std::vector<Document>& args) {
  auto result = submit(proposal(who, contract, std::move(function), args), home_edge(who));
  if (!result.outcome.valid) {
    throw Error(ErrorCode::LedgerError, "transaction invalidated: " + result.outcome.reason);
  }
  return result.payload;
}

Document Network::evaluate(const ledger::Proposal& proposal, Edge& via) {
  return parse_document(channel_->evaluate(proposal, via.peer()));
}

Edge& Network::home_edge(const Credential& who) {
  for (auto& e : edges_) {
    if (e->domain_id() == who.cert.attributes.domain_id) return *e;
  }
  for (auto& e : edges_) {
    if (e->config().org_id == who.cert.org_id) return *e;
  }
  return *edges_.front();
}

void Network::settle(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    {
      std::lock_guard lock(flush_mutex_);
      sequencer_->flush();
    }
    auto target = sequencer_->height();
    bool caught_up = std::all_of(edges_.begin(), edges_.end(),
                                 [target](const auto& e) { return e->peer().ledger().height() >= target; });
    if (caught_up && sequencer_->pending() == 0) return;
    if (std::chrono::steady_clock::now() > deadline) {
      throw Error(ErrorCode::LedgerError, "network did not settle");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

wire::Message Network::handle_client(Edge& edge, const wire::Message& message) {
  using wire::MessageType;
  auto proposal_arg = [&]() {
    try {
      return ledger::proposal_from_document(message.body.at("proposal"));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedRequest, std::string("bad proposal: ") + e.what());
    }
  };
  try {
    switch (message.type) {
      case MessageType::Submit: {
        auto p = proposal_arg();
        auto result = submit(p, edge);
        Document envelope = result.outcome.valid
                                ? envelope_ok(result.payload)
                                : contracts::error_envelope(Error(ErrorCode::LedgerError,
                                                                  "transaction invalidated: " + result.outcome.reason));
        return {MessageType::SubmitResponse,
                {{"tx_id", result.outcome.tx_id},
                 {"valid", result.outcome.valid},
                 {"block_height", result.outcome.block_height},
                 {"envelope", envelope}}};
      }
      case MessageType::Evaluate:
        return {MessageType::SubmitResponse, {{"envelope", envelope_ok(evaluate(proposal_arg(), edge))}}};
      case MessageType::DataGet:
        return {MessageType::DataGetResponse,
                {{"envelope", envelope_ok(to_document(edge.handle_access_signed(proposal_arg())))}}};
      case MessageType::Ingest: {
        auto bytes = crypto::from_hex(request_string(message.body, "payload_hex"));
        if (!bytes) throw Error(ErrorCode::MalformedRequest, "payload_hex is not hex");
        auto entry = edge.ingest_signed(proposal_arg(), *bytes);
        return {MessageType::SubmitResponse, {{"envelope", envelope_ok(contracts::to_document(entry))}}};
      }
      case MessageType::Status: {
        Document domains = Document::array();
        for (auto& e : edges_) {
          domains.push_back({{"domain_id", e->domain_id()},
                             {"peer_id", e->peer().id()},
                             {"height", e->peer().ledger().height()},
                             {"tip_hash", e->peer().ledger().tip_hash()}});
        }
        return {MessageType::StatusResponse,
                {{"envelope", envelope_ok({{"domains", domains}, {"orderer_height", sequencer_->height()}})}}};
      }
      case MessageType::Shutdown:
        request_shutdown();
        return {MessageType::StatusResponse, {{"envelope", envelope_ok("stopping")}}};
      default:
        throw Error(ErrorCode::MalformedRequest,
                    "unexpected message type " + std::string(wire::to_string(message.type)));
    }
  } catch (const Error& e) {
    return {MessageType::Error, {{"envelope", contracts::error_envelope(e)}}};
  }
}

}  // namespace dbcabac::domains
