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

#include "dbcabac/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "dbcabac/error.hpp"

namespace dbcabac::ledger {
namespace {

Document version_doc(const std::optional<Version>& v) {
  if (!v) return nullptr;
  return Document::array({v->block_height, v->tx_index});
}

std::optional<Version> version_from(const Document& doc) {
  if (doc.is_null()) return std::nullopt;
  if (!doc.is_array() || doc.size() != 2) throw std::invalid_argument("bad version");
  return Version{doc[0].get<std::uint64_t>(), doc[1].get<std::uint32_t>()};
}

Document header_doc(const Proposal& p) {
  return {{"submitter", p.submitter},   {"contract", to_string(p.contract)},
          {"function", p.function},     {"args", p.args},
          {"timestamp", p.timestamp},   {"nonce", p.nonce}};
}

Document block_body(const Block& b) {
  Document txs = Document::array();
  for (const auto& tx : b.txs) txs.push_back(to_document(tx));
  Document validity = Document::array();
  for (bool v : b.validity) validity.push_back(v ? 1 : 0);
  return {{"height", b.height}, {"prev_hash", b.prev_hash}, {"txs", txs}, {"validity", validity}};
}

template <typename F>
auto schema_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("schema error: ") + e.what());
  }
}

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

// Parses archive bytes into blocks; stops at the first record that does not
// decode and reports its index.
struct ArchiveRead {
  std::vector<Block> blocks;
  std::optional<std::uint64_t> bad_record;
  std::string detail;
};

ArchiveRead read_archive(const std::filesystem::path& path) {
  ArchiveRead out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto index = out.blocks.size();
    if (bytes.size() - pos < 4) {
      out.bad_record = index;
      out.detail = "truncated length prefix";
      return out;
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<std::uint8_t>(bytes[pos + i]);
    pos += 4;
    if (bytes.size() - pos < len) {
      out.bad_record = index;
      out.detail = "truncated record";
      return out;
    }
    try {
      out.blocks.push_back(block_from_document(parse_canonical(std::string_view(bytes).substr(pos, len))));
    } catch (const std::exception& e) {
      out.bad_record = index;
      out.detail = e.what();
      return out;
    }
    pos += len;
  }
  return out;
}

}  // namespace

std::string_view to_string(ContractId id) noexcept {
  return id == ContractId::PolicyContract ? "PolicyContract" : "AccessContract";
}

std::optional<ContractId> parse_contract(std::string_view text) {
  if (text == "PolicyContract") return ContractId::PolicyContract;
  if (text == "AccessContract") return ContractId::AccessContract;
  return std::nullopt;
}

std::string Proposal::tx_id() const { return crypto::sha256_hex(canonical(header_doc(*this))); }

void Proposal::sign(const crypto::SecretKey& key) {
  if (nonce.empty()) nonce = crypto::random_token(12);
  creator_signature = crypto::to_hex(crypto::sign(key, tx_id()));
}

std::string endorsement_payload(std::string_view tx_id, std::string_view response,
                                const ReadWriteSet& rwset) {
  return canonical({{"tx_id", tx_id}, {"response", response}, {"rwset", to_document(rwset)}});
}

std::string zero_hash() { return std::string(crypto::kHashSize * 2, '0'); }

std::string Block::compute_hash() const { return crypto::sha256_hex(canonical(block_body(*this))); }

Document to_document(const ReadWriteSet& rw) {
  Document reads = Document::array(), ranges = Document::array(), writes = Document::array();
  for (const auto& r : rw.reads) reads.push_back(Document::array({r.key, version_doc(r.version)}));
  for (const auto& r : rw.ranges) ranges.push_back(Document::array({r.prefix, r.digest}));
  for (const auto& w : rw.writes) {
    writes.push_back(Document::array({w.key, w.value ? Document(*w.value) : Document(nullptr)}));
  }
  return {{"reads", reads}, {"ranges", ranges}, {"writes", writes}};
}

Document to_document(const Proposal& p) {
  auto doc = header_doc(p);
  doc["creator_signature"] = p.creator_signature;
  return doc;
}

Document to_document(const Transaction& tx) {
  Document endorsements = Document::array();
  for (const auto& e : tx.endorsements) endorsements.push_back(Document::array({e.peer_id, e.signature}));
  return {{"tx_id", tx.tx_id},
          {"proposal", to_document(tx.proposal)},
          {"response", tx.response},
          {"rwset", to_document(tx.rwset)},
          {"endorsements", endorsements}};
}

Document to_document(const Block& b) {
  auto doc = block_body(b);
  doc["block_hash"] = b.block_hash;
  return doc;
}

ReadWriteSet rwset_from_document(const Document& doc) {
  return schema_guard([&] {
    ReadWriteSet rw;
    for (const auto& r : doc.at("reads")) rw.reads.push_back({r.at(0).get<std::string>(), version_from(r.at(1))});
    for (const auto& r : doc.at("ranges")) rw.ranges.push_back({r.at(0), r.at(1)});
    for (const auto& w : doc.at("writes")) {
      std::optional<std::string> value;
      if (!w.at(1).is_null()) value = w.at(1).get<std::string>();
      rw.writes.push_back({w.at(0).get<std::string>(), std::move(value)});
    }
    return rw;
  });
}

Proposal proposal_from_document(const Document& doc) {
  return schema_guard([&] {
    Proposal p;
    p.submitter = doc.at("submitter");
    auto contract = parse_contract(doc.at("contract").get<std::string>());
    if (!contract) throw std::invalid_argument("unknown contract");
    p.contract = *contract;
    p.function = doc.at("function");
    p.args = doc.at("args").get<std::vector<std::string>>();
    p.timestamp = doc.at("timestamp");
    p.nonce = doc.at("nonce");
    p.creator_signature = doc.at("creator_signature");
    return p;
  });
}

Transaction transaction_from_document(const Document& doc) {
  return schema_guard([&] {
    Transaction tx;
    tx.tx_id = doc.at("tx_id");
    tx.proposal = proposal_from_document(doc.at("proposal"));
    tx.response = doc.at("response");
    tx.rwset = rwset_from_document(doc.at("rwset"));
    for (const auto& e : doc.at("endorsements")) tx.endorsements.push_back({e.at(0), e.at(1)});
    return tx;
  });
}

Block block_from_document(const Document& doc) {
  return schema_guard([&] {
    Block b;
    b.height = doc.at("height");
    b.prev_hash = doc.at("prev_hash");
    for (const auto& tx : doc.at("txs")) b.txs.push_back(transaction_from_document(tx));
    for (const auto& v : doc.at("validity")) b.validity.push_back(v.get<int>() == 1);
    b.block_hash = doc.at("block_hash");
    return b;
  });
}

// --- WorldState ---

std::optional<StateValue> WorldState::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || !it->second.value) return std::nullopt;
  return StateValue{*it->second.value, it->second.version};
}

std::optional<Version> WorldState::live_version(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || !it->second.value) return std::nullopt;
  return it->second.version;
}

std::vector<std::pair<std::string, StateValue>> WorldState::scan(std::string_view prefix) const {
  std::vector<std::pair<std::string, StateValue>> out;
  for (auto it = entries_.lower_bound(prefix);
       it != entries_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
    if (it->second.value) out.push_back({it->first, {*it->second.value, it->second.version}});
  }
  return out;
}

std::string WorldState::range_digest(std::string_view prefix) const {
  Document items = Document::array();
  for (const auto& [key, sv] : scan(prefix)) items.push_back(Document::array({key, version_doc(sv.version)}));
  return crypto::sha256_hex(canonical(items));
}

void WorldState::apply(const WriteItem& write, Version version) {
  auto& entry = entries_[write.key];
  entry.value = write.value;
  entry.version = version;
}

std::string WorldState::serialize() const {
  Document doc = Document::array();
  for (const auto& [key, e] : entries_) {
    doc.push_back(Document::array({key, e.value ? Document(*e.value) : Document(nullptr),
                                   version_doc(e.version)}));
  }
  return canonical(doc);
}

// --- EndorsementPolicy ---

EndorsementPolicy::EndorsementPolicy(std::map<std::string, crypto::PublicKey> required_peers)
    : peers_(std::move(required_peers)) {
  if (peers_.empty()) throw Error(ErrorCode::ConfigError, "endorsement policy requires at least one peer");
}

bool EndorsementPolicy::satisfied_by(const Transaction& tx) const {
  const auto payload = endorsement_payload(tx.tx_id, tx.response, tx.rwset);
  for (const auto& [peer, key] : peers_) {
    auto it = std::find_if(tx.endorsements.begin(), tx.endorsements.end(),
                           [&](const Endorsement& e) { return e.peer_id == peer; });
    if (it == tx.endorsements.end()) return false;
    auto sig = crypto::array_from_hex<crypto::kSignatureSize>(it->signature);
    if (!sig || !crypto::verify(key, payload, *sig)) return false;
  }
  return true;
}

// --- TxContext ---

TxContext::TxContext(const WorldState& snapshot, const Proposal& proposal, std::string tx_id)
    : snapshot_(&snapshot), proposal_(proposal), tx_id_(std::move(tx_id)) {}

void TxContext::require_active() const {
  if (!active_) {
    throw Error(ErrorCode::StateAccessOutsideSimulation, "state writes are only allowed during simulation");
  }
}

std::optional<std::string> TxContext::get_state(const std::string& key) {
  if (!active_) throw Error(ErrorCode::StateAccessOutsideSimulation, "simulation finished");
  if (auto w = writes_.find(key); w != writes_.end()) return w->second;
  auto sv = snapshot_->get(key);
  reads_.try_emplace(key, sv ? std::optional<Version>(sv->version) : std::nullopt);
  if (!sv) return std::nullopt;
  return sv->value;
}

std::vector<std::pair<std::string, std::string>> TxContext::scan_prefix(const std::string& prefix) {
  if (!active_) throw Error(ErrorCode::StateAccessOutsideSimulation, "simulation finished");
  ranges_.try_emplace(prefix, snapshot_->range_digest(prefix));
  std::map<std::string, std::string> merged;
  for (auto& [key, sv] : snapshot_->scan(prefix)) merged[key] = std::move(sv.value);
  for (const auto& [key, value] : writes_) {
    if (key.compare(0, prefix.size(), prefix) != 0) continue;
    if (value) {
      merged[key] = *value;
    } else {
      merged.erase(key);
    }
  }
  return {merged.begin(), merged.end()};
}

void TxContext::put_state(const std::string& key, std::string value) {
  require_active();
  writes_[key] = std::move(value);
}

void TxContext::delete_state(const std::string& key) {
  require_active();
  writes_[key] = std::nullopt;
}

ReadWriteSet TxContext::finish() {
  active_ = false;
  ReadWriteSet rw;
  for (const auto& [key, v] : reads_) rw.reads.push_back({key, v});
  for (const auto& [prefix, digest] : ranges_) rw.ranges.push_back({prefix, digest});
  for (const auto& [key, v] : writes_) rw.writes.push_back({key, v});
  return rw;
}

// --- Ledger ---

Block make_genesis() {
  Block g;
  g.height = 0;
  g.prev_hash = zero_hash();
  g.block_hash = g.compute_hash();
  return g;
}

std::string encode_block_record(const Block& block) {
  auto body = canonical(to_document(block));
  std::string out;
  out.reserve(body.size() + 4);
  put_u32_be(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

ChainCheck verify_blocks(std::span<const Block> blocks) { return verify_segment(blocks, 0, zero_hash()); }

ChainCheck verify_segment(std::span<const Block> blocks, std::uint64_t first_height,
                          std::string_view prev_hash) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    auto broken = [&](std::string why) { return ChainCheck{false, first_height + i, std::move(why)}; };
    if (b.height != first_height + i) return broken("height out of sequence");
    const std::string expected_prev = i == 0 ? std::string(prev_hash) : blocks[i - 1].block_hash;
    if (b.prev_hash != expected_prev) return broken("prev_hash does not link");
    if (b.validity.size() != b.txs.size()) return broken("validity length mismatch");
    if (b.compute_hash() != b.block_hash) return broken("block hash mismatch");
    for (const auto& tx : b.txs) {
      if (!tx.id_consistent()) return broken("transaction id mismatch");
    }
  }
  return {};
}

ChainCheck verify_archive(const std::filesystem::path& path) {
  auto read = read_archive(path);
  auto check = verify_blocks(read.blocks);
  if (!check.ok) return check;
  if (read.bad_record) return {false, read.bad_record, read.detail};
  if (read.blocks.empty()) return {false, 0, "archive is empty"};
  return {};
}

std::vector<Block> read_archive_blocks(const std::filesystem::path& path) {
  auto read = read_archive(path);
  if (read.bad_record) {
    throw Error(ErrorCode::BrokenChain, "archive record " + std::to_string(*read.bad_record) + ": " + read.detail);
  }
  return std::move(read.blocks);
}

Ledger::Ledger(EndorsementPolicy policy, std::optional<std::filesystem::path> archive)
    : policy_(std::move(policy)), archive_(std::move(archive)) {
  if (archive_ && std::filesystem::exists(*archive_) && std::filesystem::file_size(*archive_) > 0) {
    load_archive();
  } else {
    blocks_.push_back(make_genesis());
    if (archive_) {
      if (archive_->has_parent_path()) std::filesystem::create_directories(archive_->parent_path());
      append_archive(blocks_.back());
    }
  }
}

void Ledger::load_archive() {
  auto read = read_archive(*archive_);
  if (read.bad_record) {
    throw Error(ErrorCode::BrokenChain, "archive record " + std::to_string(*read.bad_record) + ": " + read.detail);
  }
  auto check = verify_blocks(read.blocks);
  if (!check.ok || read.blocks.empty()) {
    throw Error(ErrorCode::BrokenChain, "archive does not verify: " + check.detail);
  }
  blocks_ = std::move(read.blocks);
  for (const auto& b : blocks_) {
    for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      if (b.validity[i]) {
        for (const auto& w : b.txs[i].rwset.writes) state_.apply(w, {b.height, i});
      }
      tx_index_.emplace(b.txs[i].tx_id, std::make_pair(b.height, i));
    }
  }
}

void Ledger::append_archive(const Block& block) {
  std::ofstream out(*archive_, std::ios::binary | std::ios::app);
  auto record = encode_block_record(block);
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::LedgerError, "failed to append block archive");
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(mutex_);
  return blocks_.back().height;
}

std::string Ledger::tip_hash() const {
  std::shared_lock lock(mutex_);
  return blocks_.back().block_hash;
}

std::vector<TxOutcome> Ledger::apply_block(Block& block, WorldState& state) const {
  std::vector<TxOutcome> outcomes;
  std::unordered_set<std::string> seen_in_block;
  block.validity.assign(block.txs.size(), false);
  for (std::uint32_t i = 0; i < block.txs.size(); ++i) {
    const auto& tx = block.txs[i];
    TxOutcome out{tx.tx_id, false, block.height, i, tx.response, {}};
    if (!tx.id_consistent()) {
      out.reason = "tx_id does not match proposal";
    } else if (tx_index_.count(tx.tx_id) || !seen_in_block.insert(tx.tx_id).second) {
      out.reason = "duplicate tx_id";
    } else if (!policy_.satisfied_by(tx)) {
      out.reason = "endorsement policy not satisfied";
    } else {
      for (const auto& r : tx.rwset.reads) {
        if (state.live_version(r.key) != r.version) {
          out.reason = "stale read of " + r.key;
          break;
        }
      }
      if (out.reason.empty()) {
        for (const auto& r : tx.rwset.ranges) {
          if (state.range_digest(r.prefix) != r.digest) {
            out.reason = "phantom read under " + r.prefix;
            break;
          }
        }
      }
    }
    if (out.reason.empty()) {
      out.valid = true;
      block.validity[i] = true;
      for (const auto& w : tx.rwset.writes) state.apply(w, {block.height, i});
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

std::vector<TxOutcome> Ledger::validate_and_commit(Block block) {
  std::unique_lock lock(mutex_);
  const auto& tip = blocks_.back();
  if (block.height != tip.height + 1) {
    throw Error(ErrorCode::BrokenChain, "expected height " + std::to_string(tip.height + 1) +
                                            ", got " + std::to_string(block.height));
  }
  if (block.prev_hash != tip.block_hash) {
    throw Error(ErrorCode::BrokenChain, "prev_hash mismatch at height " + std::to_string(block.height));
  }
  const auto delivered_validity = block.validity;
  const auto delivered_hash = block.block_hash;

  WorldState next = state_;
  auto outcomes = apply_block(block, next);
  block.block_hash = block.compute_hash();
  if (!delivered_hash.empty() &&
      (delivered_validity != block.validity || delivered_hash != block.block_hash)) {
    throw Error(ErrorCode::BrokenChain, "delivered block " + std::to_string(block.height) +
                                            " disagrees with local validation");
  }
  if (archive_) append_archive(block);
  for (const auto& o : outcomes) tx_index_.emplace(o.tx_id, std::make_pair(o.block_height, o.tx_index));
  state_ = std::move(next);
  blocks_.push_back(std::move(block));
  return outcomes;
}

std::optional<StateValue> Ledger::get_state(std::string_view key) const {
  std::shared_lock lock(mutex_);
  return state_.get(key);
}

std::vector<std::pair<std::string, StateValue>> Ledger::scan(std::string_view prefix) const {
  std::shared_lock lock(mutex_);
  return state_.scan(prefix);
}

void Ledger::put_state(std::string_view key, std::string_view) {
  throw Error(ErrorCode::StateAccessOutsideSimulation, "put_state(" + std::string(key) + ") outside simulation");
}

void Ledger::delete_state(std::string_view key) {
  throw Error(ErrorCode::StateAccessOutsideSimulation, "delete_state(" + std::string(key) + ") outside simulation");
}

ChainCheck Ledger::verify_chain() const {
  std::shared_lock lock(mutex_);
  return verify_blocks(blocks_);
}

WorldState Ledger::replay() const {
  std::shared_lock lock(mutex_);
  auto check = verify_blocks(blocks_);
  if (!check.ok) {
    throw Error(ErrorCode::BrokenChain, "chain broken at height " + std::to_string(*check.broken_height));
  }
  WorldState state;
  for (const auto& b : blocks_) {
    for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      if (!b.validity[i]) continue;
      for (const auto& w : b.txs[i].rwset.writes) state.apply(w, {b.height, i});
    }
  }
  return state;
}

WorldState Ledger::state_copy() const {
  std::shared_lock lock(mutex_);
  return state_;
}

std::string Ledger::state_bytes() const {
  std::shared_lock lock(mutex_);
  return state_.serialize();
}

std::vector<Block> Ledger::blocks(std::uint64_t from) const {
  std::shared_lock lock(mutex_);
  if (from >= blocks_.size()) return {};
  return {blocks_.begin() + static_cast<std::ptrdiff_t>(from), blocks_.end()};
}

std::optional<Block> Ledger::block(std::uint64_t height) const {
  std::shared_lock lock(mutex_);
  if (height >= blocks_.size()) return std::nullopt;
  return blocks_[height];
}

bool Ledger::has_transaction(std::string_view tx_id) const {
  std::shared_lock lock(mutex_);
  return tx_index_.count(std::string(tx_id)) > 0;
}

std::optional<TxOutcome> Ledger::transaction_outcome(std::string_view tx_id) const {
  std::shared_lock lock(mutex_);
  auto it = tx_index_.find(std::string(tx_id));
  if (it == tx_index_.end()) return std::nullopt;
  auto [height, index] = it->second;
  const auto& b = blocks_[height];
  return TxOutcome{b.txs[index].tx_id, b.validity[index], height, index, b.txs[index].response, {}};
}

void Ledger::inject_state_for_test(const std::string& key, std::optional<std::string> value) {
  std::unique_lock lock(mutex_);
  state_.apply({key, std::move(value)}, {blocks_.back().height, 0xffffffffu});
}

// --- Peer ---

Peer::Peer(std::string peer_id, crypto::KeyPair key, std::shared_ptr<const ContractRegistry> contracts,
           EndorsementPolicy policy, std::optional<std::filesystem::path> archive)
    : id_(std::move(peer_id)),
      key_(key),
      contracts_(std::move(contracts)),
      ledger_(std::move(policy), std::move(archive)) {}

SimulationResult Peer::simulate(const Proposal& proposal) const {
  auto it = contracts_->find(proposal.contract);
  if (it == contracts_->end() || !it->second->has_function(proposal.function)) {
    throw Error(ErrorCode::UnknownFunction,
                std::string(to_string(proposal.contract)) + "." + proposal.function);
  }
  const auto tx_id = proposal.tx_id();
  return ledger_.with_state([&](const WorldState& state) {
    TxContext ctx(state, proposal, tx_id);
    SimulationResult result;
    try {
      result.response = it->second->invoke(ctx);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ContractError, e.what());
    }
    result.rwset = ctx.finish();
    return result;
  });
}

Endorsement Peer::sign_endorsement(std::string_view tx_id, const SimulationResult& result) const {
  auto payload = endorsement_payload(tx_id, result.response, result.rwset);
  return {id_, crypto::to_hex(crypto::sign(key_.secret_key, payload))};
}

std::vector<TxOutcome> Peer::deliver(const Block& block) {
  auto outcomes = ledger_.validate_and_commit(block);
  std::lock_guard lock(waiters_mutex_);
  for (const auto& o : outcomes) {
    auto it = waiters_.find(o.tx_id);
    if (it == waiters_.end()) continue;
    for (auto& p : it->second) p.set_value(o);
    waiters_.erase(it);
  }
  return outcomes;
}

std::future<TxOutcome> Peer::wait_for(const std::string& tx_id) {
  std::lock_guard lock(waiters_mutex_);
  std::promise<TxOutcome> promise;
  auto future = promise.get_future();
  if (auto done = ledger_.transaction_outcome(tx_id)) {
    promise.set_value(*done);
  } else {
    waiters_[tx_id].push_back(std::move(promise));
  }
  return future;
}

Transaction endorse(const Proposal& proposal, std::span<Peer* const> peers,
                    const EndorsementPolicy& policy) {
  struct Attempt {
    Peer* peer;
    std::optional<SimulationResult> result;
    std::optional<Error> error;
  };
  std::vector<Attempt> attempts;
  for (const auto& [peer_id, _] : policy.required_peers()) {
    auto it = std::find_if(peers.begin(), peers.end(), [&](Peer* p) { return p->id() == peer_id; });
    if (it == peers.end()) {
      throw Error(ErrorCode::InsufficientEndorsements, "no endorsing peer " + peer_id);
    }
    Attempt a{*it, std::nullopt, std::nullopt};
    try {
      a.result = (*it)->simulate(proposal);
    } catch (const Error& e) {
      a.error = e;
    }
    attempts.push_back(std::move(a));
  }

  const auto& first = attempts.front();
  for (const auto& a : attempts) {
    const bool same_error = a.error && first.error && a.error->code() == first.error->code() &&
                            a.error->detail() == first.error->detail();
    const bool same_result = a.result && first.result && *a.result == *first.result;
    if (!same_error && !same_result) {
      throw Error(ErrorCode::EndorsementMismatch,
                  "peers " + first.peer->id() + " and " + a.peer->id() + " disagree");
    }
  }
  if (first.error) throw *first.error;

  Transaction tx;
  tx.proposal = proposal;
  tx.tx_id = proposal.tx_id();
  tx.response = first.result->response;
  tx.rwset = first.result->rwset;
  for (const auto& a : attempts) tx.endorsements.push_back(a.peer->sign_endorsement(tx.tx_id, *a.result));
  return tx;
}

}  // namespace dbcabac::ledger
