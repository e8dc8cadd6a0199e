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

// Append-only hash-chained transaction log with a versioned world state and
// the execute-order-validate pipeline pieces: simulation with read/write-set
// capture, endorsement, and MVCC validation at commit.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dbcabac/canonical.hpp"
#include "dbcabac/crypto.hpp"

namespace dbcabac::ledger {

using Timestamp = std::int64_t;

// Commit position of a write.
struct Version {
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;

  auto operator<=>(const Version&) const = default;
};

struct ReadItem {
  std::string key;
  std::optional<Version> version;  // nullopt: key was absent

  bool operator==(const ReadItem&) const = default;
};

// Phantom protection for prefix scans: digest over the (key, version) pairs
// the scan returned.
struct RangeRead {
  std::string prefix;
  std::string digest;

  bool operator==(const RangeRead&) const = default;
};

struct WriteItem {
  std::string key;
  std::optional<std::string> value;  // nullopt: tombstone

  bool operator==(const WriteItem&) const = default;
};

struct ReadWriteSet {
  std::vector<ReadItem> reads;
  std::vector<RangeRead> ranges;
  std::vector<WriteItem> writes;

  bool operator==(const ReadWriteSet&) const = default;
};

enum class ContractId { PolicyContract, AccessContract };
std::string_view to_string(ContractId id) noexcept;
std::optional<ContractId> parse_contract(std::string_view text);

// Client-side transaction header, signed by the submitter.
struct Proposal {
  std::string submitter;  // canonical identity certificate document
  ContractId contract = ContractId::PolicyContract;
  std::string function;
  std::vector<std::string> args;  // canonical documents
  Timestamp timestamp = 0;
  std::string nonce;
  std::string creator_signature;  // hex, over tx_id()

  std::string tx_id() const;
  // Fills nonce (when empty) and the creator signature.
  void sign(const crypto::SecretKey& key);
};

struct Endorsement {
  std::string peer_id;
  std::string signature;  // hex

  bool operator==(const Endorsement&) const = default;
};

struct Transaction {
  std::string tx_id;
  Proposal proposal;
  std::string response;  // simulation result, canonical
  ReadWriteSet rwset;
  std::vector<Endorsement> endorsements;

  // tx_id equals the proposal hash.
  bool id_consistent() const { return tx_id == proposal.tx_id(); }
};

// Bytes every endorser signs.
std::string endorsement_payload(std::string_view tx_id, std::string_view response,
                                const ReadWriteSet& rwset);

struct Block {
  std::uint64_t height = 0;
  std::string prev_hash;  // hex
  std::vector<Transaction> txs;
  std::vector<bool> validity;  // empty until validated
  std::string block_hash;      // hex, empty until validated

  std::string compute_hash() const;
};

std::string zero_hash();

Document to_document(const ReadWriteSet& rwset);
Document to_document(const Proposal& proposal);
Document to_document(const Transaction& tx);
Document to_document(const Block& block);
// Throw std::invalid_argument on schema errors.
ReadWriteSet rwset_from_document(const Document& doc);
Proposal proposal_from_document(const Document& doc);
Transaction transaction_from_document(const Document& doc);
Block block_from_document(const Document& doc);

struct StateValue {
  std::string value;
  Version version;
};

// Versioned key/value view. Tombstones are kept so versions and history
// survive deletes; they read as absent.
class WorldState {
 public:
  struct Entry {
    std::optional<std::string> value;
    Version version;

    bool operator==(const Entry&) const = default;
  };

  std::optional<StateValue> get(std::string_view key) const;
  std::optional<Version> live_version(std::string_view key) const;
  // Live entries whose key starts with prefix, in key order.
  std::vector<std::pair<std::string, StateValue>> scan(std::string_view prefix) const;
  std::string range_digest(std::string_view prefix) const;

  void apply(const WriteItem& write, Version version);

  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, Entry, std::less<>>& entries() const noexcept { return entries_; }
  // Canonical bytes of every entry, tombstones included.
  std::string serialize() const;

  bool operator==(const WorldState&) const = default;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

// ALL-of over a fixed peer set.
class EndorsementPolicy {
 public:
  // Throws Error(ConfigError) when empty.
  explicit EndorsementPolicy(std::map<std::string, crypto::PublicKey> required_peers);

  const std::map<std::string, crypto::PublicKey>& required_peers() const noexcept {
    return peers_;
  }
  bool satisfied_by(const Transaction& tx) const;

 private:
  std::map<std::string, crypto::PublicKey> peers_;
};

// Contract-facing state API for one simulation. Reads are recorded with the
// version seen; writes are buffered. Nothing reaches the world state.
class TxContext {
 public:
  TxContext(const WorldState& snapshot, const Proposal& proposal, std::string tx_id);
  TxContext(const TxContext&) = delete;
  TxContext& operator=(const TxContext&) = delete;

  const Proposal& proposal() const noexcept { return proposal_; }
  const std::string& tx_id() const noexcept { return tx_id_; }
  Timestamp timestamp() const noexcept { return proposal_.timestamp; }
  const std::vector<std::string>& args() const noexcept { return proposal_.args; }

  std::optional<std::string> get_state(const std::string& key);
  std::vector<std::pair<std::string, std::string>> scan_prefix(const std::string& prefix);
  // Throw Error(StateAccessOutsideSimulation) once the simulation finished.
  void put_state(const std::string& key, std::string value);
  void delete_state(const std::string& key);

  ReadWriteSet finish();

 private:
  void require_active() const;

  const WorldState* snapshot_;
  const Proposal& proposal_;
  std::string tx_id_;
  bool active_ = true;
  std::map<std::string, std::optional<Version>> reads_;
  std::map<std::string, std::string> ranges_;
  std::map<std::string, std::optional<std::string>> writes_;
};

class Chaincode {
 public:
  virtual ~Chaincode() = default;
  virtual bool has_function(std::string_view function) const = 0;
  // Returns the canonical result document. Failures are dbcabac::Error.
  virtual std::string invoke(TxContext& ctx) = 0;
};

using ContractRegistry = std::map<ContractId, std::shared_ptr<Chaincode>>;

struct SimulationResult {
  std::string response;
  ReadWriteSet rwset;

  bool operator==(const SimulationResult&) const = default;
};

struct ChainCheck {
  bool ok = true;
  std::optional<std::uint64_t> broken_height;
  std::string detail;
};

struct TxOutcome {
  std::string tx_id;
  bool valid = false;
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;
  std::string response;
  std::string reason;  // why it was invalidated
};

// One peer's copy of the chain and world state. Optionally persisted to an
// append-only archive of length-prefixed canonical block records.
class Ledger {
 public:
  explicit Ledger(EndorsementPolicy policy,
                  std::optional<std::filesystem::path> archive = std::nullopt);
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  std::uint64_t height() const;
  std::string tip_hash() const;

  // Validates and appends. A block arriving with validity already filled in
  // must agree with the local result. Throws Error(BrokenChain) on a bad
  // link, height or hash; the ledger is then unchanged.
  std::vector<TxOutcome> validate_and_commit(Block block);

  std::optional<StateValue> get_state(std::string_view key) const;
  std::vector<std::pair<std::string, StateValue>> scan(std::string_view prefix) const;
  // Always throw Error(StateAccessOutsideSimulation).
  [[noreturn]] void put_state(std::string_view key, std::string_view value);
  [[noreturn]] void delete_state(std::string_view key);

  ChainCheck verify_chain() const;
  // Rebuilds the world state from the log. Throws Error(BrokenChain) if the
  // chain does not verify.
  WorldState replay() const;

  WorldState state_copy() const;
  std::string state_bytes() const;
  std::vector<Block> blocks(std::uint64_t from = 0) const;
  std::optional<Block> block(std::uint64_t height) const;
  bool has_transaction(std::string_view tx_id) const;
  std::optional<TxOutcome> transaction_outcome(std::string_view tx_id) const;

  // Runs f(const WorldState&) under a shared lock; commits wait.
  template <typename F>
  decltype(auto) with_state(F&& f) const {
    std::shared_lock lock(mutex_);
    return std::forward<F>(f)(state_);
  }

  // Test hook: writes straight into the world state, bypassing the log.
  void inject_state_for_test(const std::string& key, std::optional<std::string> value);

 private:
  void load_archive();
  void append_archive(const Block& block);
  std::vector<TxOutcome> apply_block(Block& block, WorldState& state) const;

  EndorsementPolicy policy_;
  std::optional<std::filesystem::path> archive_;
  mutable std::shared_mutex mutex_;
  std::vector<Block> blocks_;
  WorldState state_;
  std::unordered_map<std::string, std::pair<std::uint64_t, std::uint32_t>> tx_index_;
};

Block make_genesis();

// Archive helpers. Records are a 4-byte big-endian length followed by the
// canonical block document.
std::string encode_block_record(const Block& block);
// Reads every record and checks hashes and links; reports the first broken
// height (record index) on any corruption.
ChainCheck verify_archive(const std::filesystem::path& path);
// Decodes every record without verifying links. Throws Error(BrokenChain) on
// an undecodable record.
std::vector<Block> read_archive_blocks(const std::filesystem::path& path);
ChainCheck verify_blocks(std::span<const Block> blocks);
// Checks a run of blocks that should extend a chain whose tip has `prev_hash`.
ChainCheck verify_segment(std::span<const Block> blocks, std::uint64_t first_height,
                          std::string_view prev_hash);

// A ledger peer: simulates proposals against its state, signs endorsements,
// validates and commits delivered blocks.
class Peer {
 public:
  Peer(std::string peer_id, crypto::KeyPair key, std::shared_ptr<const ContractRegistry> contracts,
       EndorsementPolicy policy, std::optional<std::filesystem::path> archive = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  const crypto::PublicKey& public_key() const noexcept { return key_.public_key; }

  // Throws Error(UnknownFunction), or the contract's own error.
  SimulationResult simulate(const Proposal& proposal) const;
  Endorsement sign_endorsement(std::string_view tx_id, const SimulationResult& result) const;

  // Commits and resolves waiters. Exceptions from the ledger propagate.
  std::vector<TxOutcome> deliver(const Block& block);
  // Future resolves when the transaction commits on this peer (valid or not).
  std::future<TxOutcome> wait_for(const std::string& tx_id);

  Ledger& ledger() noexcept { return ledger_; }
  const Ledger& ledger() const noexcept { return ledger_; }

 private:
  std::string id_;
  crypto::KeyPair key_;
  std::shared_ptr<const ContractRegistry> contracts_;
  Ledger ledger_;
  std::mutex waiters_mutex_;
  std::unordered_map<std::string, std::vector<std::promise<TxOutcome>>> waiters_;
};

// Collects endorsements from every peer the policy requires. Throws
// EndorsementMismatch when simulations differ, InsufficientEndorsements when a
// required peer is missing, or the contract error when all peers agree on it.
Transaction endorse(const Proposal& proposal, std::span<Peer* const> peers,
                    const EndorsementPolicy& policy);

}  // namespace dbcabac::ledger
