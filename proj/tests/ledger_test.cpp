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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dbcabac/ordering.hpp"
#include "support/kv_chaincode.hpp"
#include "support/serial_oracle.hpp"

namespace dbcabac::ledger {
namespace {

using testnet::Network;
using testnet::as_arg;

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dbcabac_ledger_" + name + "_" +
                                                       crypto::random_token(4));
  std::filesystem::create_directories(dir);
  return dir;
}

Error catch_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected dbcabac::Error";
  return Error(ErrorCode::LedgerError, "none");
}

TEST(Simulate, ReadOfAbsentKeyRecordsAbsentVersion) {
  Network net;
  auto result = net.peers[0]->simulate(net.proposal("get", {"k"}));
  EXPECT_EQ(result.response, "[]");
  ASSERT_EQ(result.rwset.reads.size(), 1u);
  EXPECT_EQ(result.rwset.reads[0], (ReadItem{"k", std::nullopt}));
  EXPECT_TRUE(result.rwset.writes.empty());
}

TEST(Simulate, WritesAreBufferedNotApplied) {
  Network net;
  auto result = net.peers[0]->simulate(net.proposal("put", {"k", "v"}));
  ASSERT_EQ(result.rwset.writes.size(), 1u);
  EXPECT_EQ(result.rwset.writes[0], (WriteItem{"k", "v"}));
  EXPECT_FALSE(net.ledger().get_state("k"));
}

TEST(Simulate, DeterministicAcrossCalls) {
  Network net;
  auto p = net.proposal("incr", {"c"});
  EXPECT_EQ(net.peers[0]->simulate(p), net.peers[0]->simulate(p));
  EXPECT_EQ(net.peers[0]->simulate(p), net.peers[1]->simulate(p));
}

TEST(Simulate, ErrorsPropagate) {
  Network net;
  EXPECT_EQ(catch_error([&] { net.peers[0]->simulate(net.proposal("nope", {})); }).code(),
            ErrorCode::UnknownFunction);
  EXPECT_EQ(catch_error([&] { net.peers[0]->simulate(net.proposal("fail", {})); }).code(),
            ErrorCode::NotFound);
  auto e = catch_error([&] { net.peers[0]->simulate(net.proposal("boom", {})); });
  EXPECT_EQ(e.code(), ErrorCode::ContractError);
  EXPECT_EQ(e.detail(), "boom");
}

TEST(Simulate, ReadYourWritesAndScanMerge) {
  Network net;
  net.submit("put", {"item/a", "1"});
  net.sequencer->flush();
  auto sim = net.peers[0]->simulate(net.proposal("scan", {"item/"}));
  EXPECT_EQ(sim.response, R"(["item/a"])");
  ASSERT_EQ(sim.rwset.ranges.size(), 1u);
  EXPECT_EQ(sim.rwset.ranges[0].prefix, "item/");
}

TEST(StateApi, WritesOutsideSimulationRejected) {
  Network net;
  EXPECT_EQ(catch_error([&] { net.ledger().put_state("k", "v"); }).code(),
            ErrorCode::StateAccessOutsideSimulation);
  EXPECT_EQ(catch_error([&] { net.ledger().delete_state("k"); }).code(),
            ErrorCode::StateAccessOutsideSimulation);
  WorldState empty;
  auto p = net.proposal("put", {"k", "v"});
  TxContext ctx(empty, p, p.tx_id());
  ctx.put_state("k", "v");
  ctx.finish();
  EXPECT_EQ(catch_error([&] { ctx.put_state("k", "w"); }).code(), ErrorCode::StateAccessOutsideSimulation);
  EXPECT_EQ(catch_error([&] { ctx.delete_state("k"); }).code(), ErrorCode::StateAccessOutsideSimulation);
}

TEST(StateApi, PutCommitGetDelete) {
  Network net;
  EXPECT_FALSE(net.ledger().get_state("never"));
  net.submit("put", {"x", "0"});
  net.submit("put", {"k", "v"});
  net.sequencer->flush();
  auto v = net.ledger().get_state("k");
  ASSERT_TRUE(v);
  EXPECT_EQ(v->value, "v");
  EXPECT_EQ(v->version, (Version{1, 1}));
  net.submit("del", {"k"});
  net.sequencer->flush();
  EXPECT_FALSE(net.ledger().get_state("k"));
  // The tombstone stays in the state with its own version.
  EXPECT_EQ(net.ledger().state_copy().entries().at("k").version, (Version{2, 0}));
}

TEST(Endorse, BothPeersSign) {
  Network net;
  auto tx = net.endorse_tx(net.proposal("put", {"k", "v"}));
  ASSERT_EQ(tx.endorsements.size(), 2u);
  EXPECT_EQ(tx.endorsements[0].peer_id, "peer0.org1");
  EXPECT_EQ(tx.endorsements[1].peer_id, "peer0.org2");
  EXPECT_TRUE(net.policy->satisfied_by(tx));
  EXPECT_TRUE(tx.id_consistent());
}

TEST(Endorse, DesynchronizedPeerIsDetected) {
  Network net;
  net.ledger(1).inject_state_for_test("c", "41");
  auto e = catch_error([&] { net.endorse_tx(net.proposal("incr", {"c"})); });
  EXPECT_EQ(e.code(), ErrorCode::EndorsementMismatch);
}

TEST(Endorse, MissingPeerAndEmptyPolicy) {
  Network net;
  std::vector<Peer*> only_one{net.peers[0].get()};
  auto p = net.proposal("put", {"k", "v"});
  EXPECT_EQ(catch_error([&] { endorse(p, only_one, *net.policy); }).code(),
            ErrorCode::InsufficientEndorsements);
  EXPECT_EQ(catch_error([] { EndorsementPolicy empty({}); }).code(), ErrorCode::ConfigError);
}

TEST(Endorse, AgreedContractErrorIsReturned) {
  Network net;
  EXPECT_EQ(catch_error([&] { net.endorse_tx(net.proposal("fail", {})); }).code(),
            ErrorCode::NotFound);
}

TEST(Order, TimeoutCutsPartialBlock) {
  Network net;
  for (int i = 0; i < 3; ++i) net.submit("put", {"k" + std::to_string(i), "v"});
  EXPECT_EQ(net.sequencer->poll(Sequencer::Clock::now()), 0u);
  EXPECT_EQ(net.sequencer->poll(Sequencer::Clock::now() + std::chrono::milliseconds(300)), 1u);
  EXPECT_EQ(net.ledger().height(), 1u);
  EXPECT_EQ(net.ledger().block(1)->txs.size(), 3u);
  EXPECT_EQ(net.sequencer->poll(Sequencer::Clock::now() + std::chrono::seconds(5)), 0u);
}

TEST(Order, SizeCutsFullBlocks) {
  Network net;
  for (int i = 0; i < 25; ++i) net.submit("put", {"k" + std::to_string(i), "v"});
  EXPECT_EQ(net.sequencer->pending(), 5u);
  net.sequencer->flush();
  std::vector<std::size_t> sizes;
  for (const auto& b : net.ledger().blocks(1)) sizes.push_back(b.txs.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 5}));
  // FIFO order.
  auto blocks = net.ledger().blocks(1);
  EXPECT_EQ(blocks[0].txs[0].proposal.args[0], as_arg("k0"));
  EXPECT_EQ(blocks[2].txs[4].proposal.args[0], as_arg("k24"));
}

TEST(Order, ReplayedSubmissionsGiveIdenticalHashes) {
  auto run = [] {
    Network net(2, 10, "fixed");
    for (int i = 0; i < 14; ++i) {
      auto tx = net.endorse_tx(net.proposal("incr", {"c" + std::to_string(i % 3)}, 5000 + i,
                                            "nonce" + std::to_string(i)));
      net.sequencer->submit(std::move(tx));
    }
    net.sequencer->flush();
    std::vector<std::string> hashes;
    for (const auto& b : net.ledger().blocks()) hashes.push_back(b.block_hash);
    return hashes;
  };
  auto a = run();
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, run());
}

TEST(Order, ThreadedSequencerCommitsAndResolvesWaiters) {
  Network net;
  net.sequencer->start();
  std::vector<std::future<TxOutcome>> futures;
  for (int i = 0; i < 4; ++i) {
    auto tx = net.endorse_tx(net.proposal("put", {"t" + std::to_string(i), "v"}));
    futures.push_back(net.peers[0]->wait_for(tx.tx_id));
    net.sequencer->submit(std::move(tx));
  }
  for (auto& f : futures) {
    ASSERT_EQ(f.wait_for(std::chrono::seconds(3)), std::future_status::ready);
    EXPECT_TRUE(f.get().valid);
  }
  net.sequencer->stop();
  EXPECT_EQ(net.ledger(0).state_bytes(), net.ledger(1).state_bytes());
}

TEST(ValidateAndCommit, StaleReadIsInvalidated) {
  Network net;
  net.submit("put", {"K", "5"});
  net.sequencer->flush();
  // Both simulate against version (1,0) before either commits.
  auto t1 = net.endorse_tx(net.proposal("incr", {"K"}));
  auto t2 = net.endorse_tx(net.proposal("incr", {"K"}));
  net.sequencer->submit(t1);
  net.sequencer->submit(t2);
  net.sequencer->flush();
  auto b = *net.ledger().block(2);
  EXPECT_EQ(b.validity, (std::vector<bool>{true, false}));
  EXPECT_EQ(net.ledger().get_state("K")->value, "6");
  EXPECT_EQ(oracle::serial_reexecute(net.ledger().blocks()), oracle::live_values(net.ledger().state_copy()));
}

TEST(ValidateAndCommit, PhantomScanIsInvalidated) {
  Network net;
  auto scan = net.endorse_tx(net.proposal("scan", {"item/"}));
  net.submit("put", {"item/x", "1"});
  net.sequencer->submit(scan);
  net.sequencer->flush();
  EXPECT_EQ(net.ledger().block(1)->validity, (std::vector<bool>{true, false}));
}

TEST(ValidateAndCommit, ForgedEndorsementIsInvalidated) {
  Network net;
  auto tx = net.endorse_tx(net.proposal("put", {"k", "v"}));
  tx.endorsements[1].signature[0] = tx.endorsements[1].signature[0] == 'a' ? 'b' : 'a';
  net.sequencer->submit(tx);
  net.sequencer->flush();
  EXPECT_EQ(net.ledger().block(1)->validity, (std::vector<bool>{false}));
  EXPECT_FALSE(net.ledger().get_state("k"));
}

TEST(ValidateAndCommit, DuplicateTxIdIsInvalidated) {
  Network net;
  auto tx = net.endorse_tx(net.proposal("put", {"k", "v"}));
  net.sequencer->submit(tx);
  net.sequencer->submit(tx);
  net.sequencer->flush();
  EXPECT_EQ(net.ledger().block(1)->validity, (std::vector<bool>{true, false}));
}

TEST(ValidateAndCommit, WrongPrevHashLeavesLedgerUnchanged) {
  Network net;
  net.submit("put", {"k", "v"});
  net.sequencer->flush();
  const auto before = net.ledger().state_bytes();
  Block bad;
  bad.height = 2;
  bad.prev_hash = zero_hash();
  bad.txs.push_back(net.endorse_tx(net.proposal("put", {"z", "1"})));
  EXPECT_EQ(catch_error([&] { net.ledger().validate_and_commit(bad); }).code(), ErrorCode::BrokenChain);
  bad.prev_hash = net.ledger().tip_hash();
  bad.height = 5;
  EXPECT_EQ(catch_error([&] { net.ledger().validate_and_commit(bad); }).code(), ErrorCode::BrokenChain);
  EXPECT_EQ(net.ledger().height(), 1u);
  EXPECT_EQ(net.ledger().state_bytes(), before);
}

TEST(ValidateAndCommit, DeliveredValidityMustAgree) {
  Network net;
  net.submit("put", {"k", "v"});
  net.sequencer->flush();
  auto tip = *net.ledger().block(1);
  Ledger fresh(*net.policy);
  tip.validity[0] = false;
  EXPECT_EQ(catch_error([&] { fresh.validate_and_commit(tip); }).code(), ErrorCode::BrokenChain);
  EXPECT_EQ(fresh.height(), 0u);
}

TEST(VerifyChain, GenesisOnlyAndFiveBlocks) {
  Network net;
  EXPECT_TRUE(net.ledger().verify_chain().ok);
  for (int i = 0; i < 5; ++i) {
    net.submit("put", {"k" + std::to_string(i), "v"});
    net.sequencer->flush();
  }
  EXPECT_EQ(net.ledger().height(), 5u);
  EXPECT_TRUE(net.ledger().verify_chain().ok);
}

TEST(VerifyChain, ArchiveByteFlipInTxArgsDetectedAtThatHeight) {
  auto dir = temp_dir("flip");
  {
    Network net;
    auto* peer = net.peers[0].get();
    Ledger archived(*net.policy, dir / "chain.bin");
    for (int i = 0; i < 5; ++i) {
      auto tx = net.endorse_tx(net.proposal("put", {"key" + std::to_string(i), "value"}));
      net.sequencer->submit(tx);
      net.sequencer->flush();
      archived.validate_and_commit(*peer->ledger().block(peer->ledger().height()));
    }
    EXPECT_TRUE(verify_archive(dir / "chain.bin").ok);
  }
  std::fstream f(dir / "chain.bin", std::ios::in | std::ios::out | std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  auto pos = bytes.find("key1");  // block 2 carries key1
  ASSERT_NE(pos, std::string::npos);
  f.seekp(static_cast<std::streamoff>(pos + 3));
  f.put('9');
  f.close();
  auto check = verify_archive(dir / "chain.bin");
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.broken_height, 2u);
  Network net;
  EXPECT_EQ(catch_error([&] { Ledger reload(*net.policy, dir / "chain.bin"); }).code(), ErrorCode::BrokenChain);
  std::filesystem::remove_all(dir);
}

TEST(VerifyChain, ArchiveReloadRestoresState) {
  auto dir = temp_dir("reload");
  Network net;
  std::string live;
  {
    Ledger archived(*net.policy, dir / "chain.bin");
    for (int i = 0; i < 3; ++i) {
      net.submit("incr", {"c"});
      net.sequencer->flush();
      archived.validate_and_commit(*net.ledger().block(net.ledger().height()));
    }
    live = archived.state_bytes();
  }
  Ledger reloaded(*net.policy, dir / "chain.bin");
  EXPECT_EQ(reloaded.height(), 3u);
  EXPECT_EQ(reloaded.state_bytes(), live);
  EXPECT_EQ(reloaded.get_state("c")->value, "3");
  std::filesystem::remove_all(dir);
}

TEST(Replay, MatchesLiveStateAndHonorsValidity) {
  Network net;
  EXPECT_EQ(net.ledger().replay().size(), 0u);
  net.submit("put", {"K", "1"});
  net.sequencer->flush();
  auto t1 = net.endorse_tx(net.proposal("put", {"K", "a"}));
  auto t2 = net.endorse_tx(net.proposal("incr", {"K"}));
  auto t3 = net.endorse_tx(net.proposal("incr", {"K"}));
  net.sequencer->submit(t1);
  net.sequencer->submit(t2);
  net.sequencer->submit(t3);
  net.sequencer->flush();
  EXPECT_EQ(net.ledger().replay().serialize(), net.ledger().state_bytes());

  // Folding every write, valid or not, gives a different state.
  WorldState ignoring;
  for (const auto& b : net.ledger().blocks()) {
    for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      for (const auto& w : b.txs[i].rwset.writes) ignoring.apply(w, {b.height, i});
    }
  }
  EXPECT_NE(ignoring.serialize(), net.ledger().state_bytes());
}

TEST(Properties, RandomWorkloadReplayVersionsAndSerializability) {
  std::mt19937 rng(42);
  for (int round = 0; round < 5; ++round) {
    Network net(2, 4);
    std::map<std::string, Version> last_version;
    for (int step = 0; step < 12; ++step) {
      // A batch of proposals simulated against the same snapshot.
      std::vector<Transaction> batch;
      int n = 1 + static_cast<int>(rng() % 6);
      for (int j = 0; j < n; ++j) {
        auto k = "k" + std::to_string(rng() % 4);
        auto k2 = "k" + std::to_string(rng() % 4);
        switch (rng() % 4) {
          case 0: batch.push_back(net.endorse_tx(net.proposal("incr", {k}))); break;
          case 1: batch.push_back(net.endorse_tx(net.proposal("transfer", {k, k2 == k ? "z" : k2}))); break;
          case 2: batch.push_back(net.endorse_tx(net.proposal("del", {k}))); break;
          default: batch.push_back(net.endorse_tx(net.proposal("put", {k, std::to_string(rng() % 9)}))); break;
        }
      }
      for (auto& tx : batch) net.sequencer->submit(std::move(tx));
      net.sequencer->flush();
      const auto state = net.ledger().state_copy();
      for (const auto& [key, entry] : state.entries()) {
        auto it = last_version.find(key);
        if (it != last_version.end()) EXPECT_GE(entry.version, it->second);
        last_version[key] = entry.version;
      }
      ASSERT_EQ(net.ledger().replay().serialize(), net.ledger().state_bytes());
    }
    EXPECT_EQ(oracle::serial_reexecute(net.ledger().blocks()),
              oracle::live_values(net.ledger().state_copy()));
    EXPECT_EQ(net.ledger(0).state_bytes(), net.ledger(1).state_bytes());
    EXPECT_EQ(net.ledger(0).tip_hash(), net.sequencer->replica().tip_hash());
  }
}

TEST(Documents, BlockRoundTripsThroughCanonicalForm) {
  Network net;
  net.submit("put", {"k", "v"});
  net.sequencer->flush();
  auto b = *net.ledger().block(1);
  auto bytes = canonical(to_document(b));
  auto back = block_from_document(parse_canonical(bytes));
  EXPECT_EQ(canonical(to_document(back)), bytes);
  EXPECT_EQ(back.compute_hash(), b.block_hash);
  EXPECT_THROW(block_from_document(Document::object()), std::invalid_argument);
}

}  // namespace
}  // namespace dbcabac::ledger
