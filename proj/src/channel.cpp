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

#include "dbcabac/channel.hpp"

#include <algorithm>
#include <functional>
#include <thread>

#include "dbcabac/error.hpp"

namespace dbcabac::ledger {
namespace {

std::vector<std::uint64_t> heights(const std::vector<Peer*>& peers) {
  std::vector<std::uint64_t> out;
  for (const auto* p : peers) out.push_back(p->ledger().height());
  return out;
}

bool heights_agree(const std::vector<Peer*>& peers) {
  if (peers.empty()) return true;
  auto h = peers.front()->ledger().height();
  return std::all_of(peers.begin(), peers.end(), [h](const Peer* p) { return p->ledger().height() == h; });
}

}  // namespace

Channel::Channel(std::vector<Peer*> endorsers, OrderingService& orderer, const EndorsementPolicy& policy)
    : endorsers_(std::move(endorsers)), orderer_(orderer), policy_(policy) {}

std::future<TxOutcome> Channel::submit_async(const Proposal& proposal, Peer& observer) {
  // Peers apply each block one after another, so a simulation that straddles
  // a delivery sees two different heights. Such a mismatch is retried once
  // the peers line up; one at equal heights is a real divergence.
  constexpr auto kRendezvous = std::chrono::seconds(5);
  const auto deadline = std::chrono::steady_clock::now() + kRendezvous;
  std::optional<Transaction> endorsed;
  while (!endorsed) {
    auto before = heights(endorsers_);
    try {
      endorsed = endorse(proposal, endorsers_, policy_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EndorsementMismatch) throw;
      bool skewed = std::adjacent_find(before.begin(), before.end(), std::not_equal_to<>()) != before.end();
      bool moved = skewed || heights(endorsers_) != before;
      if (!moved || std::chrono::steady_clock::now() > deadline) throw;
      while (!heights_agree(endorsers_) && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    }
  }
  auto tx = std::move(*endorsed);
  auto committed = observer.wait_for(tx.tx_id);
  orderer_.submit(std::move(tx));
  return committed;
}

TxOutcome Channel::submit(const Proposal& proposal, Peer& observer, std::chrono::milliseconds timeout) {
  auto future = submit_async(proposal, observer);
  if (future.wait_for(timeout) != std::future_status::ready) {
    throw Error(ErrorCode::LedgerError, "transaction " + proposal.tx_id() + " not committed in time");
  }
  return future.get();
}

std::string Channel::evaluate(const Proposal& proposal, const Peer& peer) const {
  return peer.simulate(proposal).response;
}

}  // namespace dbcabac::ledger
