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
#include <future>
#include <vector>

#include "dbcabac/ledger.hpp"
#include "dbcabac/ordering.hpp"

namespace dbcabac::ledger {

// Client view of the transaction pipeline: endorse on every required peer,
// hand the endorsed transaction to the orderer, and report when it becomes
// visible on an observing peer.
class Channel {
 public:
  Channel(std::vector<Peer*> endorsers, OrderingService& orderer, const EndorsementPolicy& policy);

  // Endorsement errors throw synchronously; the future resolves at commit.
  std::future<TxOutcome> submit_async(const Proposal& proposal, Peer& observer);

  // Blocks until commit. Throws Error(LedgerError) on timeout.
  TxOutcome submit(const Proposal& proposal, Peer& observer,
                   std::chrono::milliseconds timeout = std::chrono::seconds(10));

  // Read-only evaluation on a single peer; nothing is ordered.
  std::string evaluate(const Proposal& proposal, const Peer& peer) const;

  const EndorsementPolicy& policy() const noexcept { return policy_; }

 private:
  std::vector<Peer*> endorsers_;
  OrderingService& orderer_;
  const EndorsementPolicy& policy_;
};

}  // namespace dbcabac::ledger
