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
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "dbcabac/ledger.hpp"

namespace dbcabac::ledger {

// Total-order broadcast. The only implementation is a single in-process
// sequencer; a replicated one can slot in behind this interface.
class OrderingService {
 public:
  using Deliver = std::function<void(const Block&)>;

  virtual ~OrderingService() = default;
  virtual void subscribe(Deliver deliver) = 0;
  virtual void submit(Transaction tx) = 0;
  virtual std::uint64_t height() const = 0;
};

// FIFO sequencer. Cuts a block when max_block_txs transactions are pending or
// block_timeout has passed since the oldest pending one arrived.
//
// Without start() it runs in manual mode: submit() cuts synchronously when a
// block fills up, and poll()/flush() drive the timer. With start() a worker
// thread owns the timer.
//
// It keeps a validating ledger replica of its own so it can link each block
// to the committed hash of its predecessor.
class Sequencer final : public OrderingService {
 public:
  using Clock = std::chrono::steady_clock;

  struct Options {
    std::size_t max_block_txs = 10;
    std::chrono::milliseconds block_timeout{250};
  };

  Sequencer(Options options, EndorsementPolicy policy,
            std::optional<std::filesystem::path> archive = std::nullopt);
  ~Sequencer() override;

  void subscribe(Deliver deliver) override;
  void submit(Transaction tx) override;
  std::uint64_t height() const override { return replica_.height(); }

  // Cuts every block that is due at `now`; returns how many were cut.
  std::size_t poll(Clock::time_point now);
  // Cuts all pending transactions regardless of the timer.
  std::size_t flush();

  void start();
  void stop();

  const Ledger& replica() const noexcept { return replica_; }
  std::size_t pending() const;

 private:
  struct Pending {
    Transaction tx;
    Clock::time_point arrived;
  };

  // Takes up to max_block_txs pending txs and orders them. Caller holds
  // order_mutex_.
  bool cut_one(bool only_if_due, Clock::time_point now);
  void run();

  Options options_;
  Ledger replica_;
  std::vector<Deliver> subscribers_;

  std::mutex order_mutex_;
  mutable std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<Pending> queue_;
  bool running_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace dbcabac::ledger
