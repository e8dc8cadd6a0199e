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

#include "dbcabac/ordering.hpp"

#include "dbcabac/error.hpp"

namespace dbcabac::ledger {

Sequencer::Sequencer(Options options, EndorsementPolicy policy,
                     std::optional<std::filesystem::path> archive)
    : options_(options), replica_(std::move(policy), std::move(archive)) {
  if (options_.max_block_txs == 0) throw Error(ErrorCode::ConfigError, "max_block_txs must be positive");
}

Sequencer::~Sequencer() { stop(); }

void Sequencer::subscribe(Deliver deliver) {
  std::lock_guard lock(order_mutex_);
  subscribers_.push_back(std::move(deliver));
}

void Sequencer::submit(Transaction tx) {
  bool cut_now = false;
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back({std::move(tx), Clock::now()});
    cut_now = !running_ && queue_.size() >= options_.max_block_txs;
  }
  queue_cv_.notify_one();
  if (cut_now) {
    std::lock_guard order(order_mutex_);
    while (cut_one(true, Clock::now())) {
    }
  }
}

std::size_t Sequencer::pending() const {
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

bool Sequencer::cut_one(bool only_if_due, Clock::time_point now) {
  Block block;
  {
    std::lock_guard lock(queue_mutex_);
    if (queue_.empty()) return false;
    const bool full = queue_.size() >= options_.max_block_txs;
    const bool timed_out = now - queue_.front().arrived >= options_.block_timeout;
    if (only_if_due && !full && !timed_out) return false;
    const auto n = std::min(queue_.size(), options_.max_block_txs);
    for (std::size_t i = 0; i < n; ++i) {
      block.txs.push_back(std::move(queue_.front().tx));
      queue_.pop_front();
    }
  }
  block.height = replica_.height() + 1;
  block.prev_hash = replica_.tip_hash();
  replica_.validate_and_commit(block);
  auto committed = replica_.block(block.height);
  // A subscriber that fails to commit (diverged state, tampered archive)
  // falls behind and catches up through sync; it never stalls the others.
  for (const auto& deliver : subscribers_) {
    try {
      deliver(*committed);
    } catch (const std::exception&) {
    }
  }
  return true;
}

std::size_t Sequencer::poll(Clock::time_point now) {
  std::lock_guard order(order_mutex_);
  std::size_t n = 0;
  while (cut_one(true, now)) ++n;
  return n;
}

std::size_t Sequencer::flush() {
  std::lock_guard order(order_mutex_);
  std::size_t n = 0;
  while (cut_one(false, Clock::now())) ++n;
  return n;
}

void Sequencer::start() {
  std::lock_guard lock(queue_mutex_);
  if (running_) return;
  running_ = true;
  stopping_ = false;
  worker_ = std::thread([this] { run(); });
}

void Sequencer::stop() {
  {
    std::lock_guard lock(queue_mutex_);
    if (!running_) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  worker_.join();
  {
    std::lock_guard lock(queue_mutex_);
    running_ = false;
  }
  flush();
}

void Sequencer::run() {
  std::unique_lock lock(queue_mutex_);
  while (true) {
    queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (stopping_) return;
    if (queue_.size() < options_.max_block_txs) {
      auto deadline = queue_.front().arrived + options_.block_timeout;
      queue_cv_.wait_until(lock, deadline, [&] {
        return stopping_ || queue_.size() >= options_.max_block_txs;
      });
      if (stopping_) return;
    }
    lock.unlock();
    {
      std::lock_guard order(order_mutex_);
      while (cut_one(true, Clock::now())) {
      }
    }
    lock.lock();
  }
}

}  // namespace dbcabac::ledger
