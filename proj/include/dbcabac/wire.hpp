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

// Inter-edge and client-to-edge framing: a 4-byte big-endian length followed
// by the canonical document {"type": ..., "body": {...}}. One request and one
// response per exchange; a connection may carry several exchanges.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dbcabac/canonical.hpp"

namespace dbcabac::wire {

enum class MessageType {
  ForwardRequest,
  ForwardResponse,
  BlockFetch,
  BlockResponse,
  // Client surface.
  Submit,
  SubmitResponse,
  Evaluate,
  DataGet,
  DataGetResponse,
  Ingest,
  Status,
  StatusResponse,
  Shutdown,
  Error,
};

std::string_view to_string(MessageType type) noexcept;
std::optional<MessageType> parse_message_type(std::string_view text);

struct Message {
  MessageType type = MessageType::Error;
  Document body = Document::object();
};

inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

std::string encode_frame(const Message& message);
// Decodes one complete frame (length prefix included). Throws
// std::invalid_argument on a malformed frame.
Message decode_frame(std::string_view frame);

// Error response helper: {"code", "message"}.
Message error_message(std::string_view code, std::string_view text);

using Handler = std::function<Message(const Message&)>;

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws dbcabac::Error(NetworkError) when the endpoint is unreachable.
  virtual Message request(const std::string& endpoint, const Message& message) = 0;
};

// In-process transport: endpoints are names bound to handlers. Messages are
// still encoded and decoded so the framing is exercised.
class LoopbackTransport final : public Transport {
 public:
  void bind(const std::string& endpoint, Handler handler);
  void unbind(const std::string& endpoint);
  Message request(const std::string& endpoint, const Message& message) override;

 private:
  std::mutex mutex_;
  std::map<std::string, Handler> handlers_;
};

// "host:port" over TCP. One connection per request.
class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(int timeout_ms = 10000) : timeout_ms_(timeout_ms) {}
  Message request(const std::string& endpoint, const Message& message) override;

 private:
  int timeout_ms_;
};

// Accept loop on host:port; each connection is served on its own thread.
class TcpServer {
 public:
  // Throws dbcabac::Error(PortInUse) when the port cannot be bound.
  TcpServer(const std::string& endpoint, Handler handler);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex workers_mutex_;
  std::vector<Worker> workers_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};
// Throws dbcabac::Error(ConfigError).
Endpoint parse_endpoint(std::string_view text);

}  // namespace dbcabac::wire
