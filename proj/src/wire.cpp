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

#include "dbcabac/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "dbcabac/error.hpp"

namespace dbcabac::wire {
namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 14> kNames{{
    {MessageType::ForwardRequest, "ForwardRequest"},
    {MessageType::ForwardResponse, "ForwardResponse"},
    {MessageType::BlockFetch, "BlockFetch"},
    {MessageType::BlockResponse, "BlockResponse"},
    {MessageType::Submit, "Submit"},
    {MessageType::SubmitResponse, "SubmitResponse"},
    {MessageType::Evaluate, "Evaluate"},
    {MessageType::DataGet, "DataGet"},
    {MessageType::DataGetResponse, "DataGetResponse"},
    {MessageType::Ingest, "Ingest"},
    {MessageType::Status, "Status"},
    {MessageType::StatusResponse, "StatusResponse"},
    {MessageType::Shutdown, "Shutdown"},
    {MessageType::Error, "Error"},
}};

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t get_be32(const char* p) {
  auto b = [p](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

Message from_body_document(const Document& doc) {
  if (!doc.is_object() || doc.size() != 2 || !doc.contains("type") ||
      !doc.contains("body") || !doc["type"].is_string() || !doc["body"].is_object()) {
    throw std::invalid_argument("frame document must be {type, body}");
  }
  auto type = parse_message_type(doc["type"].get<std::string>());
  if (!type) throw std::invalid_argument("unknown message type");
  return Message{*type, doc["body"]};
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Returns false on EOF before any byte, throws on a truncated read.
bool read_exact(int fd, char* buf, std::size_t len, bool eof_ok) {
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::recv(fd, buf + got, len - got, 0);
    if (n == 0) {
      if (got == 0 && eof_ok) return false;
      throw Error(ErrorCode::NetworkError, "connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::NetworkError, std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<Message> read_frame(int fd) {
  char header[4];
  if (!read_exact(fd, header, 4, true)) return std::nullopt;
  std::uint32_t len = get_be32(header);
  if (len > kMaxFrameBytes) throw Error(ErrorCode::NetworkError, "frame too large");
  std::string body(len, '\0');
  read_exact(fd, body.data(), len, false);
  try {
    return from_body_document(parse_canonical(body));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::NetworkError, std::string("malformed frame: ") + e.what());
  }
}

void set_timeouts(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

}  // namespace

std::string_view to_string(MessageType type) noexcept {
  for (const auto& [t, name] : kNames) {
    if (t == type) return name;
  }
  return "Error";
}

std::optional<MessageType> parse_message_type(std::string_view text) {
  for (const auto& [t, name] : kNames) {
    if (name == text) return t;
  }
  return std::nullopt;
}

std::string encode_frame(const Message& message) {
  Document body_doc = message.body.is_null() ? Document::object() : message.body;
  Document doc = {{"type", std::string(to_string(message.type))}, {"body", body_doc}};
  std::string body = canonical(doc);
  if (body.size() > kMaxFrameBytes) throw Error(ErrorCode::NetworkError, "frame too large");
  std::string out;
  out.reserve(body.size() + 4);
  put_be32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  return out;
}

Message decode_frame(std::string_view frame) {
  if (frame.size() < 4) throw std::invalid_argument("frame shorter than its header");
  std::uint32_t len = get_be32(frame.data());
  if (len != frame.size() - 4) throw std::invalid_argument("frame length mismatch");
  return from_body_document(parse_canonical(frame.substr(4)));
}

Message error_message(std::string_view code, std::string_view text) {
  return Message{MessageType::Error,
                 {{"code", std::string(code)}, {"message", std::string(text)}}};
}

void LoopbackTransport::bind(const std::string& endpoint, Handler handler) {
  std::lock_guard lock(mutex_);
  handlers_[endpoint] = std::move(handler);
}

void LoopbackTransport::unbind(const std::string& endpoint) {
  std::lock_guard lock(mutex_);
  handlers_.erase(endpoint);
}

Message LoopbackTransport::request(const std::string& endpoint, const Message& message) {
  Handler handler;
  {
    std::lock_guard lock(mutex_);
    auto it = handlers_.find(endpoint);
    if (it == handlers_.end()) {
      throw Error(ErrorCode::NetworkError, "no endpoint bound at " + endpoint);
    }
    handler = it->second;
  }
  Message request = decode_frame(encode_frame(message));
  return decode_frame(encode_frame(handler(request)));
}

Endpoint parse_endpoint(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::ConfigError, "endpoint must be host:port: " + std::string(text));
  }
  unsigned value = 0;
  auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value > 65535) {
    throw Error(ErrorCode::ConfigError, "bad port in endpoint: " + std::string(text));
  }
  return Endpoint{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(value)};
}

Message TcpTransport::request(const std::string& endpoint, const Message& message) {
  Endpoint ep = parse_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::NetworkError, "resolve " + endpoint + ": " + ::gai_strerror(rc));
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw Error(ErrorCode::NetworkError, "socket failed");
  }
  set_timeouts(fd, timeout_ms_);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorCode::NetworkError, "connect " + endpoint + ": " + why);
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  try {
    if (!write_all(fd, encode_frame(message))) {
      throw Error(ErrorCode::NetworkError, "send to " + endpoint + " failed");
    }
    auto response = read_frame(fd);
    ::close(fd);
    if (!response) throw Error(ErrorCode::NetworkError, endpoint + " closed without a response");
    return *response;
  } catch (...) {
    ::close(fd);
    throw;
  }
}

TcpServer::TcpServer(const std::string& endpoint, Handler handler) : handler_(std::move(handler)) {
  Endpoint ep = parse_endpoint(endpoint);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::NetworkError, "socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host == "0.0.0.0" || ep.host.empty()) {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (ep.host == "localhost") {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::ConfigError, "listen host must be an IPv4 address: " + ep.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    int err = errno;
    ::close(listen_fd_);
    if (err == EADDRINUSE) throw Error(ErrorCode::PortInUse, endpoint);
    throw Error(ErrorCode::NetworkError, "bind " + endpoint + ": " + std::strerror(err));
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::NetworkError, "listen failed on " + endpoint);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::vector<Worker> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
}

void TcpServer::accept_loop() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, 100);
    if (rc <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_timeouts(fd, 30000);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(workers_mutex_);
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back(Worker{std::thread([this, fd, done] {
                                serve(fd);
                                done->store(true);
                              }),
                              done});
  }
}

void TcpServer::serve(int fd) {
  try {
    while (true) {
      auto request = read_frame(fd);
      if (!request) break;
      Message response;
      try {
        response = handler_(*request);
      } catch (const Error& e) {
        response = error_message(error_code_name(e.code()), e.detail());
      } catch (const std::exception& e) {
        response = error_message("NetworkError", e.what());
      }
      if (!write_all(fd, encode_frame(response))) break;
    }
  } catch (const std::exception&) {
    // A broken client connection only affects that client.
  }
  ::close(fd);
}

}  // namespace dbcabac::wire
