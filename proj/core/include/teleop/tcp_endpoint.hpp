#pragma once

// Length-delimited JSON frames over TCP: each frame is a 4-byte big-endian
// payload length followed by that many bytes of UTF-8 JSON. The first
// client frame must be {"type": "open"} (optionally with "resume": id); the
// server answers with a snapshot or a refusal and then streams the
// session's outbound messages.

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "teleop/teleop_service.hpp"

namespace teleop {

inline constexpr std::size_t kMaxFrameSize = 1 << 20;

std::string encode_frame(std::string_view payload);

/// Incremental frame parser. Throws InputError on a frame larger than
/// kMaxFrameSize.
class FrameDecoder {
 public:
  void feed(const char* data, std::size_t size);
  std::optional<std::string> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

class TcpServer {
 public:
  /// Port 0 binds an ephemeral port; see port().
  TcpServer(SessionService& service, std::uint16_t port, std::string bind_address = "127.0.0.1");
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  struct Connection;

  void accept_loop();
  void housekeeping_loop();
  void serve(std::shared_ptr<Connection> c);

  SessionService& service_;
  std::string bind_address_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::thread housekeeping_thread_;
  std::mutex conn_mu_;
  std::list<std::shared_ptr<Connection>> connections_;
};

/// Blocking client used by tests and tools.
class FrameClient {
 public:
  FrameClient() = default;
  ~FrameClient();
  FrameClient(const FrameClient&) = delete;
  FrameClient& operator=(const FrameClient&) = delete;

  /// Throws std::runtime_error when the connection fails.
  void connect(const std::string& host, std::uint16_t port);
  void send(std::string_view payload);
  /// Next frame, or nullopt on timeout or closed connection.
  std::optional<std::string> receive(double timeout_s);
  void close();
  bool connected() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

}  // namespace teleop
