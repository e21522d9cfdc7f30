#include "teleop/tcp_endpoint.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace teleop {

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// 1 = data available, 0 = timeout, -1 = error/closed.
int wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  const int r = ::poll(&p, 1, timeout_ms);
  if (r < 0) return errno == EINTR ? 0 : -1;
  if (r == 0) return 0;
  if (p.revents & (POLLIN | POLLHUP | POLLERR)) return 1;
  return 0;
}

}  // namespace

std::string encode_frame(std::string_view payload) {
  if (payload.size() > kMaxFrameSize) throw InputError("frame exceeds the maximum size");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out(4, '\0');
  out[0] = static_cast<char>((n >> 24) & 0xff);
  out[1] = static_cast<char>((n >> 16) & 0xff);
  out[2] = static_cast<char>((n >> 8) & 0xff);
  out[3] = static_cast<char>(n & 0xff);
  out.append(payload);
  return out;
}

void FrameDecoder::feed(const char* data, std::size_t size) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.append(data, size);
}

std::optional<std::string> FrameDecoder::next() {
  if (buf_.size() - pos_ < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + pos_);
  const std::uint32_t n = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                          (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
  if (n > kMaxFrameSize) throw InputError("incoming frame of " + std::to_string(n) + " bytes is too large");
  if (buf_.size() - pos_ < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string frame = buf_.substr(pos_ + 4, n);
  pos_ += 4 + n;
  if (pos_ > 65536) {
    buf_.erase(0, pos_);
    pos_ = 0;
  }
  return frame;
}

struct TcpServer::Connection {
  int fd = -1;
  std::thread reader;
  std::atomic<bool> done{false};
};

TcpServer::TcpServer(SessionService& service, std::uint16_t port, std::string bind_address)
    : service_(service), bind_address_(std::move(bind_address)), port_(port) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigError("invalid bind address: " + bind_address_);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on " + bind_address_ + ":" + std::to_string(port_) +
                             ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  housekeeping_thread_ = std::thread([this] { housekeeping_loop(); });
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (housekeeping_thread_.joinable()) housekeeping_thread_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::list<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& c : conns) {
    ::shutdown(c->fd, SHUT_RDWR);
    if (c->reader.joinable()) c->reader.join();
  }
}

void TcpServer::housekeeping_loop() {
  while (running_) {
    service_.tick();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void TcpServer::accept_loop() {
  while (running_) {
    if (wait_readable(listen_fd_, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto c = std::make_shared<Connection>();
    c->fd = fd;
    std::lock_guard lock(conn_mu_);
    // Reap finished connections.
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->done) {
        if ((*it)->reader.joinable()) (*it)->reader.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    connections_.push_back(c);
    c->reader = std::thread([this, c] { serve(c); });
  }
}

void TcpServer::serve(std::shared_ptr<Connection> c) {
  FrameDecoder decoder;
  char buf[4096];
  auto read_frame = [&](std::string& out) -> bool {
    for (;;) {
      if (auto f = decoder.next()) {
        out = std::move(*f);
        return true;
      }
      if (!running_) return false;
      const int r = wait_readable(c->fd, 100);
      if (r < 0) return false;
      if (r == 0) continue;
      const ssize_t n = ::recv(c->fd, buf, sizeof buf, 0);
      if (n <= 0) return false;
      decoder.feed(buf, static_cast<std::size_t>(n));
    }
  };
  auto finish = [&] {
    ::close(c->fd);
    c->done = true;
  };
  auto reject = [&](const std::string& code, const std::string& message) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["type"] = "event";
    j["session"] = 0;
    j["seq"] = 1;
    j["level"] = "error";
    j["code"] = code;
    j["message"] = message;
    send_all(c->fd, encode_frame(j.dump()));
  };

  std::string frame;
  try {
    if (!read_frame(frame)) return finish();
  } catch (const InputError& e) {
    reject("malformed", e.what());
    return finish();
  }
  std::optional<SessionId> resume;
  try {
    const auto j = nlohmann::json::parse(frame);
    if (!j.is_object() || j.value("type", "") != "open") {
      reject("not_open", "the first message must be {\"type\": \"open\"}");
      return finish();
    }
    if (j.contains("resume") && !j["resume"].is_null()) {
      if (!j["resume"].is_number_unsigned()) {
        reject("malformed", "resume must be a session id");
        return finish();
      }
      resume = j["resume"].get<SessionId>();
    }
  } catch (const nlohmann::json::exception& e) {
    reject("malformed", std::string("invalid JSON: ") + e.what());
    return finish();
  }

  const OpenResult opened = service_.open_session(resume);
  if (!send_all(c->fd, encode_frame(opened.message)) || !opened.accepted) return finish();
  const SessionId id = opened.id;
  auto outbox = service_.outbox(id);

  std::atomic<bool> closed{false};
  std::thread writer([&] {
    while (!closed && outbox) {
      outbox->wait(0.1);
      for (const auto& m : outbox->drain()) {
        if (!send_all(c->fd, encode_frame(m))) {
          closed = true;
          ::shutdown(c->fd, SHUT_RDWR);
          return;
        }
      }
      if (!service_.alive(id)) {
        closed = true;
        ::shutdown(c->fd, SHUT_RDWR);
        return;
      }
    }
  });

  bool rejected = false;
  try {
    while (!closed && read_frame(frame)) service_.handle_inbound(id, frame);
  } catch (const InputError& e) {
    service_.report_malformed(id, e.what());
    rejected = true;
  }
  closed = true;
  if (outbox) outbox->wake();
  writer.join();
  if (rejected && outbox) {
    // The connection is dropped; deliver what is queued, including the error.
    for (const auto& m : outbox->drain()) {
      if (!send_all(c->fd, encode_frame(m))) break;
    }
  }
  service_.detach(id);
  finish();
}

FrameClient::~FrameClient() { close(); }

void FrameClient::connect(const std::string& host, std::uint16_t port) {
  close();
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw std::runtime_error("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    close();
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  decoder_ = FrameDecoder{};
}

void FrameClient::send(std::string_view payload) {
  if (fd_ < 0 || !send_all(fd_, encode_frame(payload))) {
    throw std::runtime_error("send on a closed connection");
  }
}

std::optional<std::string> FrameClient::receive(double timeout_s) {
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  char buf[4096];
  for (;;) {
    if (auto f = decoder_.next()) return f;
    if (fd_ < 0) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    const int r = wait_readable(fd_, static_cast<int>(left.count()));
    if (r < 0) return std::nullopt;
    if (r == 0) continue;
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) {
      close();
      return decoder_.next();
    }
    decoder_.feed(buf, static_cast<std::size_t>(n));
  }
}

void FrameClient::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace teleop
