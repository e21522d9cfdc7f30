#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "json.hpp"
#include "teleop/tcp_endpoint.hpp"

using namespace teleop;
using nlohmann::json;

namespace {

const RobotConfig& robot() {
  static const RobotConfig r = default_robot_config();
  return r;
}

// Frames until one of the given type arrives, or nullopt after the timeout.
std::optional<json> receive_type(FrameClient& c, const std::string& type, double timeout = 3.0) {
  while (auto f = c.receive(timeout)) {
    const json j = json::parse(*f);
    if (j["type"] == type) return j;
  }
  return std::nullopt;
}

}  // namespace

TEST(Frames, EncodeIsBigEndianLength) {
  const std::string f = encode_frame("{}");
  ASSERT_EQ(f.size(), 6u);
  EXPECT_EQ(f.substr(0, 4), std::string("\0\0\0\2", 4));
  EXPECT_EQ(f.substr(4), "{}");
  const std::string big = encode_frame(std::string(300, 'x'));
  EXPECT_EQ(static_cast<unsigned char>(big[2]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(big[3]), 44u);
}

TEST(Frames, DecoderHandlesPartialFeeds) {
  const std::string stream = encode_frame(R"({"type":"ping"})") + encode_frame("") + encode_frame("[1]");
  FrameDecoder d;
  std::vector<std::string> got;
  for (char ch : stream) {
    d.feed(&ch, 1);
    while (auto f = d.next()) got.push_back(*f);
  }
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], R"({"type":"ping"})");
  EXPECT_EQ(got[1], "");
  EXPECT_EQ(got[2], "[1]");
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(Frames, IncompleteFrameWaits) {
  FrameDecoder d;
  const std::string f = encode_frame("abcdef");
  d.feed(f.data(), 7);
  EXPECT_FALSE(d.next().has_value());
  d.feed(f.data() + 7, f.size() - 7);
  EXPECT_EQ(d.next().value(), "abcdef");
}

TEST(Frames, OversizeIsRejected) {
  EXPECT_THROW(encode_frame(std::string(kMaxFrameSize + 1, 'x')), InputError);
  FrameDecoder d;
  const char header[4] = {0, 0x20, 0, 0};  // 2 MiB
  d.feed(header, 4);
  EXPECT_THROW(d.next(), InputError);
}

TEST(TcpServer, OpenPingAndStream) {
  ServiceOptions opt;
  opt.threaded = true;
  SessionService svc(robot(), opt);
  TcpServer server(svc, 0);
  server.start();
  ASSERT_NE(server.port(), 0);

  FrameClient c;
  c.connect("127.0.0.1", server.port());
  c.send(R"({"type": "open"})");
  const auto snap = c.receive(3.0);
  ASSERT_TRUE(snap.has_value());
  const json s = json::parse(*snap);
  EXPECT_EQ(s["type"], "snapshot");
  const SessionId id = s["session"];

  c.send(R"({"type": "ping", "seq": 5})");
  const auto ack = receive_type(c, "ack");
  ASSERT_TRUE(ack.has_value());
  EXPECT_EQ((*ack)["ref_seq"], 5);
  const auto state = receive_type(c, "state");
  ASSERT_TRUE(state.has_value());
  EXPECT_EQ((*state)["session"], id);

  c.send("{broken");
  const auto err = receive_type(c, "event");
  ASSERT_TRUE(err.has_value());
  EXPECT_EQ((*err)["code"], "malformed");
  EXPECT_TRUE(svc.alive(id));

  c.close();
  server.stop();
}

TEST(TcpServer, FirstFrameMustBeOpen) {
  ServiceOptions opt;
  opt.threaded = true;
  SessionService svc(robot(), opt);
  TcpServer server(svc, 0);
  server.start();

  FrameClient c;
  c.connect("127.0.0.1", server.port());
  c.send(R"({"type": "ping"})");
  const auto f = c.receive(3.0);
  ASSERT_TRUE(f.has_value());
  const json j = json::parse(*f);
  EXPECT_EQ(j["type"], "event");
  EXPECT_EQ(j["code"], "not_open");
  EXPECT_FALSE(c.receive(1.0).has_value());
  EXPECT_EQ(svc.session_count(), 0u);

  FrameClient d;
  d.connect("127.0.0.1", server.port());
  d.send(R"({"type": "open", "resume": 12})");
  const json r = json::parse(d.receive(3.0).value());
  EXPECT_EQ(r["type"], "refused");
  server.stop();
}

TEST(TcpServer, OversizeFrameEndsConnectionWithError) {
  ServiceOptions opt;
  opt.threaded = true;
  SessionService svc(robot(), opt);
  TcpServer server(svc, 0);
  server.start();

  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(server.port());
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const std::string open = encode_frame(R"({"type": "open"})");
  ASSERT_EQ(::send(fd, open.data(), open.size(), 0), static_cast<ssize_t>(open.size()));
  const char header[4] = {0, 0x20, 0, 0};  // announces 2 MiB
  ASSERT_EQ(::send(fd, header, 4, 0), 4);

  FrameDecoder d;
  std::vector<json> got;
  char buf[65536];
  ssize_t n;
  while ((n = ::recv(fd, buf, sizeof buf, 0)) > 0) {
    d.feed(buf, static_cast<std::size_t>(n));
    while (auto f = d.next()) got.push_back(json::parse(*f));
  }
  ::close(fd);
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got.front()["type"], "snapshot");
  bool reported = false;
  for (const auto& m : got) reported = reported || (m["type"] == "event" && m["code"] == "malformed");
  EXPECT_TRUE(reported);
  server.stop();
}

TEST(TcpServer, ResumeAfterDisconnect) {
  ServiceOptions opt;
  opt.threaded = true;
  SessionService svc(robot(), opt);
  TcpServer server(svc, 0);
  server.start();
  SessionId id;
  {
    FrameClient c;
    c.connect("127.0.0.1", server.port());
    c.send(R"({"type": "open"})");
    id = json::parse(c.receive(3.0).value())["session"];
  }
  for (int i = 0; i < 50 && svc.alive(id); ++i) {
    FrameClient c;
    c.connect("127.0.0.1", server.port());
    c.send(json{{"type", "open"}, {"resume", id}}.dump());
    const json r = json::parse(c.receive(3.0).value());
    if (r["type"] == "snapshot") {
      EXPECT_EQ(r["resumed"], true);
      EXPECT_EQ(r["session"], id);
      server.stop();
      return;
    }
    // The server may not have noticed the first disconnect yet.
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  FAIL() << "resume was never accepted";
}
