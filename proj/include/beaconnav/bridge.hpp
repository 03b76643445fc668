#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "beaconnav/geometry.hpp"

namespace beaconnav::bridge {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxTopicLen = 255;
inline constexpr std::size_t kMaxPayloadLen = 16u * 1024u * 1024u;
inline constexpr std::size_t kPoseMsgLen = 56;
inline constexpr std::uint16_t kDefaultPort = 10000;

inline constexpr std::string_view kGoalTopic = "goal_pose";
inline constexpr std::string_view kRobotPoseTopic = "robot_pose";
inline constexpr std::string_view kLogTopic = "log";

struct Frame {
  std::string topic;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

// [u32 LE topic_len][topic][u32 LE payload_len][payload]
Bytes encode_frame(std::string_view topic, std::span<const std::uint8_t> payload);
inline Bytes encode_frame(const Frame& f) { return encode_frame(f.topic, f.payload); }

struct Decoded {
  Frame frame;
  std::size_t consumed = 0;
};

// nullopt means more bytes are needed; nothing is consumed in that case.
// Declared lengths beyond the limits throw Protocol.
std::optional<Decoded> decode_frame(std::span<const std::uint8_t> bytes);

// Accumulates stream chunks and yields complete frames.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> chunk);
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

// Seven little-endian f64: x, y, z, qx, qy, qz, qw. Robot map frame only.
std::array<std::uint8_t, kPoseMsgLen> encode_pose_msg(const geometry::Pose& p);
geometry::Pose decode_pose_msg(std::span<const std::uint8_t> bytes);

Bytes encode_log_msg(std::string_view text);
std::string decode_log_msg(std::span<const std::uint8_t> bytes);

bool valid_utf8(std::string_view s);

using Clock = std::chrono::steady_clock;

struct EndpointConfig {
  std::string host = "0.0.0.0";
  std::uint16_t port = kDefaultPort;  // 0 picks an ephemeral port
  double max_pose_rate_hz = 50.0;
};

// Server side of the robot link. Accepts one robot connection at a time,
// pushes goals (newest wins, depth 1) and routes inbound robot_pose/log frames.
class Endpoint {
 public:
  using PoseSink = std::function<void(const geometry::Pose&, Clock::time_point)>;
  using LogSink = std::function<void(const std::string&)>;

  Endpoint(EndpointConfig config, PoseSink on_pose, LogSink on_log);
  ~Endpoint();
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  // Binds and starts the I/O thread. Throws Io if the address is unavailable.
  void start();
  void stop();

  std::uint16_t port() const { return bound_port_; }
  bool connected() const { return connected_.load(); }

  // Replaces any goal not yet written to the robot.
  void send_goal(const geometry::Pose& goal);
  bool goal_pending() const;

  std::uint64_t protocol_errors() const { return protocol_errors_.load(); }
  std::uint64_t refused_connections() const { return refused_.load(); }

 private:
  void run();
  void wake();

  EndpointConfig config_;
  PoseSink on_pose_;
  LogSink on_log_;

  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t bound_port_ = 0;
  std::thread io_;
  std::atomic<bool> running_{false};
  std::atomic<bool> connected_{false};
  std::atomic<std::uint64_t> protocol_errors_{0};
  std::atomic<std::uint64_t> refused_{0};

  mutable std::mutex goal_mu_;
  std::optional<geometry::Pose> pending_goal_;
};

// Robot side of the link: a blocking TCP client used by the robot stub and tests.
class RobotLink {
 public:
  RobotLink() = default;
  ~RobotLink();
  RobotLink(const RobotLink&) = delete;
  RobotLink& operator=(const RobotLink&) = delete;

  // Throws Io on failure.
  void connect(const std::string& host, std::uint16_t port);
  void close();
  bool is_open() const { return fd_ >= 0; }

  void send_frame(std::string_view topic, std::span<const std::uint8_t> payload);
  void send_raw(std::span<const std::uint8_t> bytes);
  void send_pose(const geometry::Pose& p);
  void send_log(std::string_view text);

  // Waits up to timeout for one frame. nullopt on timeout; throws Io if the peer closed.
  std::optional<Frame> receive(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

}  // namespace beaconnav::bridge
