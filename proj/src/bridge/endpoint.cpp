#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

#include "beaconnav/bridge.hpp"

namespace beaconnav::bridge {

namespace {

[[noreturn]] void throw_io(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

Endpoint::Endpoint(EndpointConfig config, PoseSink on_pose, LogSink on_log)
    : config_(std::move(config)), on_pose_(std::move(on_pose)), on_log_(std::move(on_log)) {}

Endpoint::~Endpoint() { stop(); }

void Endpoint::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw_io("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
    close_fd(listen_fd_);
    throw Error(ErrorCode::Config, "bridge: invalid IPv4 address '" + config_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    close_fd(listen_fd_);
    errno = err;
    throw_io("bridge: bind " + config_.host + ":" + std::to_string(config_.port));
  }
  if (::listen(listen_fd_, 4) != 0) {
    close_fd(listen_fd_);
    throw_io("bridge: listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);

  if (::pipe2(wake_pipe_, O_CLOEXEC | O_NONBLOCK) != 0) {
    close_fd(listen_fd_);
    throw_io("bridge: pipe");
  }
  running_ = true;
  io_ = std::thread([this] { run(); });
}

void Endpoint::stop() {
  if (!running_.exchange(false)) return;
  wake();
  if (io_.joinable()) io_.join();
  close_fd(listen_fd_);
  close_fd(wake_pipe_[0]);
  close_fd(wake_pipe_[1]);
}

void Endpoint::wake() {
  if (wake_pipe_[1] >= 0) {
    const char b = 1;
    [[maybe_unused]] auto n = ::write(wake_pipe_[1], &b, 1);
  }
}

void Endpoint::send_goal(const geometry::Pose& goal) {
  // Validate before queueing so the I/O thread never sees an unencodable goal.
  encode_pose_msg(goal);
  {
    std::lock_guard lock(goal_mu_);
    pending_goal_ = goal;
  }
  wake();
}

bool Endpoint::goal_pending() const {
  std::lock_guard lock(goal_mu_);
  return pending_goal_.has_value();
}

void Endpoint::run() {
  int client = -1;
  FrameDecoder decoder;
  Bytes out;            // bytes of the goal currently being written
  std::size_t out_pos = 0;
  std::optional<geometry::Pose> in_flight;
  const auto min_pose_gap = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(config_.max_pose_rate_hz > 0 ? 1.0 / config_.max_pose_rate_hz : 0.0));
  Clock::time_point last_pose_delivery{};
  std::optional<geometry::Pose> held_pose;

  const auto drop_client = [&](const std::string& why) {
    if (client < 0) return;
    if (!why.empty()) std::cerr << "bridge: closing robot connection: " << why << '\n';
    close_fd(client);
    connected_ = false;
    decoder = FrameDecoder{};
    held_pose.reset();
    // Re-queue a partially written goal unless a newer one superseded it.
    if (in_flight) {
      std::lock_guard lock(goal_mu_);
      if (!pending_goal_) pending_goal_ = in_flight;
    }
    in_flight.reset();
    out.clear();
    out_pos = 0;
  };

  const auto deliver_pose = [&](const geometry::Pose& p, Clock::time_point now) {
    last_pose_delivery = now;
    if (on_pose_) on_pose_(p, now);
  };

  std::uint8_t buf[64 * 1024];
  while (running_) {
    const auto now = Clock::now();
    if (held_pose && now - last_pose_delivery >= min_pose_gap) {
      deliver_pose(*held_pose, now);
      held_pose.reset();
    }

    if (client >= 0 && !in_flight) {
      std::lock_guard lock(goal_mu_);
      if (pending_goal_) {
        in_flight = pending_goal_;
        pending_goal_.reset();
        const auto msg = encode_pose_msg(*in_flight);
        out = encode_frame(kGoalTopic, msg);
        out_pos = 0;
      }
    }

    pollfd fds[3];
    nfds_t nfds = 0;
    fds[nfds++] = {wake_pipe_[0], POLLIN, 0};
    fds[nfds++] = {listen_fd_, POLLIN, 0};
    if (client >= 0) {
      short ev = POLLIN;
      if (in_flight) ev |= POLLOUT;
      fds[nfds++] = {client, ev, 0};
    }
    int timeout_ms = 200;
    if (held_pose) {
      const auto wait = min_pose_gap - (Clock::now() - last_pose_delivery);
      timeout_ms = std::max<int>(0, static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(wait).count()) + 1);
    }
    const int rc = ::poll(fds, nfds, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      std::cerr << "bridge: poll failed: " << std::strerror(errno) << '\n';
      break;
    }

    if (fds[0].revents & POLLIN) {
      char drain[64];
      while (::read(wake_pipe_[0], drain, sizeof(drain)) > 0) {
      }
    }

    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
        if (fd < 0) break;
        if (client >= 0) {
          // Single-robot rule.
          ::close(fd);
          ++refused_;
          continue;
        }
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        client = fd;
        connected_ = true;
      }
    }

    if (client < 0 || nfds < 3) continue;
    const short rev = fds[2].revents;

    if (rev & (POLLIN | POLLHUP | POLLERR)) {
      bool closed = false;
      for (;;) {
        const ssize_t n = ::read(client, buf, sizeof(buf));
        if (n > 0) {
          decoder.feed(std::span(buf, static_cast<std::size_t>(n)));
          continue;
        }
        if (n == 0) closed = true;
        else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) closed = true;
        break;
      }
      try {
        while (auto f = decoder.next()) {
          if (f->topic == kRobotPoseTopic) {
            const auto pose = decode_pose_msg(f->payload);
            const auto t = Clock::now();
            if (t - last_pose_delivery >= min_pose_gap) {
              held_pose.reset();
              deliver_pose(pose, t);
            } else {
              held_pose = pose;  // newest wins within the rate window
            }
          } else if (f->topic == kLogTopic) {
            const auto text = decode_log_msg(f->payload);
            if (on_log_) on_log_(text);
          }
        }
      } catch (const Error& e) {
        ++protocol_errors_;
        drop_client(e.what());
        continue;
      }
      if (closed) {
        drop_client("");
        continue;
      }
    }

    if (in_flight && (rev & POLLOUT)) {
      while (out_pos < out.size()) {
        const ssize_t n = ::send(client, out.data() + out_pos, out.size() - out_pos, MSG_NOSIGNAL);
        if (n > 0) {
          out_pos += static_cast<std::size_t>(n);
          continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) break;
        drop_client(std::string("send failed: ") + std::strerror(errno));
        break;
      }
      if (client >= 0 && out_pos == out.size()) {
        in_flight.reset();
        out.clear();
        out_pos = 0;
      }
    }
  }
  if (client >= 0) {
    close_fd(client);
    connected_ = false;
  }
}

RobotLink::~RobotLink() { close(); }

void RobotLink::connect(const std::string& host, std::uint16_t port) {
  close();
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::Io, "cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw_io("socket");
  }
  const int rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    const int err = errno;
    close();
    errno = err;
    throw_io("connect " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  decoder_ = FrameDecoder{};
}

void RobotLink::close() { close_fd(fd_); }

void RobotLink::send_raw(std::span<const std::uint8_t> bytes) {
  if (fd_ < 0) throw Error(ErrorCode::Io, "robot link is not connected");
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_io("send");
    }
    bytes = bytes.subspan(static_cast<std::size_t>(n));
  }
}

void RobotLink::send_frame(std::string_view topic, std::span<const std::uint8_t> payload) {
  send_raw(encode_frame(topic, payload));
}

void RobotLink::send_pose(const geometry::Pose& p) { send_frame(kRobotPoseTopic, encode_pose_msg(p)); }

void RobotLink::send_log(std::string_view text) { send_frame(kLogTopic, encode_log_msg(text)); }

std::optional<Frame> RobotLink::receive(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw Error(ErrorCode::Io, "robot link is not connected");
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto f = decoder_.next()) return f;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) throw_io("poll");
    if (rc <= 0) continue;
    std::uint8_t buf[4096];
    const ssize_t n = ::read(fd_, buf, sizeof(buf));
    if (n == 0) throw Error(ErrorCode::Io, "robot link closed by peer");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw_io("read");
    }
    decoder_.feed(std::span(buf, static_cast<std::size_t>(n)));
  }
}

}  // namespace beaconnav::bridge
