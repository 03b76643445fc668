#include <httplib.h>

#include <iostream>

#include "beaconnav/server.hpp"

namespace beaconnav::server {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using nlohmann::json;

json pose_fields(const geometry::Pose& p) {
  const auto& q = p.orientation;
  return {{"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z},
          {"qx", q.x()},       {"qy", q.y()},       {"qz", q.z()},       {"qw", q.w()}};
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  int status = 400;
  if (e.code() == ErrorCode::UnknownBeacon || e.code() == ErrorCode::NotFound) status = 404;
  if (e.code() == ErrorCode::SaveError || e.code() == ErrorCode::Io) status = 500;
  reply(res, status, {{"error", to_string(e.code())}, {"message", e.what()}});
}

}  // namespace

json to_json(const beacon::Effect& e) {
  return std::visit(
      Overloaded{
          [](const beacon::BeaconCreated& c) {
            return json{{"effect", "beacon_created"}, {"id", c.beacon.id.str()}, {"pose", pose_fields(c.beacon.pose)}};
          },
          [](const beacon::BeaconTransientPose& p) {
            return json{{"effect", "beacon_transient_pose"}, {"id", p.id.str()}, {"pose", pose_fields(p.pose)}};
          },
          [](const beacon::BeaconCommitted& c) {
            return json{{"effect", "beacon_committed"}, {"id", c.beacon.id.str()}, {"pose", pose_fields(c.beacon.pose)}};
          },
          [](const beacon::BeaconDeleted& d) { return json{{"effect", "beacon_deleted"}, {"id", d.id.str()}}; },
          [](const beacon::GoalDispatched& g) {
            return json{{"effect", "goal_dispatched"}, {"id", g.id.str()}, {"pose", pose_fields(g.goal)}};
          },
          [](const beacon::Highlight& h) { return json{{"effect", "highlight"}, {"id", h.id.str()}, {"on", h.on}}; },
      },
      e);
}

beacon::PointerEvent pointer_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "pointer body must be a JSON object");
  beacon::PointerEvent e;
  const auto kind = j.contains("kind") && j["kind"].is_string()
                        ? beacon::parse_pointer_kind(j["kind"].get<std::string>())
                        : std::nullopt;
  if (!kind) throw Error(ErrorCode::InvalidArgument, "'kind' must be one of down, drag, up, click");
  e.kind = *kind;
  if (!j.contains("x") || !j["x"].is_number() || !j.contains("y") || !j["y"].is_number()) {
    throw Error(ErrorCode::InvalidArgument, "'x' and 'y' must be numbers (meters)");
  }
  e.floor_point = {j["x"].get<double>(), j["y"].get<double>()};
  const json hit = j.value("hit", json("floor"));
  if (!hit.is_string()) throw Error(ErrorCode::InvalidArgument, "'hit' must be \"floor\" or a beacon id");
  const auto h = hit.get<std::string>();
  if (h != "floor") {
    if (!beacon::BeaconId::is_canonical(h)) throw Error(ErrorCode::UnknownBeacon, "unknown beacon " + h);
    e.hit = beacon::BeaconId(h);
  }
  return e;
}

Server::Server(ServerConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::start() {
  config_.validate();
  core_ = std::make_unique<Core>(config_);

  endpoint_ = std::make_unique<bridge::Endpoint>(
      bridge::EndpointConfig{config_.bridge_host, config_.bridge_port, 50.0},
      [this](const geometry::Pose& p, bridge::Clock::time_point) {
        if (config_.external_robot) core_->robot_pose_from_bridge(p);
      },
      [this](const std::string& text) { core_->robot_log_from_bridge(text); });
  try {
    endpoint_->start();
  } catch (const Error& e) {
    throw Error(ErrorCode::Io, std::string("bridge port unavailable: ") + e.what());
  }
  core_->attach_bridge(endpoint_.get());

  http_ = std::make_unique<httplib::Server>();
  http_->new_task_queue = [] { return new httplib::ThreadPool(16); };
  // No SO_REUSEPORT: a second server must not silently share a busy port.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes();
  if (config_.http_port == 0) {
    const int p = http_->bind_to_any_port(config_.http_host);
    if (p <= 0) {
      endpoint_->stop();
      throw Error(ErrorCode::Io, "cannot bind HTTP on " + config_.http_host);
    }
    http_port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!http_->bind_to_port(config_.http_host, config_.http_port)) {
      endpoint_->stop();
      throw Error(ErrorCode::Io, "HTTP port " + std::to_string(config_.http_port) + " on " + config_.http_host +
                                     " is unavailable");
    }
    http_port_ = config_.http_port;
  }

  running_ = true;
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  tick_thread_ = std::thread([this] { tick_loop(); });
}

void Server::tick_loop() {
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / config_.tick_hz));
  const double dt = 1.0 / config_.tick_hz;
  auto next = std::chrono::steady_clock::now() + period;
  std::unique_lock lock(stop_mu_);
  while (running_) {
    if (stop_cv_.wait_until(lock, next, [this] { return !running_.load(); })) break;
    lock.unlock();
    try {
      core_->tick(dt);
    } catch (const std::exception& e) {
      std::cerr << "tick failed: " << e.what() << '\n';
    }
    lock.lock();
    next += period;
    // Skip missed ticks rather than bursting to catch up.
    const auto now = std::chrono::steady_clock::now();
    if (next < now) next = now + period;
  }
}

void Server::stop() {
  {
    std::lock_guard lock(stop_mu_);
    if (!running_.exchange(false)) return;
  }
  stop_cv_.notify_all();
  if (tick_thread_.joinable()) tick_thread_.join();
  core_->shutdown();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (endpoint_) endpoint_->stop();
}

void Server::wait() {
  std::unique_lock lock(stop_mu_);
  stop_cv_.wait(lock, [this] { return !running_.load(); });
}

void Server::install_routes() {
  auto& h = *http_;

  h.Get("/state", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, core_->state()); });

  h.Get("/beacons", [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, core_->beacons()); });

  h.Post("/mode", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("mode") || !body["mode"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "body must be {\"mode\": \"off|add|move|select|delete\"}");
      }
      const auto mode = beacon::parse_mode(body["mode"].get<std::string>());
      if (!mode) throw Error(ErrorCode::InvalidArgument, "unknown mode '" + body["mode"].get<std::string>() + "'");
      json effects = json::array();
      for (const auto& e : core_->set_mode(*mode)) effects.push_back(to_json(e));
      reply(res, 200, {{"mode", beacon::to_string(*mode)}, {"effects", effects}});
    } catch (const Error& e) {
      reply_error(res, e);
    }
  });

  h.Post("/pointer", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) throw Error(ErrorCode::InvalidArgument, "body is not JSON");
      json effects = json::array();
      for (const auto& e : core_->pointer(pointer_from_json(body))) effects.push_back(to_json(e));
      reply(res, 200, {{"effects", effects}});
    } catch (const Error& e) {
      reply_error(res, e);
    }
  });

  h.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
    auto sub = core_->subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [this, sub](std::size_t, httplib::DataSink& sink) {
          if (!running_) return false;
          auto lines = sub->pop_all(std::chrono::milliseconds(250));
          if (!lines) return false;
          for (const auto& l : *lines) {
            const std::string chunk = l + "\n";
            if (!sink.write(chunk.data(), chunk.size())) return false;
          }
          return true;
        },
        [this, sub](bool) { core_->unsubscribe(sub); });
  });

  if (config_.ui_dir) {
    if (!h.set_mount_point("/", config_.ui_dir->string())) {
      throw Error(ErrorCode::Config, "UI directory not found: " + config_.ui_dir->string());
    }
  }
}

}  // namespace beaconnav::server
