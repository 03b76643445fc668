#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "beaconnav/beacon_core.hpp"
#include "beaconnav/bridge.hpp"
#include "beaconnav/evalkit.hpp"
#include "beaconnav/navsim.hpp"
#include "beaconnav/store.hpp"

namespace httplib {
class Server;
}

namespace beaconnav::server {

struct ServerConfig {
  std::filesystem::path map_path;
  std::filesystem::path stage_path;
  std::filesystem::path db_path;
  std::optional<std::filesystem::path> event_log_path;
  std::optional<std::filesystem::path> ui_dir;
  std::string http_host = "127.0.0.1";
  std::uint16_t http_port = 8080;
  std::string bridge_host = "0.0.0.0";
  std::uint16_t bridge_port = bridge::kDefaultPort;
  double tick_hz = 20.0;
  geometry::AnchorPose anchor;
  beacon::Footprint footprint;
  navsim::RobotState robot_start;
  navsim::ControllerParams controller;
  bool experiment = false;
  std::string participant = "p1";
  evalkit::System system = evalkit::System::MR;
  bool external_robot = false;
  std::size_t subscriber_buffer = 1024;
  std::uint64_t id_seed = 0;  // 0 = seed from the OS

  // Throws Error(Config). Port 0 (ephemeral) is allowed for both ports.
  void validate() const;
  std::filesystem::path resolved_event_log() const;
};

// One stream client's bounded line queue. Overflow marks the client dropped.
class Subscriber {
 public:
  explicit Subscriber(std::size_t capacity) : capacity_(capacity) {}

  void push(const std::string& line);
  // Waits up to timeout; empty result on timeout. Returns nullopt once closed or dropped.
  std::optional<std::vector<std::string>> pop_all(std::chrono::milliseconds timeout);
  void close();
  bool dropped() const { return dropped_.load(); }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool closed_ = false;
  std::atomic<bool> dropped_{false};
};

// Owns every piece of mutable state. All commands and simulator ticks are
// serialized through one mutex, so each observable change has exactly one cause.
class Core {
 public:
  explicit Core(const ServerConfig& config);
  ~Core();

  // Results carry the effects the command produced, already applied to store and simulator.
  std::vector<beacon::Effect> set_mode(beacon::Mode m);
  std::vector<beacon::Effect> pointer(const beacon::PointerEvent& e);
  void tick(double dt);
  void robot_pose_from_bridge(const geometry::Pose& p);
  void robot_log_from_bridge(const std::string& text);
  // Aborts any in-flight placement; committed beacons are already on disk.
  void shutdown();

  nlohmann::json state() const;
  nlohmann::json beacons() const;
  std::shared_ptr<Subscriber> subscribe();
  void unsubscribe(const std::shared_ptr<Subscriber>& s);

  void attach_bridge(bridge::Endpoint* endpoint) { endpoint_ = endpoint; }
  std::uint64_t commands() const { return command_seq_.load(); }
  std::uint64_t ticks() const { return tick_seq_.load(); }

 private:
  std::vector<beacon::Effect> apply(beacon::Transition t);
  void persist(const std::vector<beacon::Effect>& effects);
  void dispatch_goal(const geometry::Pose& goal);
  void on_nav_status(const navsim::NavStatus& st);
  void log_trial(evalkit::EventKind kind);
  void broadcast(nlohmann::json event);
  nlohmann::json beacon_json(const beacon::Beacon& b) const;
  double now_s() const;

  ServerConfig config_;
  mutable std::mutex mu_;
  beacon::SessionState session_;
  beacon::IdGenerator ids_;
  beacon::EngineContext ctx_;
  store::Database db_;
  navsim::Simulator sim_;
  std::vector<navsim::Stage> stages_;
  bridge::Endpoint* endpoint_ = nullptr;
  std::optional<beacon::BeaconId> highlighted_;

  // With an external robot the goal is tracked here against reported poses.
  std::optional<navsim::NavGoal> external_goal_;
  double external_elapsed_ = 0.0;
  navsim::NavStatus external_status_;

  std::string cause_;
  std::atomic<std::uint64_t> command_seq_{0};
  std::atomic<std::uint64_t> tick_seq_{0};
  std::chrono::steady_clock::time_point started_;

  // Experiment bookkeeping.
  std::ofstream trial_log_;
  std::size_t stage_index_ = 0;
  bool nav_pending_ = false;
  bool experiment_done_ = false;
  std::optional<evalkit::EventKind> open_placement_;

  std::mutex subs_mu_;
  std::vector<std::shared_ptr<Subscriber>> subs_;
};

// Composition root: Core + simulator tick loop + bridge endpoint + HTTP API.
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Loads all inputs and binds both ports. Throws Error(Config) for bad inputs
  // and Error(Io) for busy ports, each naming the cause.
  void start();
  void stop();
  void wait();

  std::uint16_t http_port() const { return http_port_; }
  std::uint16_t bridge_port() const { return endpoint_ ? endpoint_->port() : 0; }
  Core& core() { return *core_; }

 private:
  void tick_loop();
  void install_routes();

  ServerConfig config_;
  std::unique_ptr<Core> core_;
  std::unique_ptr<bridge::Endpoint> endpoint_;
  std::unique_ptr<httplib::Server> http_;
  std::uint16_t http_port_ = 0;
  std::thread http_thread_;
  std::thread tick_thread_;
  std::atomic<bool> running_{false};
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
};

// JSON encodings shared by the API and tests.
nlohmann::json to_json(const beacon::Effect& e);
beacon::PointerEvent pointer_from_json(const nlohmann::json& j);

}  // namespace beaconnav::server
