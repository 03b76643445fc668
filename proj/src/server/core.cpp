#include <cmath>
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

// Heading of an arbitrary orientation about map +z.
double heading_of(const geometry::Quat& q) {
  return std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()), 1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
}

json pose_json(const geometry::Pose& p) {
  const auto& q = p.orientation;
  return {{"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z}, {"qx", q.x()},
          {"qy", q.y()},       {"qz", q.z()},       {"qw", q.w()},       {"yaw", heading_of(q)}};
}

json robot_json(const navsim::RobotState& r) {
  return {{"x", r.x}, {"y", r.y}, {"yaw", r.yaw}, {"v", r.v}, {"w", r.w}};
}

json stage_json(const navsim::Stage& s) {
  return {{"id", s.id},       {"cx", s.center.x},          {"cy", s.center.y},    {"w", s.width},
          {"h", s.height},    {"yaw", s.yaw},              {"target_yaw", s.target_yaw}, {"yaw_tol", s.yaw_tol}};
}

template <class T>
T load_input(const char* what, const std::filesystem::path& path, T (*loader)(const std::filesystem::path&)) {
  if (path.empty()) throw Error(ErrorCode::Config, std::string(what) + " path is required");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::Config, std::string(what) + " file not found: " + path.string());
  }
  try {
    return loader(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string(what) + ": " + e.what());
  }
}

navsim::OccupancyGrid load_grid(const std::filesystem::path& p) { return navsim::OccupancyGrid::load(p); }

store::Database load_db(const std::filesystem::path& p) {
  try {
    return store::Database::load(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("beacon database: ") + e.what());
  }
}

}  // namespace

void ServerConfig::validate() const {
  if (map_path.empty()) throw Error(ErrorCode::Config, "--map is required");
  if (stage_path.empty()) throw Error(ErrorCode::Config, "--stages is required");
  if (db_path.empty()) throw Error(ErrorCode::Config, "--db is required");
  if (!(tick_hz >= 5.0 && tick_hz <= 100.0)) {
    throw Error(ErrorCode::Config, "tick rate must be within [5, 100] Hz");
  }
  if (http_port != 0 && http_port == bridge_port) {
    throw Error(ErrorCode::Config, "HTTP and bridge ports must differ");
  }
  if (!(footprint.length > 0 && footprint.width > 0 && footprint.height > 0)) {
    throw Error(ErrorCode::Config, "robot footprint dimensions must be positive");
  }
  if (experiment && participant.empty()) throw Error(ErrorCode::Config, "--participant must not be empty");
}

std::filesystem::path ServerConfig::resolved_event_log() const {
  if (event_log_path) return *event_log_path;
  auto dir = db_path.parent_path();
  return dir / ("events-" + participant + "-" + evalkit::to_string(system) + ".jsonl");
}

void Subscriber::push(const std::string& line) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (lines_.size() >= capacity_) {
      // Slow consumer: drop the client instead of blocking the core.
      dropped_ = true;
      closed_ = true;
      lines_.clear();
    } else {
      lines_.push_back(line);
    }
  }
  cv_.notify_all();
}

std::optional<std::vector<std::string>> Subscriber::pop_all(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !lines_.empty(); });
  if (closed_ && lines_.empty()) return std::nullopt;
  std::vector<std::string> out(std::make_move_iterator(lines_.begin()), std::make_move_iterator(lines_.end()));
  lines_.clear();
  return out;
}

void Subscriber::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

Core::Core(const ServerConfig& config)
    : config_(config),
      ids_(config.id_seed ? beacon::IdGenerator(config.id_seed) : beacon::IdGenerator()),
      db_(load_db(config.db_path)),
      sim_(load_input("map", config.map_path, &load_grid), config.controller, config.robot_start),
      stages_(load_input("stages", config.stage_path, &navsim::load_stages)),
      started_(std::chrono::steady_clock::now()) {
  ctx_.anchor = config_.anchor;
  ctx_.footprint = config_.footprint;
  ctx_.next_id = [this] { return ids_(); };

  // Every stored beacon is instantiated at startup.
  for (const auto& r : db_.records()) {
    beacon::Beacon b{r.id, r.pose(), config_.footprint};
    session_.beacons.emplace(b.id, std::move(b));
  }

  if (config_.experiment) {
    if (stages_.empty()) throw Error(ErrorCode::Config, "experiment mode needs at least one stage");
    const auto path = config_.resolved_event_log();
    trial_log_.open(path, std::ios::app);
    if (!trial_log_) throw Error(ErrorCode::Config, "cannot open event log " + path.string());
  }
}

Core::~Core() = default;

double Core::now_s() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

std::vector<beacon::Effect> Core::set_mode(beacon::Mode m) {
  std::lock_guard lock(mu_);
  cause_ = "cmd-" + std::to_string(++command_seq_);
  auto effects = apply(beacon::set_mode(session_, m));
  broadcast({{"type", "mode"}, {"mode", beacon::to_string(m)}});
  return effects;
}

std::vector<beacon::Effect> Core::pointer(const beacon::PointerEvent& e) {
  std::lock_guard lock(mu_);
  // Rejected events are not commands.
  auto t = beacon::handle_pointer(session_, e, ctx_);
  cause_ = "cmd-" + std::to_string(++command_seq_);
  return apply(std::move(t));
}

std::vector<beacon::Effect> Core::apply(beacon::Transition t) {
  // Disk first: if persisting fails the session is left untouched.
  persist(t.effects);
  session_ = std::move(t.state);

  const auto transient = beacon::transient_beacon(session_.phase);
  for (const auto& eff : t.effects) {
    std::visit(Overloaded{
                   [&](const beacon::BeaconCreated& c) {
                     broadcast({{"type", "beacon_upsert"}, {"beacon", beacon_json(c.beacon)}, {"transient", true}});
                     if (config_.experiment) {
                       open_placement_ = evalkit::EventKind::AddCommit;
                       log_trial(evalkit::EventKind::AddBegin);
                     }
                   },
                   [&](const beacon::BeaconTransientPose& p) {
                     auto it = session_.beacons.find(p.id);
                     if (it == session_.beacons.end()) return;
                     broadcast({{"type", "beacon_upsert"},
                                {"beacon", beacon_json(it->second)},
                                {"transient", transient == p.id}});
                   },
                   [&](const beacon::BeaconCommitted& c) {
                     broadcast({{"type", "beacon_upsert"}, {"beacon", beacon_json(c.beacon)}, {"transient", false}});
                     if (config_.experiment && open_placement_) {
                       log_trial(*open_placement_);
                       open_placement_.reset();
                     }
                   },
                   [&](const beacon::BeaconDeleted& d) {
                     broadcast({{"type", "beacon_removed"}, {"id", d.id.str()}});
                   },
                   [&](const beacon::GoalDispatched& g) { dispatch_goal(g.goal); },
                   [&](const beacon::Highlight& h) {
                     if (h.on) {
                       highlighted_ = h.id;
                       if (config_.experiment) {
                         open_placement_ = evalkit::EventKind::MoveCommit;
                         log_trial(evalkit::EventKind::MoveBegin);
                       }
                     } else if (highlighted_ == h.id) {
                       highlighted_.reset();
                     }
                     auto it = session_.beacons.find(h.id);
                     if (it == session_.beacons.end()) return;
                     broadcast({{"type", "beacon_upsert"},
                                {"beacon", beacon_json(it->second)},
                                {"transient", transient == h.id}});
                   },
               },
               eff);
  }
  // A placement abandoned by a mode switch never commits.
  if (!transient && open_placement_) open_placement_.reset();
  return std::move(t.effects);
}

void Core::persist(const std::vector<beacon::Effect>& effects) {
  for (const auto& eff : effects) {
    if (const auto* c = std::get_if<beacon::BeaconCommitted>(&eff)) {
      if (db_.contains(c->beacon.id)) {
        db_.change(c->beacon.id, c->beacon.pose);
      } else {
        db_.add(store::BeaconRecord::from_pose(c->beacon.id, c->beacon.pose));
      }
    } else if (const auto* d = std::get_if<beacon::BeaconDeleted>(&eff)) {
      if (db_.contains(d->id)) db_.remove(d->id);
    }
  }
}

void Core::dispatch_goal(const geometry::Pose& goal) {
  if (config_.experiment && !experiment_done_) {
    // A new goal supersedes one still in progress; that attempt counts as failed.
    if (nav_pending_) log_trial(evalkit::EventKind::NavFail);
    log_trial(evalkit::EventKind::Select);
    nav_pending_ = true;
  }
  const double yaw = heading_of(goal.orientation);
  if (config_.external_robot) {
    if (endpoint_) endpoint_->send_goal(goal);
    // Status tracked from reported robot poses; reuse the simulator as goal holder.
    sim_.cancel();
    broadcast({{"type", "nav_status"}, {"status", "following"}, {"goal", pose_json(goal)}});
    external_goal_ = navsim::NavGoal{goal.position.x, goal.position.y, yaw};
    external_elapsed_ = 0.0;
    return;
  }
  const auto st = sim_.set_goal({goal.position.x, goal.position.y, yaw});
  broadcast({{"type", "nav_status"}, {"status", st.str()}, {"goal", pose_json(goal)}});
  if (st.terminal()) on_nav_status(st);
}

void Core::on_nav_status(const navsim::NavStatus& st) {
  if (!config_.experiment || experiment_done_ || !nav_pending_) return;
  nav_pending_ = false;
  const navsim::Stage& stage = stages_[stage_index_];
  const auto check = navsim::check_stage(stage, sim_.robot(), config_.footprint);
  broadcast({{"type", "stage_result"},
             {"stage", stage.id},
             {"inside", check.inside},
             {"heading_ok", check.heading_ok},
             {"nav_status", st.str()}});
  const bool success = st.kind == navsim::NavStatusKind::Succeeded && check.inside && check.heading_ok;
  log_trial(success ? evalkit::EventKind::NavSuccess : evalkit::EventKind::NavFail);
  if (success) {
    ++stage_index_;
    if (stage_index_ >= stages_.size()) {
      experiment_done_ = true;
      broadcast({{"type", "experiment_complete"}});
    }
  }
}

void Core::log_trial(evalkit::EventKind kind) {
  if (!trial_log_.is_open() || experiment_done_) return;
  evalkit::TrialEvent ev{now_s(), config_.participant, config_.system, stages_[stage_index_].id, kind};
  trial_log_ << evalkit::to_json_line(ev) << '\n';
  trial_log_.flush();
}

void Core::tick(double dt) {
  std::lock_guard lock(mu_);
  cause_ = "tick-" + std::to_string(++tick_seq_);
  if (config_.external_robot) {
    if (external_goal_) {
      external_elapsed_ += dt;
      const auto& r = sim_.robot();
      const auto& g = *external_goal_;
      const bool reached = std::hypot(g.x - r.x, g.y - r.y) < config_.controller.goal_pos_tol &&
                           std::abs(geometry::wrap_angle(g.yaw - r.yaw)) < config_.controller.goal_yaw_tol;
      std::optional<navsim::NavStatus> done;
      if (reached) done = navsim::NavStatus{navsim::NavStatusKind::Succeeded, navsim::FailReason::None};
      else if (external_elapsed_ > config_.controller.timeout)
        done = navsim::NavStatus{navsim::NavStatusKind::Failed, navsim::FailReason::Timeout};
      if (done) {
        external_goal_.reset();
        external_status_ = *done;
        broadcast({{"type", "nav_status"}, {"status", done->str()}});
        on_nav_status(*done);
      }
    }
    broadcast({{"type", "robot_pose"}, {"t", now_s()}, {"robot", robot_json(sim_.robot())}});
    return;
  }
  const auto prev = sim_.status();
  const auto st = sim_.tick(dt);
  broadcast({{"type", "robot_pose"}, {"t", now_s()}, {"robot", robot_json(sim_.robot())}});
  if (!(st == prev)) {
    broadcast({{"type", "nav_status"}, {"status", st.str()}});
    if (st.terminal()) on_nav_status(st);
  }
}

void Core::robot_pose_from_bridge(const geometry::Pose& p) {
  std::lock_guard lock(mu_);
  auto r = sim_.robot();
  r.x = p.position.x;
  r.y = p.position.y;
  r.yaw = heading_of(p.orientation);
  sim_.reset_robot(r);
}

void Core::robot_log_from_bridge(const std::string& text) { std::cerr << "robot: " << text << '\n'; }

void Core::shutdown() {
  std::lock_guard lock(mu_);
  cause_ = "shutdown";
  if (beacon::transient_beacon(session_.phase)) {
    apply(beacon::set_mode(session_, session_.mode));
  }
  std::lock_guard slock(subs_mu_);
  for (auto& s : subs_) s->close();
  subs_.clear();
}

json Core::beacon_json(const beacon::Beacon& b) const {
  json j = pose_json(b.pose);
  j["id"] = b.id.str();
  j["length"] = b.footprint.length;
  j["width"] = b.footprint.width;
  j["height"] = b.footprint.height;
  j["highlight"] = highlighted_ == b.id;
  return j;
}

json Core::state() const {
  std::lock_guard lock(mu_);
  const auto transient = beacon::transient_beacon(session_.phase);
  json beacons = json::array();
  for (const auto& [id, b] : session_.beacons) {
    json j = beacon_json(b);
    j["transient"] = transient == id;
    beacons.push_back(std::move(j));
  }
  const char* phase = std::holds_alternative<beacon::Idle>(session_.phase)              ? "idle"
                      : std::holds_alternative<beacon::LocationSetting>(session_.phase) ? "location_setting"
                                                                                          : "direction_setting";
  json stages = json::array();
  for (const auto& s : stages_) stages.push_back(stage_json(s));

  std::string status = sim_.status().str();
  if (config_.external_robot) status = external_goal_ ? "following" : external_status_.str();

  const auto& grid = sim_.grid();
  const auto& a = config_.anchor.pose;
  json out = {
      {"mode", beacon::to_string(session_.mode)},
      {"phase", phase},
      {"phase_beacon", transient ? json(transient->str()) : json(nullptr)},
      {"beacons", std::move(beacons)},
      {"robot", robot_json(sim_.robot())},
      {"nav_status", status},
      {"stages", std::move(stages)},
      {"anchor", pose_json(a)},
      {"footprint", {{"length", config_.footprint.length}, {"width", config_.footprint.width}, {"height", config_.footprint.height}}},
      {"map", {{"width", grid.width()}, {"height", grid.height()}, {"resolution", grid.resolution()},
               {"origin", {grid.origin().x, grid.origin().y}}}},
      {"commands", command_seq_.load()},
      {"ticks", tick_seq_.load()},
  };
  if (config_.experiment) {
    out["experiment"] = {{"participant", config_.participant},
                         {"system", evalkit::to_string(config_.system)},
                         {"current_stage", experiment_done_ ? json(nullptr) : json(stages_[stage_index_].id)},
                         {"complete", experiment_done_}};
  }
  return out;
}

json Core::beacons() const {
  json s = state();
  return s["beacons"];
}

std::shared_ptr<Subscriber> Core::subscribe() {
  auto s = std::make_shared<Subscriber>(config_.subscriber_buffer);
  std::lock_guard lock(subs_mu_);
  subs_.push_back(s);
  return s;
}

void Core::unsubscribe(const std::shared_ptr<Subscriber>& s) {
  std::lock_guard lock(subs_mu_);
  std::erase(subs_, s);
  s->close();
}

void Core::broadcast(json event) {
  event["cause"] = cause_;
  const std::string line = event.dump();
  std::lock_guard lock(subs_mu_);
  std::erase_if(subs_, [](const auto& s) { return s->dropped(); });
  for (auto& s : subs_) s->push(line);
}

}  // namespace beaconnav::server
