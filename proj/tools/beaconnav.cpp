#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>

#include "beaconnav/bridge.hpp"
#include "beaconnav/evalkit.hpp"
#include "beaconnav/navsim.hpp"
#include "beaconnav/server.hpp"

using namespace beaconnav;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

geometry::Pose pose_from_xyyaw(const std::vector<double>& v) {
  return {{v[0], v[1], 0.0}, geometry::quat_from_yaw(v[2]), geometry::Frame::RobotMap};
}

// Blocks termination signals in every thread so one waiter can own them.
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int run_serve(server::ServerConfig cfg) {
  const sigset_t set = block_stop_signals();
  server::Server srv(std::move(cfg));
  try {
    srv.start();
  } catch (const Error& e) {
    std::cerr << "beaconnav serve: " << e.what() << '\n';
    return e.code() == ErrorCode::Config ? kExitConfig : kExitRuntime;
  }
  std::cerr << "beaconnav: HTTP on port " << srv.http_port() << ", robot bridge on port " << srv.bridge_port() << '\n';
  int sig = 0;
  sigwait(&set, &sig);
  std::cerr << "beaconnav: stopping (signal " << sig << ")\n";
  srv.stop();
  return 0;
}

int run_report(const std::vector<std::string>& events, const std::string& sus, const std::string& csv_out, double alpha,
               const std::string& alternative) {
  evalkit::CompareOptions opt;
  opt.alpha = alpha;
  if (alternative == "greater") opt.alternative = evalkit::Alternative::Greater;
  else if (alternative == "less") opt.alternative = evalkit::Alternative::Less;

  std::vector<evalkit::TrialEvent> all;
  for (const auto& path : events) {
    auto evs = evalkit::load_event_log(path);
    all.insert(all.end(), evs.begin(), evs.end());
  }
  std::vector<evalkit::SusRow> sus_rows;
  if (!sus.empty()) sus_rows = evalkit::load_sus_csv(sus);

  const auto report = evalkit::compare_systems(all, sus_rows, opt);
  std::cout << report.to_text();
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + csv_out);
    out << report.to_csv();
  }
  return 0;
}

// Stand-in for the robot side: simulates the robot locally, follows goals
// received over the bridge and publishes its pose.
int run_robot(const std::string& host, std::uint16_t port, const std::string& map, const std::vector<double>& start,
              double pose_hz, double tick_hz) {
  const sigset_t set = block_stop_signals();
  std::atomic<bool> stop{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    stop = true;
  });
  waiter.detach();

  navsim::Simulator sim(navsim::OccupancyGrid::load(map), {}, {start[0], start[1], start[2], 0.0, 0.0});
  bridge::RobotLink link;
  const auto tick = std::chrono::duration<double>(1.0 / tick_hz);
  const int ticks_per_pose = std::max(1, static_cast<int>(std::lround(tick_hz / pose_hz)));

  while (!stop) {
    try {
      link.connect(host, port);
      std::cerr << "robot: connected to " << host << ':' << port << '\n';
      auto status = sim.status();
      for (long n = 0; !stop; ++n) {
        const auto until = std::chrono::steady_clock::now() + tick;
        while (auto f = link.receive(std::chrono::milliseconds(0))) {
          if (f->topic != bridge::kGoalTopic) continue;
          const auto goal = bridge::decode_pose_msg(f->payload);
          status = sim.set_goal({goal.position.x, goal.position.y, geometry::yaw_from_quat(goal.orientation)});
          link.send_log("goal received: " + status.str());
        }
        const auto st = sim.tick(tick.count());
        if (!(st == status)) {
          link.send_log("status " + st.str());
          status = st;
        }
        if (n % ticks_per_pose == 0) {
          const auto& r = sim.robot();
          link.send_pose({{r.x, r.y, 0.0}, geometry::quat_from_yaw(r.yaw), geometry::Frame::RobotMap});
        }
        std::this_thread::sleep_until(until);
      }
    } catch (const Error& e) {
      link.close();
      if (stop) break;
      std::cerr << "robot: " << e.what() << "; retrying\n";
      std::this_thread::sleep_for(std::chrono::milliseconds(500));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beaconnav: persistent navigation beacons for a simulated robot"};
  app.require_subcommand(1);

  server::ServerConfig cfg;
  std::vector<double> anchor, start;
  std::string system = "mr", map, events_out, ui_dir;
  auto* serve = app.add_subcommand("serve", "Run the beacon server, simulator, robot bridge and operator API");
  serve->add_option("--map", cfg.map_path, "Occupancy grid map file")->required();
  serve->add_option("--stages", cfg.stage_path, "Stage definition file")->required();
  serve->add_option("--db", cfg.db_path, "Beacon database file")->required();
  serve->add_option("--http-port", cfg.http_port, "Operator API port")->capture_default_str();
  serve->add_option("--http-host", cfg.http_host, "Operator API bind address")->capture_default_str();
  serve->add_option("--bridge-port", cfg.bridge_port, "Robot bridge TCP port")->capture_default_str();
  serve->add_option("--bridge-host", cfg.bridge_host, "Robot bridge bind address")->capture_default_str();
  serve->add_option("--tick-hz", cfg.tick_hz, "Simulator tick rate")->capture_default_str();
  serve->add_option("--anchor", anchor, "Anchor pose in the map: x y yaw")->expected(3);
  serve->add_option("--start", start, "Initial robot pose: x y yaw")->expected(3);
  serve->add_flag("--experiment", cfg.experiment, "Log trial events for the stage sequence");
  serve->add_option("--participant", cfg.participant, "Participant label")->capture_default_str();
  serve->add_option("--system", system, "System label")->check(CLI::IsMember({"2d", "mr"}))->capture_default_str();
  serve->add_option("--event-log", events_out, "Trial event log path (default: next to the database)");
  serve->add_flag("--external-robot", cfg.external_robot, "Send goals over the bridge instead of the built-in simulator");
  serve->add_option("--ui-dir", ui_dir, "Static console files to serve at /");
  serve->add_option("--seed", cfg.id_seed, "Beacon id generator seed (0 = random)");

  std::vector<std::string> events;
  std::string sus, csv_out, alternative = "two-sided";
  double alpha = 0.05;
  auto* report = app.add_subcommand("report", "Compare the two systems from trial event logs");
  report->add_option("--events", events, "Trial event log(s)")->required()->check(CLI::ExistingFile);
  report->add_option("--sus", sus, "SUS responses CSV")->check(CLI::ExistingFile);
  report->add_option("--csv", csv_out, "Also write the report as CSV");
  report->add_option("--alpha", alpha, "Significance threshold")->capture_default_str();
  report->add_option("--alternative", alternative, "Wilcoxon alternative")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}))
      ->capture_default_str();

  std::string host = "127.0.0.1";
  std::uint16_t port = bridge::kDefaultPort;
  std::vector<double> robot_start{0.0, 0.0, 0.0};
  double pose_hz = 10.0, robot_tick_hz = 20.0;
  auto* robot = app.add_subcommand("robot", "Simulated robot that connects to the bridge");
  robot->add_option("--host", host, "Server address")->capture_default_str();
  robot->add_option("--port", port, "Bridge port")->capture_default_str();
  robot->add_option("--map", map, "Occupancy grid map file")->required()->check(CLI::ExistingFile);
  robot->add_option("--start", robot_start, "Initial pose: x y yaw")->expected(3);
  robot->add_option("--pose-hz", pose_hz, "Pose publish rate")->capture_default_str();
  robot->add_option("--tick-hz", robot_tick_hz, "Simulation rate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*serve) {
      if (!anchor.empty()) cfg.anchor.pose = pose_from_xyyaw(anchor);
      if (!start.empty()) cfg.robot_start = {start[0], start[1], start[2], 0.0, 0.0};
      cfg.system = *evalkit::parse_system(system);
      if (!events_out.empty()) cfg.event_log_path = events_out;
      if (!ui_dir.empty()) cfg.ui_dir = ui_dir;
      return run_serve(std::move(cfg));
    }
    if (*report) return run_report(events, sus, csv_out, alpha, alternative);
    if (*robot) return run_robot(host, port, map, robot_start, pose_hz, robot_tick_hz);
  } catch (const Error& e) {
    std::cerr << "beaconnav: " << e.what() << '\n';
    const bool input = e.code() == ErrorCode::Config || e.code() == ErrorCode::LoadError ||
                       e.code() == ErrorCode::PairingError || e.code() == ErrorCode::IncompleteStage ||
                       e.code() == ErrorCode::IllegalSequence || e.code() == ErrorCode::InvalidResponse;
    return input ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "beaconnav: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
