#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/oracles.hpp"
#include "beaconnav/beacon_core.hpp"

using namespace beaconnav;
using namespace beaconnav::beacon;
using oracle::PhaseKind;

namespace {

constexpr double kPi = std::numbers::pi;

const Mode kModes[] = {Mode::Off, Mode::Add, Mode::Move, Mode::Select, Mode::Delete};
const PhaseKind kPhases[] = {PhaseKind::Idle, PhaseKind::Location, PhaseKind::Direction};
const PointerKind kKinds[] = {PointerKind::Down, PointerKind::Drag, PointerKind::Up, PointerKind::Click};

EngineContext make_ctx(std::uint64_t seed = 7) {
  auto gen = std::make_shared<IdGenerator>(seed);
  EngineContext ctx;
  ctx.next_id = [gen] { return (*gen)(); };
  return ctx;
}

Pose floor(double x, double y, double yaw) {
  return {{x, y, 0.0}, geometry::quat_from_yaw(yaw), geometry::Frame::RobotMap};
}

const BeaconId kStill{"11111111-1111-4111-8111-111111111111"};
const BeaconId kMoving{"22222222-2222-4222-8222-222222222222"};

// A session with one settled beacon and, for placement phases, one in-flight beacon.
SessionState make_state(Mode m, PhaseKind p) {
  SessionState s;
  s.mode = m;
  s.beacons[kStill] = Beacon{kStill, floor(1, 1, 0.5), {}};
  if (p == PhaseKind::Idle) return s;
  s.beacons[kMoving] = Beacon{kMoving, floor(2, 0, 0.0), {}};
  const std::optional<Pose> prior = m == Mode::Move ? std::optional{floor(3, 3, 1.0)} : std::nullopt;
  if (p == PhaseKind::Location) s.phase = LocationSetting{kMoving, prior};
  else s.phase = DirectionSetting{kMoving, prior};
  return s;
}

std::vector<std::string> tags(const std::vector<Effect>& effects) {
  std::vector<std::string> out;
  for (const auto& e : effects) out.emplace_back(oracle::effect_tag(e));
  return out;
}

}  // namespace

TEST_CASE("every mode x phase x event cell matches the transition table") {
  const auto ctx = make_ctx();
  int cells = 0;
  for (Mode m : kModes) {
    for (PhaseKind p : kPhases) {
      for (PointerKind k : kKinds) {
        ++cells;
        for (bool on_beacon : {false, true}) {
          CAPTURE(to_string(m));
          CAPTURE(static_cast<int>(p));
          CAPTURE(to_string(k));
          CAPTURE(on_beacon);
          const SessionState s = make_state(m, p);
          PointerEvent e{k, {4.0, 5.0}, on_beacon ? std::optional{kStill} : std::nullopt};
          const auto t = handle_pointer(s, e, ctx);
          const auto want = oracle::expected_transition(m, p, k, on_beacon);
          CHECK(tags(t.effects) == want.effects);
          CHECK(oracle::phase_kind(t.state.phase) == want.next);
          CHECK(t.state.mode == m);
          if (want.effects.empty() && want.next == p) {
            CHECK(t.state.beacons.size() == s.beacons.size());
          }
        }
      }
    }
  }
  CHECK(cells == 60);
}

TEST_CASE("add flow places, turns and commits a floor beacon") {
  const auto ctx = make_ctx();
  SessionState s;
  s = set_mode(s, Mode::Add).state;
  auto t = handle_pointer(s, {PointerKind::Down, {1, 2}, std::nullopt}, ctx);
  REQUIRE(t.effects.size() == 1);
  const Beacon created = std::get<BeaconCreated>(t.effects[0]).beacon;
  CHECK(created.pose.position == geometry::Vec3{1, 2, 0});
  CHECK(geometry::yaw_from_quat(created.pose.orientation) == 0.0);
  CHECK(created.footprint.length == 0.39);
  CHECK(BeaconId::is_canonical(created.id.str()));

  t = handle_pointer(t.state, {PointerKind::Drag, {1.5, 2.5}, std::nullopt}, ctx);
  CHECK(std::get<BeaconTransientPose>(t.effects[0]).pose.position == geometry::Vec3{1.5, 2.5, 0});
  t = handle_pointer(t.state, {PointerKind::Up, {1.5, 2.5}, std::nullopt}, ctx);
  CHECK(std::holds_alternative<DirectionSetting>(t.state.phase));
  t = handle_pointer(t.state, {PointerKind::Drag, {1.5, 4.0}, std::nullopt}, ctx);
  CHECK(geometry::yaw_from_quat(std::get<BeaconTransientPose>(t.effects[0]).pose.orientation) ==
        doctest::Approx(kPi / 2));
  // Pointer on the beacon itself keeps the last heading.
  t = handle_pointer(t.state, {PointerKind::Drag, {1.5, 2.5}, std::nullopt}, ctx);
  CHECK(geometry::yaw_from_quat(std::get<BeaconTransientPose>(t.effects[0]).pose.orientation) ==
        doctest::Approx(kPi / 2));
  t = handle_pointer(t.state, {PointerKind::Click, {9, 9}, std::nullopt}, ctx);
  const auto& committed = std::get<BeaconCommitted>(t.effects[0]).beacon;
  CHECK(committed.id == created.id);
  CHECK(committed.pose.position == geometry::Vec3{1.5, 2.5, 0});
  CHECK(std::holds_alternative<Idle>(t.state.phase));
  CHECK(t.state.beacons.size() == 1);
}

TEST_CASE("move flow highlights, restores on abort and commits") {
  const auto ctx = make_ctx();
  SessionState s;
  s.beacons[kStill] = Beacon{kStill, floor(1, 0, 0), {}};
  s.mode = Mode::Move;
  auto t = handle_pointer(s, {PointerKind::Down, {1, 0}, kStill}, ctx);
  CHECK(tags(t.effects) == std::vector<std::string>{"highlight"});
  CHECK(std::get<Highlight>(t.effects[0]).on);
  t = handle_pointer(t.state, {PointerKind::Drag, {2, 2}, std::nullopt}, ctx);
  t = handle_pointer(t.state, {PointerKind::Up, {2, 2}, std::nullopt}, ctx);

  // Mode switch during direction setting puts the beacon back.
  const auto aborted = set_mode(t.state, Mode::Select);
  CHECK(tags(aborted.effects) == std::vector<std::string>{"transient", "highlight"});
  CHECK(std::get<BeaconTransientPose>(aborted.effects[0]).pose == floor(1, 0, 0));
  CHECK(aborted.state.beacons.at(kStill).pose == floor(1, 0, 0));
  CHECK(std::holds_alternative<Idle>(aborted.state.phase));

  t = handle_pointer(t.state, {PointerKind::Drag, {3, 2}, std::nullopt}, ctx);
  t = handle_pointer(t.state, {PointerKind::Click, {3, 2}, std::nullopt}, ctx);
  CHECK(tags(t.effects) == std::vector<std::string>{"committed", "highlight"});
  CHECK_FALSE(std::get<Highlight>(t.effects[1]).on);
  CHECK(t.state.beacons.at(kStill).pose.position == geometry::Vec3{2, 2, 0});
  CHECK(geometry::yaw_from_quat(t.state.beacons.at(kStill).pose.orientation) == doctest::Approx(0.0));
}

TEST_CASE("set_mode aborts add placement and is silent otherwise") {
  const auto ctx = make_ctx();
  SessionState s;
  s.mode = Mode::Add;
  CHECK(set_mode(s, Mode::Delete).effects.empty());
  CHECK(set_mode(s, Mode::Delete).state.mode == Mode::Delete);
  auto t = handle_pointer(s, {PointerKind::Down, {0.5, 0.5}, std::nullopt}, ctx);
  const BeaconId id = std::get<BeaconCreated>(t.effects[0]).beacon.id;
  const auto off = set_mode(t.state, Mode::Off);
  REQUIRE(off.effects.size() == 1);
  CHECK(std::get<BeaconDeleted>(off.effects[0]).id == id);
  CHECK(off.state.beacons.empty());
  CHECK(std::holds_alternative<Idle>(off.state.phase));
}

TEST_CASE("select dispatches the anchor-transformed pose") {
  const auto ctx0 = make_ctx();
  SessionState s;
  s.mode = Mode::Select;
  s.beacons[kStill] = Beacon{kStill, floor(1, 0, 0), {}};
  auto t = handle_pointer(s, {PointerKind::Click, {1, 0}, kStill}, ctx0);
  const auto& g = std::get<GoalDispatched>(t.effects[0]);
  CHECK(g.goal.position == geometry::Vec3{1, 0, 0});
  CHECK(g.goal.orientation == geometry::Quat::identity());

  auto ctx = make_ctx();
  ctx.anchor.pose = floor(2, 1, kPi / 2);
  t = handle_pointer(s, {PointerKind::Click, {1, 0}, kStill}, ctx);
  const auto& g2 = std::get<GoalDispatched>(t.effects[0]);
  CHECK(g2.goal.position.x == doctest::Approx(2.0));
  CHECK(g2.goal.position.y == doctest::Approx(2.0));
  CHECK(geometry::yaw_from_quat(g2.goal.orientation) == doctest::Approx(kPi / 2));
}

TEST_CASE("delete removes, unknown ids are rejected") {
  const auto ctx = make_ctx();
  SessionState s;
  s.mode = Mode::Delete;
  s.beacons[kStill] = Beacon{kStill, floor(1, 0, 0), {}};
  auto t = handle_pointer(s, {PointerKind::Click, {0, 0}, kStill}, ctx);
  CHECK(t.state.beacons.empty());
  CHECK(handle_pointer(s, {PointerKind::Click, {0, 0}, std::nullopt}, ctx).effects.empty());
  try {
    handle_pointer(s, {PointerKind::Click, {0, 0}, kMoving}, ctx);
    FAIL("expected unknown-beacon");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownBeacon);
  }
}

TEST_CASE("face_toward") {
  CHECK(face_toward({0, 0}, {1, 0}) == 0.0);
  CHECK(face_toward({0, 0}, {0, 1}) == doctest::Approx(kPi / 2));
  CHECK(face_toward({1, 1}, {0, 0}) == doctest::Approx(-3 * kPi / 4));
  CHECK(face_toward({1, 1}, {1, 1}, 0.7) == 0.7);
}

TEST_CASE("beacon ids") {
  IdGenerator a(42), b(42);
  const BeaconId x = a();
  CHECK(x == b());
  CHECK(x.str().size() == 36);
  CHECK(x.str()[14] == '4');
  CHECK(BeaconId::is_canonical(x.str()));
  CHECK_FALSE(BeaconId::is_canonical("not-a-guid"));
  CHECK(BeaconId("AAAAAAAA-AAAA-4AAA-8AAA-AAAAAAAAAAAA").str() == "aaaaaaaa-aaaa-4aaa-8aaa-aaaaaaaaaaaa");
  CHECK_THROWS_AS(BeaconId("xyz"), Error);
}

TEST_CASE("replaying random sessions reconstructs the beacon set") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_int_distribution<int> pick(0, 99);
  for (int run = 0; run < 1000; ++run) {
    const auto ctx = make_ctx(static_cast<std::uint64_t>(run) + 1);
    SessionState s;
    std::vector<Effect> log;
    for (int step = 0; step < 40; ++step) {
      Transition t;
      if (pick(rng) < 15) {
        const SessionState before = s;
        t = set_mode(s, kModes[pick(rng) % 5]);
        const auto moving = transient_beacon(before.phase);
        for (const auto& [id, b] : t.state.beacons) {
          if (id != moving) CHECK(b.pose == before.beacons.at(id).pose);
        }
      } else {
        PointerEvent e{kKinds[pick(rng) % 4], {coord(rng), coord(rng)}, std::nullopt};
        if (!s.beacons.empty() && pick(rng) < 50) {
          auto it = s.beacons.begin();
          std::advance(it, pick(rng) % static_cast<int>(s.beacons.size()));
          e.hit = it->first;
        }
        t = handle_pointer(s, e, ctx);
      }
      for (const auto& eff : t.effects) {
        if (const auto* c = std::get_if<BeaconCommitted>(&eff)) {
          CHECK(c->beacon.pose.position.z == 0.0);
          CHECK_NOTHROW(check_floor_constraint(c->beacon));
        }
      }
      log.insert(log.end(), t.effects.begin(), t.effects.end());
      s = std::move(t.state);
      if (s.mode == Mode::Off) CHECK(std::holds_alternative<Idle>(s.phase));
    }
    const BeaconMap rebuilt = replay(log);
    REQUIRE(rebuilt.size() == s.beacons.size());
    for (const auto& [id, b] : s.beacons) {
      REQUIRE(rebuilt.contains(id));
      CHECK(rebuilt.at(id).pose == b.pose);
    }
  }
}
