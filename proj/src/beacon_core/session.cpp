#include <cmath>

#include "beaconnav/beacon_core.hpp"

namespace beaconnav::beacon {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kFloorTol = 1e-9;

Pose floor_pose(Vec2 p, double yaw) {
  return {{p.x, p.y, 0.0}, geometry::quat_from_yaw(yaw), geometry::Frame::RobotMap};
}

Beacon& beacon_ref(SessionState& s, const BeaconId& id) {
  auto it = s.beacons.find(id);
  if (it == s.beacons.end()) {
    throw Error(ErrorCode::UnknownBeacon, "unknown beacon " + id.str());
  }
  return it->second;
}

bool placing(Mode m) { return m == Mode::Add || m == Mode::Move; }

// Undo an in-flight placement: an Add discards the new beacon, a Move puts it back.
void abort_phase(SessionState& s, std::vector<Effect>& out) {
  const auto id = transient_beacon(s.phase);
  if (!id) return;
  const auto prior = std::visit(
      Overloaded{[](const Idle&) { return std::optional<Pose>{}; },
                 [](const LocationSetting& p) { return p.prior; },
                 [](const DirectionSetting& p) { return p.prior; }},
      s.phase);
  if (prior) {
    beacon_ref(s, *id).pose = *prior;
    out.emplace_back(BeaconTransientPose{*id, *prior});
    out.emplace_back(Highlight{*id, false});
  } else {
    s.beacons.erase(*id);
    out.emplace_back(BeaconDeleted{*id});
  }
  s.phase = Idle{};
}

}  // namespace

const char* to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Off: return "off";
    case Mode::Add: return "add";
    case Mode::Move: return "move";
    case Mode::Select: return "select";
    case Mode::Delete: return "delete";
  }
  return "off";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::Off, Mode::Add, Mode::Move, Mode::Select, Mode::Delete}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

const char* to_string(PointerKind k) noexcept {
  switch (k) {
    case PointerKind::Down: return "down";
    case PointerKind::Drag: return "drag";
    case PointerKind::Up: return "up";
    case PointerKind::Click: return "click";
  }
  return "click";
}

std::optional<PointerKind> parse_pointer_kind(std::string_view s) {
  for (PointerKind k : {PointerKind::Down, PointerKind::Drag, PointerKind::Up, PointerKind::Click}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<BeaconId> transient_beacon(const Phase& p) {
  return std::visit(Overloaded{[](const Idle&) { return std::optional<BeaconId>{}; },
                               [](const LocationSetting& l) { return std::optional{l.id}; },
                               [](const DirectionSetting& d) { return std::optional{d.id}; }},
                    p);
}

double face_toward(Vec2 beacon_pos, Vec2 pointer, double previous_yaw) {
  const double dx = pointer.x - beacon_pos.x;
  const double dy = pointer.y - beacon_pos.y;
  if (std::hypot(dx, dy) <= 1e-9) return previous_yaw;
  return std::atan2(dy, dx);
}

void check_floor_constraint(const Beacon& b) {
  if (std::abs(b.pose.position.z) > kFloorTol) {
    throw Error(ErrorCode::ConstraintViolation, "beacon " + b.id.str() + " is off the floor");
  }
  geometry::yaw_from_quat(b.pose.orientation);
  if (b.footprint.length <= 0 || b.footprint.width <= 0 || b.footprint.height <= 0) {
    throw Error(ErrorCode::ConstraintViolation, "beacon footprint must be positive");
  }
}

Transition set_mode(const SessionState& s, Mode m) {
  Transition t{s, {}};
  abort_phase(t.state, t.effects);
  t.state.mode = m;
  return t;
}

Transition handle_pointer(const SessionState& s, const PointerEvent& e, const EngineContext& ctx) {
  if (!std::isfinite(e.floor_point.x) || !std::isfinite(e.floor_point.y)) {
    throw Error(ErrorCode::InvalidArgument, "pointer floor point is not finite");
  }
  if (e.hit && !s.beacons.contains(*e.hit)) {
    throw Error(ErrorCode::UnknownBeacon, "unknown beacon " + e.hit->str());
  }

  Transition t{s, {}};
  SessionState& st = t.state;
  auto& out = t.effects;
  const Mode mode = st.mode;

  if (std::holds_alternative<Idle>(st.phase)) {
    if (mode == Mode::Add && e.kind == PointerKind::Down && !e.hit) {
      Beacon b{ctx.next_id(), floor_pose(e.floor_point, 0.0), ctx.footprint};
      st.beacons.emplace(b.id, b);
      st.phase = LocationSetting{b.id, std::nullopt};
      out.emplace_back(BeaconCreated{std::move(b)});
    } else if (mode == Mode::Move && e.kind == PointerKind::Down && e.hit) {
      const Beacon& b = beacon_ref(st, *e.hit);
      st.phase = LocationSetting{b.id, b.pose};
      out.emplace_back(Highlight{b.id, true});
    } else if (mode == Mode::Select && e.kind == PointerKind::Click && e.hit) {
      const Beacon& b = beacon_ref(st, *e.hit);
      out.emplace_back(GoalDispatched{b.id, geometry::anchor_to_map(b.pose, ctx.anchor)});
    } else if (mode == Mode::Delete && e.kind == PointerKind::Click && e.hit) {
      const BeaconId id = *e.hit;
      st.beacons.erase(id);
      out.emplace_back(BeaconDeleted{id});
    }
    return t;
  }

  if (!placing(mode)) return t;

  if (auto* loc = std::get_if<LocationSetting>(&st.phase)) {
    Beacon& b = beacon_ref(st, loc->id);
    if (e.kind == PointerKind::Drag) {
      b.pose.position = {e.floor_point.x, e.floor_point.y, 0.0};
      out.emplace_back(BeaconTransientPose{b.id, b.pose});
    } else if (e.kind == PointerKind::Up) {
      st.phase = DirectionSetting{loc->id, loc->prior};
    }
    return t;
  }

  auto& dir = std::get<DirectionSetting>(st.phase);
  Beacon& b = beacon_ref(st, dir.id);
  if (e.kind == PointerKind::Drag) {
    const Vec2 at{b.pose.position.x, b.pose.position.y};
    const double yaw = face_toward(at, e.floor_point, geometry::yaw_from_quat(b.pose.orientation));
    b.pose.orientation = geometry::quat_from_yaw(yaw);
    out.emplace_back(BeaconTransientPose{b.id, b.pose});
  } else if (e.kind == PointerKind::Click) {
    check_floor_constraint(b);
    const bool was_move = dir.prior.has_value();
    out.emplace_back(BeaconCommitted{b});
    if (was_move) out.emplace_back(Highlight{b.id, false});
    st.phase = Idle{};
  }
  return t;
}

void apply_effect(BeaconMap& beacons, const Effect& e) {
  std::visit(Overloaded{[&](const BeaconCreated& c) { beacons[c.beacon.id] = c.beacon; },
                        [&](const BeaconTransientPose& p) {
                          auto it = beacons.find(p.id);
                          if (it == beacons.end()) {
                            throw Error(ErrorCode::UnknownBeacon, "replay: unknown beacon " + p.id.str());
                          }
                          it->second.pose = p.pose;
                        },
                        [&](const BeaconCommitted& c) { beacons[c.beacon.id] = c.beacon; },
                        [&](const BeaconDeleted& d) { beacons.erase(d.id); },
                        [](const GoalDispatched&) {}, [](const Highlight&) {}},
             e);
}

BeaconMap replay(const std::vector<Effect>& log) {
  BeaconMap beacons;
  for (const auto& e : log) apply_effect(beacons, e);
  return beacons;
}

}  // namespace beaconnav::beacon
