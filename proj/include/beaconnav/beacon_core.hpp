#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "beaconnav/geometry.hpp"

namespace beaconnav::beacon {

using geometry::Pose;
using geometry::Vec2;

// 128-bit identifier in canonical 8-4-4-4-12 lowercase hex text.
class BeaconId {
 public:
  BeaconId() = default;
  // Throws InvalidArgument unless text is a canonical GUID (case-insensitive).
  explicit BeaconId(std::string_view text);

  const std::string& str() const { return text_; }
  bool empty() const { return text_.empty(); }

  static bool is_canonical(std::string_view text);

  friend auto operator<=>(const BeaconId&, const BeaconId&) = default;

 private:
  std::string text_;
};

// Random version-4 GUIDs from a seedable engine.
class IdGenerator {
 public:
  IdGenerator();
  explicit IdGenerator(std::uint64_t seed) : rng_(seed) {}

  BeaconId operator()();

 private:
  std::mt19937_64 rng_;
};

struct Footprint {
  double length = 0.39;
  double width = 0.24;
  double height = 0.26;
};

struct Beacon {
  BeaconId id;
  Pose pose;
  Footprint footprint;
};

enum class Mode { Off, Add, Move, Select, Delete };

const char* to_string(Mode m) noexcept;
std::optional<Mode> parse_mode(std::string_view s);

struct Idle {
  friend bool operator==(const Idle&, const Idle&) = default;
};

// prior is set only when the placement is a Move, so aborts can restore it.
struct LocationSetting {
  BeaconId id;
  std::optional<Pose> prior;
};

struct DirectionSetting {
  BeaconId id;
  std::optional<Pose> prior;
};

using Phase = std::variant<Idle, LocationSetting, DirectionSetting>;

// Id of the beacon in a transient phase, if any.
std::optional<BeaconId> transient_beacon(const Phase& p);

enum class PointerKind { Down, Drag, Up, Click };

const char* to_string(PointerKind k) noexcept;
std::optional<PointerKind> parse_pointer_kind(std::string_view s);

struct PointerEvent {
  PointerKind kind = PointerKind::Click;
  Vec2 floor_point;
  // Empty means the pointer hit the floor.
  std::optional<BeaconId> hit;
};

struct BeaconCreated {
  Beacon beacon;
};
struct BeaconTransientPose {
  BeaconId id;
  Pose pose;
};
struct BeaconCommitted {
  Beacon beacon;
};
struct BeaconDeleted {
  BeaconId id;
};
struct GoalDispatched {
  BeaconId id;
  Pose goal;  // robot map frame
};
struct Highlight {
  BeaconId id;
  bool on = false;
};

using Effect = std::variant<BeaconCreated, BeaconTransientPose, BeaconCommitted, BeaconDeleted,
                            GoalDispatched, Highlight>;

using BeaconMap = std::map<BeaconId, Beacon>;

struct SessionState {
  Mode mode = Mode::Off;
  Phase phase = Idle{};
  BeaconMap beacons;
};

struct Transition {
  SessionState state;
  std::vector<Effect> effects;
};

struct EngineContext {
  geometry::AnchorPose anchor;
  Footprint footprint;
  std::function<BeaconId()> next_id;
};

Transition set_mode(const SessionState& s, Mode m);
Transition handle_pointer(const SessionState& s, const PointerEvent& e, const EngineContext& ctx);

// Heading from beacon to pointer in the floor plane; previous_yaw if the
// two points coincide within 1e-9.
double face_toward(Vec2 beacon_pos, Vec2 pointer, double previous_yaw = 0.0);

// Applies one effect to a beacon set; replaying a session's full effect log
// against an empty map reproduces its final beacons.
void apply_effect(BeaconMap& beacons, const Effect& e);
BeaconMap replay(const std::vector<Effect>& log);

// Throws ConstraintViolation unless the beacon lies on the floor with a yaw-only orientation.
void check_floor_constraint(const Beacon& b);

}  // namespace beaconnav::beacon
