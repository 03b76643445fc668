#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "beaconnav/evalkit.hpp"

namespace beaconnav::evalkit {

namespace {

constexpr std::array<EventKind, 7> kKinds = {EventKind::AddBegin,   EventKind::MoveBegin, EventKind::AddCommit,
                                             EventKind::MoveCommit, EventKind::Select,    EventKind::NavSuccess,
                                             EventKind::NavFail};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_begin(EventKind k) { return k == EventKind::AddBegin || k == EventKind::MoveBegin; }
bool is_commit(EventKind k) { return k == EventKind::AddCommit || k == EventKind::MoveCommit; }

}  // namespace

const char* to_string(System s) noexcept { return s == System::Baseline2D ? "2d" : "mr"; }

std::optional<System> parse_system(std::string_view s) {
  if (s == "2d") return System::Baseline2D;
  if (s == "mr") return System::MR;
  return std::nullopt;
}

const char* to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::AddBegin: return "add_begin";
    case EventKind::MoveBegin: return "move_begin";
    case EventKind::AddCommit: return "add_commit";
    case EventKind::MoveCommit: return "move_commit";
    case EventKind::Select: return "select";
    case EventKind::NavSuccess: return "nav_success";
    case EventKind::NavFail: return "nav_fail";
  }
  return "select";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (EventKind k : kKinds) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string to_json_line(const TrialEvent& e) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.t);
  std::string out = "{\"t\":";
  out.append(buf.data(), end);
  out += ",\"participant\":";
  out += nlohmann::json(e.participant).dump();
  out += ",\"system\":\"";
  out += to_string(e.system);
  out += "\",\"stage\":";
  out += std::to_string(e.stage);
  out += ",\"kind\":\"";
  out += to_string(e.kind);
  out += "\"}";
  return out;
}

TrialEvent parse_event_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::LoadError, std::string("malformed JSON: ") + e.what());
  }
  const auto field = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (!j.is_object() || it == j.end()) throw Error(ErrorCode::LoadError, std::string("missing field '") + key + "'");
    return *it;
  };
  TrialEvent e;
  const auto& t = field("t");
  if (!t.is_number() || !std::isfinite(t.get<double>()) || t.get<double>() < 0) {
    throw Error(ErrorCode::LoadError, "field 't' must be a non-negative number");
  }
  e.t = t.get<double>();
  const auto& p = field("participant");
  if (!p.is_string() || p.get<std::string>().empty()) throw Error(ErrorCode::LoadError, "field 'participant' must be a non-empty string");
  e.participant = p.get<std::string>();
  const auto& s = field("system");
  const auto sys = s.is_string() ? parse_system(s.get<std::string>()) : std::nullopt;
  if (!sys) throw Error(ErrorCode::LoadError, "field 'system' must be \"2d\" or \"mr\"");
  e.system = *sys;
  const auto& st = field("stage");
  if (!st.is_number_integer() || st.get<int>() < 1 || st.get<int>() > 4) {
    throw Error(ErrorCode::LoadError, "field 'stage' must be an integer 1..4");
  }
  e.stage = st.get<int>();
  const auto& k = field("kind");
  const auto kind = k.is_string() ? parse_event_kind(k.get<std::string>()) : std::nullopt;
  if (!kind) throw Error(ErrorCode::LoadError, "unknown event kind");
  e.kind = *kind;
  return e;
}

std::vector<TrialEvent> parse_event_log(std::string_view text) {
  std::vector<TrialEvent> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_event_line(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::LoadError, "event log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrialEvent> load_event_log(const std::filesystem::path& path) {
  try {
    return parse_event_log(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

StageMetrics compute_stage_metrics(std::span<const TrialEvent> events) {
  if (events.empty()) throw Error(ErrorCode::IncompleteStage, "stage has no events");
  const TrialEvent& head = events.front();

  StageMetrics m;
  bool phase_open = false;
  EventKind open_kind = EventKind::AddBegin;
  double open_t = 0.0;
  bool awaiting_outcome = false;
  bool done = false;
  double last_t = head.t;

  const auto illegal = [&](std::size_t i, const std::string& why) {
    return Error(ErrorCode::IllegalSequence, "event " + std::to_string(i) + " (" + to_string(events[i].kind) + "): " + why);
  };

  for (std::size_t i = 0; i < events.size(); ++i) {
    const TrialEvent& e = events[i];
    if (e.participant != head.participant || e.system != head.system || e.stage != head.stage) {
      throw illegal(i, "belongs to a different participant/system/stage");
    }
    if (e.t < last_t) throw illegal(i, "timestamp goes backwards");
    last_t = e.t;
    if (done) throw illegal(i, "after the stage already succeeded");

    if (is_begin(e.kind)) {
      // An unmatched earlier begin was abandoned (mode switched away).
      phase_open = true;
      open_kind = e.kind;
      open_t = e.t;
    } else if (is_commit(e.kind)) {
      const EventKind expected = e.kind == EventKind::AddCommit ? EventKind::AddBegin : EventKind::MoveBegin;
      if (!phase_open || open_kind != expected) throw illegal(i, "commit without a matching begin");
      ++m.actions_before_nav;
      m.action_time += e.t - open_t;
      phase_open = false;
    } else if (e.kind == EventKind::Select) {
      if (awaiting_outcome) throw illegal(i, "select while the previous navigation has no outcome");
      phase_open = false;
      ++m.navigation_count;
      awaiting_outcome = true;
    } else {
      if (!awaiting_outcome) throw illegal(i, "navigation outcome without a select");
      awaiting_outcome = false;
      done = e.kind == EventKind::NavSuccess;
    }
  }
  if (!done) {
    throw Error(ErrorCode::IncompleteStage, "participant " + head.participant + " system " + to_string(head.system) +
                                                " stage " + std::to_string(head.stage) + " never ends in nav_success");
  }
  return m;
}

}  // namespace beaconnav::evalkit
