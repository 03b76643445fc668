#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beaconnav/error.hpp"

namespace beaconnav::evalkit {

enum class System { Baseline2D, MR };

const char* to_string(System s) noexcept;  // "2d" | "mr"
std::optional<System> parse_system(std::string_view s);

enum class EventKind { AddBegin, MoveBegin, AddCommit, MoveCommit, Select, NavSuccess, NavFail };

const char* to_string(EventKind k) noexcept;  // "add_begin", ... "nav_fail"
std::optional<EventKind> parse_event_kind(std::string_view s);

struct TrialEvent {
  double t = 0.0;
  std::string participant;
  System system = System::MR;
  int stage = 1;
  EventKind kind = EventKind::Select;

  friend bool operator==(const TrialEvent&, const TrialEvent&) = default;
};

// {"t":…,"participant":"…","system":"2d|mr","stage":1-4,"kind":"…"}
std::string to_json_line(const TrialEvent& e);
TrialEvent parse_event_line(std::string_view line);
// Throws LoadError naming the line number on malformed input.
std::vector<TrialEvent> parse_event_log(std::string_view text);
std::vector<TrialEvent> load_event_log(const std::filesystem::path& path);

struct StageMetrics {
  int actions_before_nav = 0;
  int navigation_count = 0;
  double action_time = 0.0;

  friend bool operator==(const StageMetrics&, const StageMetrics&) = default;
};

// Events of one participant/system/stage in log order. Throws IllegalSequence
// for out-of-order or unmatched events and IncompleteStage unless the stage
// ends with nav_success.
StageMetrics compute_stage_metrics(std::span<const TrialEvent> events);

inline constexpr int kSusItems = 10;

struct SusResponse {
  std::array<int, kSusItems> ratings{};
};

// 2.5 * sum of (r for odd items, 4 - r for even items), items numbered from 1.
double sus_score(const SusResponse& r);

struct SusRow {
  std::string participant;
  System system = System::MR;
  SusResponse response;
};

// CSV rows "participant,system,r1,...,r10"; an optional header row is skipped.
std::vector<SusRow> parse_sus_csv(std::string_view text);
std::vector<SusRow> load_sus_csv(const std::filesystem::path& path);

struct TestResult {
  double statistic = 0.0;
  double p = 1.0;
};

// Royston's polynomial approximation (AS R94), valid for 3 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> data);

enum class Alternative { TwoSided, Greater, Less };

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p = 1.0;
  int n_effective = 0;
  bool exact = false;
};

inline constexpr int kWilcoxonExactMaxN = 25;

// Paired signed-rank test on d = x - y. Zero differences are dropped, tied
// |d| share average ranks. Exact null distribution for n_effective <= 25,
// otherwise normal approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    Alternative alt = Alternative::TwoSided);

struct CompareOptions {
  double alpha = 0.05;
  Alternative alternative = Alternative::TwoSided;
};

struct MetricRow {
  std::string label;  // "1".."4" or "Overall"
  double mean_2d = 0.0;
  double mean_mr = 0.0;
  std::size_t n_pairs = 0;
  std::optional<double> shapiro_p_2d;
  std::optional<double> shapiro_p_mr;
  std::optional<double> wilcoxon_p;
};

struct MetricTable {
  std::string title;
  std::string key;  // csv metric column
  std::vector<MetricRow> rows;
};

struct Report {
  std::vector<MetricTable> tables;  // action number, navigation number, action time
  std::optional<MetricTable> sus;   // rows "Q1".."Q10" then "Overall"
  std::vector<std::string> participants;
  CompareOptions options;

  std::string to_csv() const;
  std::string to_text() const;
};

// Throws PairingError when a participant lacks either system, or when the two
// systems cover different stages for a participant.
Report compare_systems(const std::vector<TrialEvent>& events, const std::vector<SusRow>& sus,
                       const CompareOptions& options = {});

}  // namespace beaconnav::evalkit
