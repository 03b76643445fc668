#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "beaconnav/evalkit.hpp"

namespace beaconnav::evalkit {

namespace {

using Key = std::tuple<std::string, System, int>;

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::optional<double> try_shapiro(const std::vector<double>& v) {
  try {
    return shapiro_wilk(v).p;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<double> try_wilcoxon(const std::vector<double>& a, const std::vector<double>& b, Alternative alt) {
  if (a.size() < 2) return std::nullopt;
  try {
    return wilcoxon_signed_rank(a, b, alt).p;
  } catch (const Error&) {
    return std::nullopt;
  }
}

MetricRow make_row(std::string label, const std::vector<double>& a, const std::vector<double>& b,
                   const CompareOptions& opt) {
  MetricRow r;
  r.label = std::move(label);
  r.mean_2d = mean(a);
  r.mean_mr = mean(b);
  r.n_pairs = a.size();
  r.shapiro_p_2d = try_shapiro(a);
  r.shapiro_p_mr = try_shapiro(b);
  r.wilcoxon_p = try_wilcoxon(a, b, opt.alternative);
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string opt_p(const std::optional<double>& p, bool for_csv) {
  if (!p) return for_csv ? "" : "n/a";
  return for_csv ? shortest(*p) : fixed(*p, 4);
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

Report compare_systems(const std::vector<TrialEvent>& events, const std::vector<SusRow>& sus,
                       const CompareOptions& options) {
  std::map<Key, std::vector<TrialEvent>> groups;
  for (const auto& e : events) groups[{e.participant, e.system, e.stage}].push_back(e);

  std::map<std::string, std::map<System, std::set<int>>> coverage;
  std::map<Key, StageMetrics> metrics;
  for (const auto& [key, evs] : groups) {
    metrics[key] = compute_stage_metrics(evs);
    coverage[std::get<0>(key)][std::get<1>(key)].insert(std::get<2>(key));
  }

  std::map<std::string, std::map<System, SusResponse>> sus_by;
  for (const auto& row : sus) {
    if (!sus_by[row.participant].emplace(row.system, row.response).second) {
      throw Error(ErrorCode::PairingError, "duplicate SUS row for participant " + row.participant + " system " + to_string(row.system));
    }
    sus_score(row.response);
  }

  Report rep;
  rep.options = options;
  for (const auto& [participant, by_sys] : coverage) {
    const auto a = by_sys.find(System::Baseline2D);
    const auto b = by_sys.find(System::MR);
    if (a == by_sys.end() || b == by_sys.end()) {
      throw Error(ErrorCode::PairingError, "participant " + participant + " has events for only one system");
    }
    if (a->second != b->second) {
      throw Error(ErrorCode::PairingError, "participant " + participant + " covers different stages per system");
    }
    rep.participants.push_back(participant);
  }
  for (const auto& [participant, by_sys] : sus_by) {
    if (by_sys.size() != 2) throw Error(ErrorCode::PairingError, "participant " + participant + " has SUS for only one system");
  }

  std::set<int> stages;
  for (const auto& [p, by_sys] : coverage) stages.insert(by_sys.begin()->second.begin(), by_sys.begin()->second.end());

  struct Metric {
    const char* title;
    const char* key;
    double (*get)(const StageMetrics&);
  };
  const Metric defs[] = {
      {"Effectiveness Comparison by Action Number", "action_number",
       [](const StageMetrics& m) { return static_cast<double>(m.actions_before_nav); }},
      {"Effectiveness Comparison by Navigation Number", "navigation_number",
       [](const StageMetrics& m) { return static_cast<double>(m.navigation_count); }},
      {"Effectiveness Comparison by Action Time", "action_time_s", [](const StageMetrics& m) { return m.action_time; }},
  };

  for (const Metric& def : defs) {
    MetricTable table{def.title, def.key, {}};
    std::vector<double> all_a, all_b;
    for (int stage : stages) {
      std::vector<double> a, b;
      for (const auto& p : rep.participants) {
        auto ia = metrics.find({p, System::Baseline2D, stage});
        auto ib = metrics.find({p, System::MR, stage});
        if (ia == metrics.end()) continue;  // coverage check guarantees ib exists too
        a.push_back(def.get(ia->second));
        b.push_back(def.get(ib->second));
      }
      all_a.insert(all_a.end(), a.begin(), a.end());
      all_b.insert(all_b.end(), b.begin(), b.end());
      table.rows.push_back(make_row(std::to_string(stage), a, b, options));
    }
    table.rows.push_back(make_row("Overall", all_a, all_b, options));
    rep.tables.push_back(std::move(table));
  }

  if (!sus_by.empty()) {
    MetricTable table{"System Usability Scale", "sus", {}};
    for (int q = 0; q < kSusItems; ++q) {
      std::vector<double> a, b;
      for (const auto& [p, by_sys] : sus_by) {
        a.push_back(by_sys.at(System::Baseline2D).ratings[static_cast<std::size_t>(q)]);
        b.push_back(by_sys.at(System::MR).ratings[static_cast<std::size_t>(q)]);
      }
      table.rows.push_back(make_row("Q" + std::to_string(q + 1), a, b, options));
    }
    std::vector<double> a, b;
    for (const auto& [p, by_sys] : sus_by) {
      a.push_back(sus_score(by_sys.at(System::Baseline2D)));
      b.push_back(sus_score(by_sys.at(System::MR)));
    }
    table.rows.push_back(make_row("Overall", a, b, options));
    rep.sus = std::move(table);
  }
  return rep;
}

std::string Report::to_csv() const {
  std::ostringstream out;
  out << "metric,stage,n,mean_2d,mean_mr,shapiro_p_2d,shapiro_p_mr,wilcoxon_p,significant\n";
  const auto emit = [&](const MetricTable& t) {
    for (const auto& r : t.rows) {
      const bool sig = r.wilcoxon_p && *r.wilcoxon_p < options.alpha;
      out << t.key << ',' << r.label << ',' << r.n_pairs << ',' << shortest(r.mean_2d) << ',' << shortest(r.mean_mr)
          << ',' << opt_p(r.shapiro_p_2d, true) << ',' << opt_p(r.shapiro_p_mr, true) << ','
          << opt_p(r.wilcoxon_p, true) << ',' << (r.wilcoxon_p ? (sig ? "yes" : "no") : "n/a") << '\n';
    }
  };
  for (const auto& t : tables) emit(t);
  if (sus) emit(*sus);
  return out.str();
}

std::string Report::to_text() const {
  std::ostringstream out;
  out << "Participants: " << participants.size() << "  (alpha = " << fixed(options.alpha, 2) << ", "
      << (options.alternative == Alternative::TwoSided ? "two-sided" : "one-sided") << " Wilcoxon signed-rank)\n";
  const auto emit = [&](const MetricTable& t) {
    out << '\n' << t.title << '\n';
    const std::vector<std::string> head = {"Stage", "Baseline (2D)", "MR", "n", "SW p (2D)", "SW p (MR)", "Wilcoxon p", ""};
    std::vector<std::vector<std::string>> cells{head};
    for (const auto& r : t.rows) {
      const bool sig = r.wilcoxon_p && *r.wilcoxon_p < options.alpha;
      cells.push_back({r.label, fixed(r.mean_2d, 2), fixed(r.mean_mr, 2), std::to_string(r.n_pairs),
                       opt_p(r.shapiro_p_2d, false), opt_p(r.shapiro_p_mr, false), opt_p(r.wilcoxon_p, false),
                       sig ? "*" : ""});
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    for (const auto& row : cells) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) line += pad(row[c], width[c] + 2);
      line.erase(line.find_last_not_of(' ') + 1);
      out << line << '\n';
    }
  };
  for (const auto& t : tables) emit(t);
  if (sus) emit(*sus);
  return out.str();
}

}  // namespace beaconnav::evalkit
