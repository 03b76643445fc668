#include <charconv>
#include <fstream>
#include <sstream>

#include "beaconnav/evalkit.hpp"

namespace beaconnav::evalkit {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

double sus_score(const SusResponse& r) {
  int total = 0;
  for (int i = 0; i < kSusItems; ++i) {
    const int v = r.ratings[static_cast<std::size_t>(i)];
    if (v < 0 || v > 4) {
      throw Error(ErrorCode::InvalidResponse, "SUS item " + std::to_string(i + 1) + " rating " + std::to_string(v) + " outside 0..4");
    }
    // Item i+1: odd items are positive statements, even items negative.
    total += (i % 2 == 0) ? v : 4 - v;
  }
  return 2.5 * total;
}

std::vector<SusRow> parse_sus_csv(std::string_view text) {
  std::vector<SusRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::LoadError, "SUS line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != 2 + kSusItems) throw fail("expected participant,system and 10 ratings");
    const auto sys = parse_system(f[1]);
    if (!sys) {
      if (rows.empty() && !parse_int(f[2])) continue;  // header row
      throw fail("system must be 2d or mr");
    }
    if (f[0].empty()) throw fail("empty participant id");
    SusRow row{f[0], *sys, {}};
    for (int i = 0; i < kSusItems; ++i) {
      const auto v = parse_int(f[static_cast<std::size_t>(2 + i)]);
      if (!v || *v < 0 || *v > 4) throw fail("rating " + std::to_string(i + 1) + " must be an integer 0..4");
      row.response.ratings[static_cast<std::size_t>(i)] = *v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SusRow> load_sus_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_sus_csv(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace beaconnav::evalkit
