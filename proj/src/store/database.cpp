#include "beaconnav/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <set>
#include <sstream>

namespace beaconnav::store {

namespace {

constexpr double kUnitTol = 1e-6;

void append_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

double number_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::LoadError, std::string("missing or non-numeric field '") + key + "'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::LoadError, std::string("non-finite field '") + key + "'");
  }
  return v;
}

void validate(const BeaconRecord& r, ErrorCode code) {
  const double n = std::sqrt(r.qx * r.qx + r.qy * r.qy + r.qz * r.qz + r.qw * r.qw);
  if (std::abs(n - 1.0) > kUnitTol) {
    throw Error(code, "quaternion norm " + std::to_string(n) + " is not 1");
  }
}

[[noreturn]] void throw_errno(const std::string& what, const std::filesystem::path& p) {
  throw Error(ErrorCode::SaveError, what + " " + p.string() + ": " + std::strerror(errno));
}

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

void write_all(int fd, std::string_view data, const std::filesystem::path& p) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write", p);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

BeaconRecord BeaconRecord::from_pose(const BeaconId& id, const geometry::Pose& p) {
  if (p.frame != geometry::Frame::RobotMap) {
    throw Error(ErrorCode::FrameMismatch, "beacon records are stored in the robot map frame");
  }
  const auto& q = p.orientation;
  return {id, p.position.x, p.position.y, p.position.z, q.x(), q.y(), q.z(), q.w()};
}

geometry::Pose BeaconRecord::pose() const {
  return {{x, y, z}, geometry::Quat::from_unit(qx, qy, qz, qw, kUnitTol), geometry::Frame::RobotMap};
}

std::string to_line(const BeaconRecord& r) {
  std::string out;
  out.reserve(160);
  out += "{\"id\":\"";
  out += r.id.str();
  out += '"';
  const std::array<std::pair<const char*, double>, 7> fields = {
      {{"x", r.x}, {"y", r.y}, {"z", r.z}, {"qx", r.qx}, {"qy", r.qy}, {"qz", r.qz}, {"qw", r.qw}}};
  for (const auto& [key, v] : fields) {
    out += ",\"";
    out += key;
    out += "\":";
    append_number(out, v);
  }
  out += '}';
  return out;
}

BeaconRecord parse_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::LoadError, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::LoadError, "record is not an object");
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw Error(ErrorCode::LoadError, "missing field 'id'");

  BeaconRecord r;
  try {
    r.id = BeaconId(id->get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::LoadError, e.what());
  }
  r.x = number_field(j, "x");
  r.y = number_field(j, "y");
  r.z = number_field(j, "z");
  r.qx = number_field(j, "qx");
  r.qy = number_field(j, "qy");
  r.qz = number_field(j, "qz");
  r.qw = number_field(j, "qw");
  validate(r, ErrorCode::LoadError);
  return r;
}

std::string serialize(const std::vector<BeaconRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_line(r);
    out += '\n';
  }
  return out;
}

Database Database::load(const std::filesystem::path& path) {
  Database db(path);
  // Decide "missing" from the open itself; a separate exists() check races with writers.
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    if (errno == ENOENT) return db;
    throw Error(ErrorCode::LoadError, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  std::string content;
  char buf[1 << 16];
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) {
      const int err = errno;
      ::close(fd);
      throw Error(ErrorCode::LoadError, "cannot read " + path.string() + ": " + std::strerror(err));
    }
    if (n == 0) break;
    content.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fd);
  std::istringstream in(content);
  std::set<BeaconId> seen;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      BeaconRecord r = parse_line(line);
      if (!seen.insert(r.id).second) {
        throw Error(ErrorCode::LoadError, "duplicate id " + r.id.str());
      }
      db.records_.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(ErrorCode::LoadError,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return db;
}

bool Database::contains(const BeaconId& id) const { return find(id).has_value(); }

std::optional<BeaconRecord> Database::find(const BeaconId& id) const {
  auto it = std::find_if(records_.begin(), records_.end(), [&](const auto& r) { return r.id == id; });
  if (it == records_.end()) return std::nullopt;
  return *it;
}

void Database::add(const BeaconRecord& r) {
  validate(r, ErrorCode::InvalidArgument);
  if (contains(r.id)) throw Error(ErrorCode::Duplicate, "duplicate beacon id " + r.id.str());
  auto next = records_;
  next.push_back(r);
  commit(std::move(next));
}

void Database::change(const BeaconId& id, const geometry::Pose& pose) {
  auto next = records_;
  auto it = std::find_if(next.begin(), next.end(), [&](const auto& r) { return r.id == id; });
  if (it == next.end()) throw Error(ErrorCode::NotFound, "no beacon " + id.str());
  *it = BeaconRecord::from_pose(id, pose);
  validate(*it, ErrorCode::InvalidArgument);
  commit(std::move(next));
}

void Database::remove(const BeaconId& id) {
  auto next = records_;
  auto it = std::find_if(next.begin(), next.end(), [&](const auto& r) { return r.id == id; });
  if (it == next.end()) throw Error(ErrorCode::NotFound, "no beacon " + id.str());
  next.erase(it);
  commit(std::move(next));
}

void Database::save() const { write_file(records_); }

void Database::commit(std::vector<BeaconRecord> next) {
  write_file(next);
  records_ = std::move(next);
}

void Database::write_file(const std::vector<BeaconRecord>& records) const {
  const std::string content = serialize(records);
  std::filesystem::path tmp = path_;
  tmp += ".tmp";

  Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw_errno("open", tmp);

  const std::string_view all(content);
  const std::size_t half = all.size() / 2;
  write_all(fd.get(), all.substr(0, half), tmp);
  if (fault_hook_) fault_hook_(SaveStage::TempPartiallyWritten);
  write_all(fd.get(), all.substr(half), tmp);
  if (::fsync(fd.get()) != 0) throw_errno("fsync", tmp);
  if (::close(fd.release()) != 0) throw_errno("close", tmp);
  if (fault_hook_) fault_hook_(SaveStage::TempWritten);

  if (::rename(tmp.c_str(), path_.c_str()) != 0) throw_errno("rename", tmp);

  // Make the rename itself durable.
  auto dir = path_.parent_path();
  if (dir.empty()) dir = ".";
  Fd dfd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
  if (dfd.get() >= 0) ::fsync(dfd.get());
}

}  // namespace beaconnav::store
