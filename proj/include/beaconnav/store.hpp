#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beaconnav/beacon_core.hpp"

namespace beaconnav::store {

using beacon::BeaconId;

struct BeaconRecord {
  BeaconId id;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double qx = 0.0;
  double qy = 0.0;
  double qz = 0.0;
  double qw = 1.0;

  static BeaconRecord from_pose(const BeaconId& id, const geometry::Pose& p);
  geometry::Pose pose() const;

  friend bool operator==(const BeaconRecord&, const BeaconRecord&) = default;
};

// One line, no trailing newline. Numbers use the shortest round-trip decimal form.
std::string to_line(const BeaconRecord& r);
// Throws LoadError (message without line number) on any malformed input.
BeaconRecord parse_line(std::string_view line);

// Points at which a save can be interrupted in fault-injection tests.
enum class SaveStage { TempPartiallyWritten, TempWritten };

// Beacon database backed by one file. Every mutation is written through with an
// atomic temp-file + rename replace; a failed write leaves memory and disk unchanged.
class Database {
 public:
  using FaultHook = std::function<void(SaveStage)>;

  // Missing file yields an empty database bound to path.
  static Database load(const std::filesystem::path& path);

  const std::filesystem::path& path() const { return path_; }
  const std::vector<BeaconRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool contains(const BeaconId& id) const;
  std::optional<BeaconRecord> find(const BeaconId& id) const;

  void add(const BeaconRecord& r);
  void change(const BeaconId& id, const geometry::Pose& pose);
  void remove(const BeaconId& id);
  void save() const;

  // Test seam: called at each SaveStage; throwing from it aborts the save.
  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

 private:
  explicit Database(std::filesystem::path path) : path_(std::move(path)) {}

  void write_file(const std::vector<BeaconRecord>& records) const;
  void commit(std::vector<BeaconRecord> next);

  std::filesystem::path path_;
  std::vector<BeaconRecord> records_;
  FaultHook fault_hook_;
};

// Serialized file content for a record list (what save() writes).
std::string serialize(const std::vector<BeaconRecord>& records);

}  // namespace beaconnav::store
