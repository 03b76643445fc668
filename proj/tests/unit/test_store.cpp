#include <doctest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <thread>

#include "../support/oracles.hpp"
#include "beaconnav/store.hpp"

using namespace beaconnav;
using namespace beaconnav::store;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BeaconRecord random_record(std::mt19937_64& rng, beacon::IdGenerator& ids) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> yaw(-3.14159, 3.14159);
  const geometry::Pose p{{u(rng), u(rng), 0.0}, geometry::quat_from_yaw(yaw(rng)), geometry::Frame::RobotMap};
  return BeaconRecord::from_pose(ids(), p);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("load of a missing file is empty") {
  oracle::TempDir dir;
  const auto db = Database::load(dir / "none.jsonl");
  CHECK(db.size() == 0);
}

TEST_CASE("records round-trip through the file in order") {
  oracle::TempDir dir;
  std::mt19937_64 rng(1);
  beacon::IdGenerator ids(1);
  auto db = Database::load(dir / "db.jsonl");
  std::vector<BeaconRecord> want;
  for (int i = 0; i < 3; ++i) {
    want.push_back(random_record(rng, ids));
    db.add(want.back());
  }
  const auto again = Database::load(dir / "db.jsonl");
  CHECK(again.records() == want);
}

TEST_CASE("line format is the documented one") {
  BeaconRecord r{beacon::BeaconId("0f8fad5b-d9cb-469f-a165-70867728950e"), 1.5, -2, 0, 0, 0, 0.7071067811865476,
                 0.7071067811865476};
  CHECK(to_line(r) ==
        R"({"id":"0f8fad5b-d9cb-469f-a165-70867728950e","x":1.5,"y":-2,"z":0,"qx":0,"qy":0,"qz":0.7071067811865476,"qw":0.7071067811865476})");
  CHECK(parse_line(to_line(r)) == r);
  CHECK(serialize({}) == "");
}

TEST_CASE("malformed files name the offending line") {
  oracle::TempDir dir;
  const auto path = dir / "bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"0f8fad5b-d9cb-469f-a165-70867728950e","x":0,"y":0,"z":0,"qx":0,"qy":0,"qz":0,"qw":1})" << '\n';
    out << R"({"id":"1f8fad5b-d9cb-469f-a165-70867728950e","x":0,"y":0,"z":0,"qx":0,"qy":0,"qz":0,"qw":0.5})" << '\n';
  }
  try {
    Database::load(path);
    FAIL("expected load error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LoadError);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "not json\n";
  }
  CHECK(code_of([&] { Database::load(path); }) == ErrorCode::LoadError);
  {
    std::ofstream out(path);
    const char* line = R"({"id":"0f8fad5b-d9cb-469f-a165-70867728950e","x":0,"y":0,"z":0,"qx":0,"qy":0,"qz":0,"qw":1})";
    out << line << '\n' << line << '\n';
  }
  CHECK(code_of([&] { Database::load(path); }) == ErrorCode::LoadError);
}

TEST_CASE("add, change and delete contracts") {
  oracle::TempDir dir;
  std::mt19937_64 rng(2);
  beacon::IdGenerator ids(2);
  auto db = Database::load(dir / "db.jsonl");
  const auto r = random_record(rng, ids);
  db.add(r);
  CHECK(code_of([&] { db.add(r); }) == ErrorCode::Duplicate);

  const auto before = slurp(db.path());
  db.change(r.id, r.pose());
  CHECK(slurp(db.path()) == before);

  const geometry::Pose moved{{3, 4, 0}, geometry::quat_from_yaw(1.0), geometry::Frame::RobotMap};
  db.change(r.id, moved);
  CHECK(Database::load(db.path()).find(r.id)->x == 3.0);
  CHECK(code_of([&] { db.change(ids(), moved); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { db.remove(ids()); }) == ErrorCode::NotFound);

  db.remove(r.id);
  CHECK(slurp(db.path()).empty());
  CHECK(Database::load(db.path()).size() == 0);

  BeaconRecord bad = random_record(rng, ids);
  bad.qw = 0.5;
  CHECK(code_of([&] { db.add(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("100 random records and a 1000-record database round-trip bit-identically") {
  oracle::TempDir dir;
  std::mt19937_64 rng(3);
  beacon::IdGenerator ids(3);
  auto db = Database::load(dir / "db.jsonl");
  std::vector<BeaconRecord> want;
  for (int i = 0; i < 100; ++i) {
    want.push_back(random_record(rng, ids));
    db.add(want.back());
  }
  CHECK(Database::load(db.path()).records() == want);

  std::vector<BeaconRecord> many;
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const auto q = geometry::Quat::normalized(n(rng), n(rng), n(rng), n(rng));
    many.push_back({ids(), n(rng) * 1e3, n(rng) * 1e-7, n(rng), q.x(), q.y(), q.z(), q.w()});
  }
  const auto path = dir / "many.jsonl";
  {
    std::ofstream out(path, std::ios::binary);
    out << serialize(many);
  }
  const auto loaded = Database::load(path);
  CHECK(loaded.records() == many);
  loaded.save();
  CHECK(slurp(path) == serialize(many));
}

TEST_CASE("model-based random operations with interleaved reloads") {
  oracle::TempDir dir;
  std::mt19937_64 rng(4);
  beacon::IdGenerator ids(4);
  std::uniform_int_distribution<int> pick(0, 99);
  auto db = Database::load(dir / "db.jsonl");
  std::vector<BeaconRecord> model;

  for (int op = 0; op < 2000; ++op) {
    const int k = pick(rng);
    if (k < 40 || model.empty()) {
      auto r = random_record(rng, ids);
      if (!model.empty() && pick(rng) < 10) {
        r.id = model[static_cast<std::size_t>(pick(rng)) % model.size()].id;
        CHECK(code_of([&] { db.add(r); }) == ErrorCode::Duplicate);
      } else {
        db.add(r);
        model.push_back(r);
      }
    } else if (k < 75) {
      auto& target = model[static_cast<std::size_t>(pick(rng)) % model.size()];
      const auto fresh = random_record(rng, ids);
      db.change(target.id, fresh.pose());
      target = BeaconRecord::from_pose(target.id, fresh.pose());
    } else if (k < 95) {
      const auto i = static_cast<std::size_t>(pick(rng)) % model.size();
      db.remove(model[i].id);
      model.erase(model.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      db = Database::load(db.path());
    }
    REQUIRE(db.records() == model);
    REQUIRE(slurp(db.path()) == serialize(model));
  }
}

TEST_CASE("a failed save leaves memory and disk untouched") {
  oracle::TempDir dir;
  std::mt19937_64 rng(5);
  beacon::IdGenerator ids(5);
  auto db = Database::load(dir / "db.jsonl");
  db.add(random_record(rng, ids));
  const auto before = slurp(db.path());
  const auto records = db.records();

  for (SaveStage stage : {SaveStage::TempPartiallyWritten, SaveStage::TempWritten}) {
    db.set_fault_hook([stage](SaveStage s) {
      if (s == stage) throw Error(ErrorCode::SaveError, "injected");
    });
    CHECK(code_of([&] { db.add(random_record(rng, ids)); }) == ErrorCode::SaveError);
    CHECK(code_of([&] { db.remove(records[0].id); }) == ErrorCode::SaveError);
    CHECK(db.records() == records);
    CHECK(slurp(db.path()) == before);
    CHECK(Database::load(db.path()).records() == records);
  }
}

TEST_CASE("a process killed mid-save never leaves a corrupt file") {
  oracle::TempDir dir;
  std::mt19937_64 rng(6);
  beacon::IdGenerator ids(6);
  const auto path = dir / "db.jsonl";
  for (int round = 0; round < 20; ++round) {
    const auto stage = round % 2 ? SaveStage::TempWritten : SaveStage::TempPartiallyWritten;
    const auto before = slurp(path);
    const auto rec = random_record(rng, ids);
    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      auto db = Database::load(path);
      db.set_fault_hook([stage](SaveStage s) {
        if (s == stage) ::raise(SIGKILL);
      });
      db.add(rec);
      _exit(0);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK(WIFSIGNALED(status));
    CHECK(slurp(path) == before);
    CHECK_NOTHROW(Database::load(path));
    auto db = Database::load(path);
    db.add(rec);  // the next save succeeds over the leftover temp file
  }
  CHECK(Database::load(path).size() == 20);
}

TEST_CASE("concurrent readers only see complete files") {
  oracle::TempDir dir;
  std::mt19937_64 rng(7);
  beacon::IdGenerator ids(7);
  auto db = Database::load(dir / "db.jsonl");
  std::atomic<bool> done{false};
  std::atomic<int> bad{0}, reads{0};
  std::string first_error;
  std::thread reader([&] {
    while (!done) {
      try {
        const auto seen = Database::load(db.path());
        (void)seen;
      } catch (const Error& e) {
        if (bad++ == 0) first_error = e.what();
      }
      ++reads;
    }
  });
  for (int i = 0; i < 300; ++i) db.add(random_record(rng, ids));
  done = true;
  reader.join();
  CAPTURE(first_error);
  CHECK(bad == 0);
  CHECK(reads > 0);
}
