#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dgbr/core.hpp"
#include "dgbr/error.hpp"

using namespace dgbr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgbr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("binarize uses the >= mean rule") {
  Matrix m(3, 3);
  m << 1.0, 5.0, -1.0,
       2.0, 5.0, 1.0,
       3.0, 5.0, 1.0;
  const Matrix b = binarize(m);
  CHECK(b(0, 0) == 0.0);
  CHECK(b(1, 0) == 1.0);
  CHECK(b(2, 0) == 1.0);
  CHECK(b.col(1).sum() == 3.0);
  CHECK(b(0, 2) == 0.0);
  CHECK(b(1, 2) == 1.0);

  Matrix two(2, 1);
  two << -1.0, 1.0;
  CHECK(binarize(two)(0, 0) == 0.0);
  CHECK(binarize(two)(1, 0) == 1.0);
}

TEST_CASE("binarize is idempotent on binary input") {
  Matrix m(4, 2);
  m << 0, 1, 1, 1, 0, 0, 1, 0;
  CHECK(binarize(m) == m);
}

TEST_CASE("binarize rejects an empty matrix") {
  CHECK(kind_of([] { binarize(Matrix(0, 3)); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("dataset rejects non-binary entries and bad shapes") {
  Matrix x(2, 2);
  x << 0, 1, 0.5, 1;
  CHECK(kind_of([&] { BinaryDataset(x, Vector::Zero(2)); }) == ErrorKind::kInvalidInput);
  Matrix ok(2, 2);
  ok << 0, 1, 1, 1;
  CHECK_THROWS_AS(BinaryDataset(ok, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(BinaryDataset(ok, Vector::Zero(2), {"a"}), Error);
  const BinaryDataset d(ok, Vector::Zero(2));
  CHECK(d.feature_names() == std::vector<std::string>{"X1", "X2"});
}

TEST_CASE("overlap_filter keeps columns by frequency") {
  Matrix x(4, 3);
  x << 1, 1, 0,
       0, 1, 0,
       1, 1, 1,
       0, 1, 0;
  Vector y(4);
  y << 0, 1, 0, 1;
  const BinaryDataset d(x, y, {"half", "ones", "quarter"});
  const BinaryDataset f = overlap_filter(d, 0.2, 0.8);
  CHECK(f.feature_names() == std::vector<std::string>{"half", "quarter"});
  CHECK(f.features().col(0) == x.col(0));
  CHECK(overlap_filter(d, 0.0, 1.0) == d);
  CHECK(kind_of([&] { overlap_filter(d, 0.6, 0.7).n(); }) == ErrorKind::kEmptyResult);
}

TEST_CASE("CSV round trip is exact") {
  const fs::path dir = scratch_dir("csv");
  Matrix x(4, 2);
  x << 0, 1, 1, 0, 1, 1, 0, 0;
  Vector y(4);
  y << 1, 0, 1, 0;
  const BinaryDataset d(x, y, {"a", "b"});
  save_csv(d, dir / "d.csv");
  CHECK(load_csv(dir / "d.csv") == d);
}

TEST_CASE("CSV errors name the problem") {
  const fs::path dir = scratch_dir("csv_err");
  {
    std::ofstream(dir / "bad.csv") << "a,b,Y\n0,2,1\n";
  }
  try {
    load_csv(dir / "bad.csv");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  {
    std::ofstream(dir / "noy.csv") << "a,b\n0,1\n";
  }
  CHECK(kind_of([&] { load_csv(dir / "noy.csv"); }) == ErrorKind::kSchema);
  CHECK(kind_of([&] { load_csv(dir / "missing.csv"); }) == ErrorKind::kIo);
}

TEST_CASE("suite save and load") {
  const fs::path dir = scratch_dir("suite");
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  Vector y(2);
  y << 1, 0;
  const BinaryDataset d(x, y);
  EnvironmentSuite s{d, {{"r=0.2", d}, {"r=0.8", d}}, {{"seed", "7"}}};
  const fs::path manifest = save_suite(s, dir);
  const EnvironmentSuite back = load_suite(manifest);
  CHECK(back.train == d);
  REQUIRE(back.tests.size() == 2);
  CHECK(back.tests[1].first == "r=0.8");
  CHECK(back.provenance.at("seed") == "7");
}

TEST_CASE("suite validation rejects duplicate labels") {
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  const BinaryDataset d(x, Vector::Zero(2));
  EnvironmentSuite s{d, {{"a", d}, {"a", d}}, {}};
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("stable split validation") {
  StableSplit ok{{0, 1}, {2}};
  CHECK_NOTHROW(ok.validate(3));
  StableSplit overlap{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(overlap.validate(3), Error);
  StableSplit gap{{0}, {2}};
  CHECK_THROWS_AS(gap.validate(3), Error);
}

TEST_CASE("atomic write replaces content") {
  const fs::path dir = scratch_dir("atomic");
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  CHECK(read_file(dir / "f.txt") == "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}
