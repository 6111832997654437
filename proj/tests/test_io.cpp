#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "cpl/error.hpp"
#include "cpl/io.hpp"
#include "cpl/rng.hpp"
#include "cpl/synth.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "cpl_io_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

cpl::PointCloud sample_cloud(std::size_t n, std::uint64_t seed) {
  cpl::Rng rng(seed);
  cpl::PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.push_back({rng.uniform(-40, 40), rng.uniform(-40, 40),
                 rng.uniform(-2, 3), rng.uniform()});
  return c;
}

}  // namespace

TEST_CASE("points bin round-trip preserves float32 payload") {
  const fs::path dir = temp_dir("points");
  const cpl::PointCloud cloud = sample_cloud(513, 3);
  cpl::write_points_bin(cloud, dir / "a.bin");
  CHECK(fs::file_size(dir / "a.bin") == 513 * 16);
  const cpl::PointCloud back = cpl::read_points_bin(dir / "a.bin");
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.x[i] == static_cast<double>(static_cast<float>(cloud.x[i])));
    CHECK(back.y[i] == static_cast<double>(static_cast<float>(cloud.y[i])));
    CHECK(back.z[i] == static_cast<double>(static_cast<float>(cloud.z[i])));
    CHECK(back.intensity[i] ==
          static_cast<double>(static_cast<float>(cloud.intensity[i])));
  }
  // second write is byte-identical
  cpl::write_points_bin(cloud, dir / "b.bin");
  std::ifstream fa(dir / "a.bin", std::ios::binary);
  std::ifstream fb(dir / "b.bin", std::ios::binary);
  const std::string da((std::istreambuf_iterator<char>(fa)), {});
  const std::string db((std::istreambuf_iterator<char>(fb)), {});
  CHECK(da == db);
}

TEST_CASE("points bin error cases") {
  const fs::path dir = temp_dir("points_err");
  try {
    cpl::read_points_bin(dir / "missing.bin");
    FAIL("expected throw");
  } catch (const cpl::Error& e) {
    CHECK(e.kind() == cpl::ErrorKind::not_found);
  }
  std::ofstream(dir / "trunc.bin", std::ios::binary).write("0123456789", 10);
  try {
    cpl::read_points_bin(dir / "trunc.bin");
    FAIL("expected throw");
  } catch (const cpl::Error& e) {
    CHECK(e.kind() == cpl::ErrorKind::parse);
  }
  // empty file is a valid empty cloud
  std::ofstream(dir / "empty.bin", std::ios::binary);
  CHECK(cpl::read_points_bin(dir / "empty.bin").size() == 0);
}

TEST_CASE("sequence round-trip sorts frames and keeps poses") {
  const fs::path dir = temp_dir("sequence");
  cpl::Sequence seq;
  seq.id = "seq_rt";
  for (int i : {0, 1, 2}) {
    cpl::Frame f;
    f.index = i;
    f.timestamp = 0.1 * i;
    f.pose = cpl::Pose::from_yaw(0.05 * i, 2.0 * i, 0.0, 0.0);
    f.points = sample_cloud(16 + static_cast<std::size_t>(i), 100 + i);
    seq.frames.push_back(std::move(f));
  }
  cpl::write_sequence(seq, dir / "manifest.json");
  // scramble the manifest order; the reader must sort by index
  nlohmann::json j = cpl::read_json_file(dir / "manifest.json");
  std::reverse(j["frames"].begin(), j["frames"].end());
  cpl::write_json_file(j, dir / "manifest.json");
  const cpl::Sequence back = cpl::read_sequence(dir / "manifest.json");
  CHECK(back.id == "seq_rt");
  REQUIRE(back.frames.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.frames[i].index == i);
    CHECK(back.frames[i].timestamp == doctest::Approx(0.1 * i));
    CHECK((back.frames[i].pose.rotation -
           cpl::Pose::from_yaw(0.05 * i).rotation).norm() < 1e-12);
    CHECK(back.frames[i].pose.translation.x() == doctest::Approx(2.0 * i));
    CHECK(back.frames[i].points.size() == 16 + static_cast<std::size_t>(i));
  }
}

TEST_CASE("sequence reader rejects badly non-orthonormal poses") {
  const fs::path dir = temp_dir("sequence_bad");
  cpl::Sequence seq;
  seq.id = "bad";
  cpl::Frame f;
  f.index = 0;
  f.points = sample_cloud(4, 1);
  seq.frames.push_back(f);
  cpl::write_sequence(seq, dir / "manifest.json");

  nlohmann::json j = cpl::read_json_file(dir / "manifest.json");
  auto& rot = j["frames"][0]["pose"];  // flat row-major [R|t]

  // small drift is re-orthonormalized silently
  rot[0] = 1.0 + 5e-5;
  cpl::write_json_file(j, dir / "manifest.json");
  const cpl::Sequence fixed = cpl::read_sequence(dir / "manifest.json");
  CHECK((fixed.frames[0].pose.rotation.transpose() *
             fixed.frames[0].pose.rotation -
         Eigen::Matrix3d::Identity()).norm() < 1e-9);

  // gross drift is an error
  rot[0] = 1.5;
  cpl::write_json_file(j, dir / "manifest.json");
  try {
    cpl::read_sequence(dir / "manifest.json");
    FAIL("expected throw");
  } catch (const cpl::Error& e) {
    CHECK(e.kind() == cpl::ErrorKind::validity);
  }
}

TEST_CASE("labels JSONL round-trip, css null when unscored") {
  const fs::path dir = temp_dir("labels");
  std::vector<cpl::Label> labels;
  cpl::Label a;
  a.box = {1.5, -2.0, 0.8, 4.5, 1.8, 1.6, 0.4};
  a.beta = cpl::ClassId::vehicle;
  a.tau = 3;
  a.css = 0.82;
  a.frame_index = 2;
  labels.push_back(a);
  cpl::Label b;
  b.box = {0.0, 5.0, 0.9, 1.8, 0.7, 1.7, -1.2};
  b.beta = cpl::ClassId::cyclist;
  b.tau = 4;
  b.frame_index = 0;  // css unset
  labels.push_back(b);

  cpl::write_labels(labels, dir / "labels.jsonl");
  const auto back = cpl::read_labels(dir / "labels.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].box.l == doctest::Approx(4.5));
  CHECK(back[0].beta == cpl::ClassId::vehicle);
  CHECK(back[0].tau == 3);
  REQUIRE(back[0].css.has_value());
  CHECK(*back[0].css == doctest::Approx(0.82));
  CHECK(back[0].frame_index == 2);
  CHECK_FALSE(back[1].css.has_value());
  CHECK(back[1].beta == cpl::ClassId::cyclist);

  // the css field is literally null on disk for unscored labels
  std::ifstream in(dir / "labels.jsonl");
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  CHECK(line.find("\"css\"") != std::string::npos);
  std::getline(in, line);
  CHECK(line.find("null") != std::string::npos);
}

TEST_CASE("label clouds round-trip aligned with label order") {
  const fs::path dir = temp_dir("label_clouds");
  std::vector<cpl::PointCloud> clouds;
  clouds.push_back(sample_cloud(10, 1));
  clouds.push_back(cpl::PointCloud{});  // empty cluster stays empty
  clouds.push_back(sample_cloud(3, 2));
  cpl::write_label_clouds(clouds, dir);
  const auto back = cpl::read_label_clouds(dir);
  REQUIRE(back.size() == 3);
  CHECK(back[0].size() == 10);
  CHECK(back[1].size() == 0);
  CHECK(back[2].size() == 3);
  CHECK(back[2].x[1] ==
        static_cast<double>(static_cast<float>(clouds[2].x[1])));
}

TEST_CASE("prototype set round-trip") {
  const fs::path dir = temp_dir("protos");
  std::vector<cpl::CProto> protos;
  cpl::CProto p;
  p.beta = cpl::ClassId::vehicle;
  p.source_tau = 7;
  p.box = {0, 0, 0, 4.6, 1.85, 1.5, 0};
  p.points = sample_cloud(25, 9);
  protos.push_back(p);
  p.beta = cpl::ClassId::cyclist;
  p.source_tau = 9;
  p.box = {0, 0, 0, 1.9, 0.7, 1.8, 0};
  p.points = sample_cloud(8, 10);
  protos.push_back(p);
  cpl::write_cprotos(protos, dir);
  const auto back = cpl::read_cprotos(dir);
  REQUIRE(back.size() == 2);
  CHECK(back[0].beta == cpl::ClassId::vehicle);
  CHECK(back[0].source_tau == 7);
  CHECK(back[0].box.l == doctest::Approx(4.6));
  CHECK(back[0].points.size() == 25);
  CHECK(back[1].beta == cpl::ClassId::cyclist);
  CHECK(back[1].points.size() == 8);
}

TEST_CASE("class names round-trip") {
  using cpl::ClassId;
  for (ClassId c : {ClassId::discard_small, ClassId::vehicle,
                    ClassId::pedestrian, ClassId::cyclist,
                    ClassId::discard_large})
    CHECK(cpl::class_from_string(cpl::to_string(c)) == c);
  CHECK_THROWS_AS(cpl::class_from_string("Goose"), cpl::Error);
}
