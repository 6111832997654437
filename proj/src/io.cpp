#include "cpl/io.hpp"

#include <Eigen/SVD>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpl/error.hpp"
#include "cpl/log.hpp"

namespace cpl {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(ClassId c) {
  switch (c) {
    case ClassId::discard_small: return "DiscardSmall";
    case ClassId::vehicle: return "Vehicle";
    case ClassId::pedestrian: return "Pedestrian";
    case ClassId::cyclist: return "Cyclist";
    case ClassId::discard_large: return "DiscardLarge";
  }
  fail(ErrorKind::validity, "invalid class id");
}

ClassId class_from_string(const std::string& s) {
  if (s == "DiscardSmall") return ClassId::discard_small;
  if (s == "Vehicle") return ClassId::vehicle;
  if (s == "Pedestrian") return ClassId::pedestrian;
  if (s == "Cyclist") return ClassId::cyclist;
  if (s == "DiscardLarge") return ClassId::discard_large;
  fail(ErrorKind::parse, "unknown class name '" + s + "'");
}

void validate_label(const Label& label) {
  validate_box(label.box);
  if (label.tau < 0)
    fail(ErrorKind::validity, "label tau must be non-negative");
  if (label.css && (!(*label.css >= 0.0) || !(*label.css <= 1.0)))
    fail(ErrorKind::validity, "label css must lie in [0,1]");
}

void validate_sequence(const Sequence& seq) {
  if (seq.frames.empty())
    fail(ErrorKind::validity, "sequence must contain at least one frame");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Frame& f = seq.frames[i];
    validate_pose(f.pose, 1e-6);
    validate_finite(f.points);
    if (i > 0) {
      if (f.index <= seq.frames[i - 1].index)
        fail(ErrorKind::validity, "frame indices must be strictly increasing");
      if (f.timestamp < seq.frames[i - 1].timestamp)
        fail(ErrorKind::validity, "frame timestamps must be non-decreasing");
    }
  }
}

PointCloud read_points_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open point file " + path.string());
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0);
  if (bytes % 16 != 0)
    fail(ErrorKind::parse, "truncated point file " + path.string() +
                               ": size " + std::to_string(bytes) +
                               " is not a multiple of 16 bytes");
  const std::size_t n = static_cast<std::size_t>(bytes) / 16;
  std::vector<float> raw(n * 4);
  if (n > 0 &&
      !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes)))
    fail(ErrorKind::io, "failed reading " + path.string());
  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    cloud.push_back({raw[4 * i], raw[4 * i + 1], raw[4 * i + 2], raw[4 * i + 3]});
  return cloud;
}

void write_points_bin(const PointCloud& cloud, const fs::path& path) {
  std::vector<float> raw(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    raw[4 * i] = static_cast<float>(cloud.x[i]);
    raw[4 * i + 1] = static_cast<float>(cloud.y[i]);
    raw[4 * i + 2] = static_cast<float>(cloud.z[i]);
    raw[4 * i + 3] = static_cast<float>(cloud.intensity[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

namespace {

json parse_json(const std::string& text, const fs::path& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, "malformed JSON in " + path.string() + " at byte " +
                               std::to_string(e.byte) + ": " + e.what());
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double require_number(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key) || !j[key].is_number())
    fail(ErrorKind::parse,
         "missing numeric field '" + std::string(key) + "' in " + path.string());
  return j[key].get<double>();
}

// Nearest orthonormal matrix with det +1.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

std::string frame_bin_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.bin", index);
  return buf;
}

}  // namespace

json read_json_file(const fs::path& path) {
  return parse_json(slurp(path), path);
}

void write_json_file(const json& j, const fs::path& path) {
  write_text_file(j.dump(2) + "\n", path);
}

void write_text_file(const std::string& text, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

Sequence read_sequence(const fs::path& manifest_path) {
  const json j = read_json_file(manifest_path);
  if (!j.contains("id") || !j["id"].is_string())
    fail(ErrorKind::parse, "manifest missing string 'id': " + manifest_path.string());
  if (!j.contains("frames") || !j["frames"].is_array())
    fail(ErrorKind::parse, "manifest missing 'frames' array: " + manifest_path.string());
  Sequence seq;
  seq.id = j["id"].get<std::string>();
  if (j["frames"].empty())
    fail(ErrorKind::validity, "manifest has an empty frame list: " + manifest_path.string());

  const fs::path dir = manifest_path.parent_path();
  for (const json& fj : j["frames"]) {
    Frame f;
    f.index = static_cast<int>(require_number(fj, "index", manifest_path));
    f.timestamp = require_number(fj, "timestamp", manifest_path);
    if (!fj.contains("pose") || !fj["pose"].is_array() || fj["pose"].size() != 12)
      fail(ErrorKind::parse, "frame " + std::to_string(f.index) +
                                 " needs a 12-element pose in " + manifest_path.string());
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col)
        r(row, col) = fj["pose"][4 * row + col].get<double>();
      t(row) = fj["pose"][4 * row + 3].get<double>();
    }
    const double drift =
        (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (drift > 1e-3 || r.determinant() < 0.0)
      fail(ErrorKind::validity, "frame " + std::to_string(f.index) +
                                    " pose is not a rotation (drift " +
                                    std::to_string(drift) + ")");
    if (drift > 1e-6) {
      log::warn("re-orthonormalizing pose of frame " + std::to_string(f.index) +
                " (drift " + std::to_string(drift) + ")");
      r = orthonormalize(r);
    }
    f.pose.rotation = r;
    f.pose.translation = t;
    if (!fj.contains("points") || !fj["points"].is_string())
      fail(ErrorKind::parse, "frame " + std::to_string(f.index) +
                                 " needs a 'points' path in " + manifest_path.string());
    f.points = read_points_bin(dir / fj["points"].get<std::string>());
    seq.frames.push_back(std::move(f));
  }
  std::sort(seq.frames.begin(), seq.frames.end(),
            [](const Frame& a, const Frame& b) { return a.index < b.index; });
  validate_sequence(seq);
  return seq;
}

void write_sequence(const Sequence& seq, const fs::path& manifest_path) {
  validate_sequence(seq);
  const fs::path dir = manifest_path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  json frames = json::array();
  for (const Frame& f : seq.frames) {
    const std::string bin = frame_bin_name(f.index);
    write_points_bin(f.points, dir / bin);
    json pose = json::array();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) pose.push_back(f.pose.rotation(row, col));
      pose.push_back(f.pose.translation(row));
    }
    frames.push_back({{"index", f.index},
                      {"timestamp", f.timestamp},
                      {"pose", pose},
                      {"points", bin}});
  }
  write_json_file({{"id", seq.id}, {"frames", frames}}, manifest_path);
}

namespace {

constexpr const char* kLabelFields[] = {"frame", "x", "y", "z", "l", "w",
                                        "h", "alpha", "beta", "tau", "css"};

json label_header() {
  json fields = json::array();
  for (const char* f : kLabelFields) fields.push_back(f);
  return {{"format", "cpl-labels"}, {"version", 1}, {"fields", fields}};
}

}  // namespace

std::vector<Label> read_labels(const fs::path& path) {
  const std::string text = slurp(path);
  std::vector<Label> labels;
  std::size_t line_start = 0;
  std::size_t line_no = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    const std::string line = text.substr(line_start, line_end - line_start);
    ++line_no;
    if (!line.empty()) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, "malformed record in " + path.string() +
                                   " at byte " +
                                   std::to_string(line_start + e.byte - 1));
      }
      if (line_no == 1) {
        if (!j.is_object() || j.value("format", "") != "cpl-labels")
          fail(ErrorKind::parse, "missing cpl-labels header in " + path.string());
      } else {
        Label l;
        l.frame_index = static_cast<int>(require_number(j, "frame", path));
        l.box.x = require_number(j, "x", path);
        l.box.y = require_number(j, "y", path);
        l.box.z = require_number(j, "z", path);
        l.box.l = require_number(j, "l", path);
        l.box.w = require_number(j, "w", path);
        l.box.h = require_number(j, "h", path);
        l.box.alpha = require_number(j, "alpha", path);
        if (!j.contains("beta") || !j["beta"].is_string())
          fail(ErrorKind::parse, "missing 'beta' in " + path.string() +
                                     " line " + std::to_string(line_no));
        l.beta = class_from_string(j["beta"].get<std::string>());
        l.tau = static_cast<std::int64_t>(require_number(j, "tau", path));
        if (!j.contains("css"))
          fail(ErrorKind::parse, "missing 'css' in " + path.string() +
                                     " line " + std::to_string(line_no));
        if (!j["css"].is_null()) l.css = j["css"].get<double>();
        validate_label(l);
        labels.push_back(l);
      }
    } else if (line_no == 1) {
      fail(ErrorKind::parse, "missing cpl-labels header in " + path.string());
    }
    line_start = line_end + 1;
  }
  if (line_no == 0)
    fail(ErrorKind::parse, "missing cpl-labels header in " + path.string());
  return labels;
}

void write_labels(const std::vector<Label>& labels, const fs::path& path) {
  std::ostringstream out;
  out << label_header().dump() << "\n";
  for (const Label& l : labels) {
    validate_label(l);
    json j{{"frame", l.frame_index}, {"x", l.box.x},     {"y", l.box.y},
           {"z", l.box.z},           {"l", l.box.l},     {"w", l.box.w},
           {"h", l.box.h},           {"alpha", l.box.alpha},
           {"beta", to_string(l.beta)}, {"tau", l.tau}};
    j["css"] = l.css ? json(*l.css) : json(nullptr);
    out << j.dump() << "\n";
  }
  write_text_file(out.str(), path);
}

namespace {

std::string numbered_bin(const char* stem, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%06zu.bin", stem, i);
  return buf;
}

}  // namespace

std::vector<PointCloud> read_label_clouds(const fs::path& dir) {
  const json j = read_json_file(dir / "clusters.json");
  if (j.value("format", "") != "cpl-clusters")
    fail(ErrorKind::parse, "missing cpl-clusters index in " + dir.string());
  std::vector<PointCloud> clouds;
  for (const json& f : j.at("files"))
    clouds.push_back(read_points_bin(dir / f.get<std::string>()));
  return clouds;
}

void write_label_clouds(const std::vector<PointCloud>& clouds,
                        const fs::path& dir) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const std::string name = numbered_bin("cluster", i);
    write_points_bin(clouds[i], dir / name);
    files.push_back(name);
  }
  write_json_file({{"format", "cpl-clusters"},
                   {"version", 1},
                   {"count", clouds.size()},
                   {"files", files}},
                  dir / "clusters.json");
}

std::vector<CProto> read_cprotos(const fs::path& dir) {
  const json j = read_json_file(dir / "index.json");
  if (j.value("format", "") != "cpl-cprotos")
    fail(ErrorKind::parse, "missing cpl-cprotos index in " + dir.string());
  std::vector<CProto> protos;
  for (const json& pj : j.at("protos")) {
    CProto p;
    p.box.l = require_number(pj, "l", dir / "index.json");
    p.box.w = require_number(pj, "w", dir / "index.json");
    p.box.h = require_number(pj, "h", dir / "index.json");
    validate_box(p.box);
    p.beta = class_from_string(pj.at("class").get<std::string>());
    p.source_tau =
        static_cast<std::int64_t>(require_number(pj, "tau", dir / "index.json"));
    p.points = read_points_bin(dir / pj.at("points").get<std::string>());
    protos.push_back(std::move(p));
  }
  return protos;
}

void write_cprotos(const std::vector<CProto>& protos, const fs::path& dir) {
  fs::create_directories(dir);
  json index = json::array();
  for (std::size_t i = 0; i < protos.size(); ++i) {
    const CProto& p = protos[i];
    const std::string name = numbered_bin("cproto", i);
    write_points_bin(p.points, dir / name);
    index.push_back({{"class", to_string(p.beta)},
                     {"tau", p.source_tau},
                     {"l", p.box.l},
                     {"w", p.box.w},
                     {"h", p.box.h},
                     {"points", name}});
  }
  write_json_file(
      {{"format", "cpl-cprotos"}, {"version", 1}, {"protos", index}},
      dir / "index.json");
}

}  // namespace cpl
