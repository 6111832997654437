#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "cpl/cproto.hpp"
#include "cpl/scene.hpp"

namespace cpl {

// Little-endian float32 (x, y, z, intensity) quadruples.
PointCloud read_points_bin(const std::filesystem::path& path);
void write_points_bin(const PointCloud& cloud,
                      const std::filesystem::path& path);

// JSON manifest (id, per-frame index/timestamp/pose/bin path) plus one bin
// file per frame, relative to the manifest's directory. Frames come back
// sorted by index; poses are re-orthonormalized when drift exceeds 1e-6 and
// rejected beyond 1e-3.
Sequence read_sequence(const std::filesystem::path& manifest_path);
void write_sequence(const Sequence& seq,
                    const std::filesystem::path& manifest_path);

// JSON Lines: one header line, then one object per label with keys
// frame, x, y, z, l, w, h, alpha, beta, tau, css (null when unscored).
std::vector<Label> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<Label>& labels,
                  const std::filesystem::path& path);

// Per-label cluster points: a directory with an index JSON plus one bin per
// label, aligned with the label file's record order.
std::vector<PointCloud> read_label_clouds(const std::filesystem::path& dir);
void write_label_clouds(const std::vector<PointCloud>& clouds,
                        const std::filesystem::path& dir);

// Prototype set: index JSON (class, tau, size triple, bin path) plus one bin
// of local-frame points per prototype.
std::vector<CProto> read_cprotos(const std::filesystem::path& dir);
void write_cprotos(const std::vector<CProto>& protos,
                   const std::filesystem::path& dir);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j,
                     const std::filesystem::path& path);
void write_text_file(const std::string& text,
                     const std::filesystem::path& path);

}  // namespace cpl
