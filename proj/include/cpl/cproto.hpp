#pragma once

#include <cstdint>
#include <vector>

#include "cpl/scene.hpp"

namespace cpl {

// Per-track prototype: averaged high-quality box plus the concatenated
// cluster points, both in a local frame (box centered at origin, alpha = 0,
// denser/leading face toward +x).
struct CProto {
  Box3D box;
  PointCloud points;
  std::int64_t source_tau = 0;
  ClassId beta = ClassId::vehicle;
};

struct CProtoConfig {
  double eta = 0.8;           // CSS score admission threshold
  double trim_margin = 0.3;   // drop points farther than this outside the box
  double mover_min_step = 0.05;  // mean per-frame BEV travel to call a mover
};

void validate_cproto_config(const CProtoConfig& cfg);

struct CProtoStats {
  std::size_t tracks_total = 0;
  std::size_t tracks_skipped = 0;  // no label met eta
  std::size_t points_trimmed = 0;
};

// Groups labels by tau, keeps those with css >= eta, averages their sizes,
// and concatenates their cluster points in the canonical local frame.
// `ego_to_global` supplies each frame's pose so motion direction and point
// canonicalization happen in the global frame; labels and clouds are in
// their frame's ego coordinates and aligned by index.
std::vector<CProto> build_cproto_set(
    const std::vector<Label>& labels, const std::vector<PointCloud>& clouds,
    const std::vector<Pose>& ego_to_global, const CProtoConfig& cfg,
    CProtoStats* stats = nullptr);

}  // namespace cpl
