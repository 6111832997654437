#pragma once

#include <cstddef>
#include <vector>

#include "cpl/cproto.hpp"
#include "cpl/scene.hpp"

namespace cpl {

struct CbrConfig {
  int bins_per_meter = 4;              // BEV occupancy histogram resolution
  int min_points_for_relocalization = 5;
  bool class_restricted = true;        // prefer prototypes of the same class
  double yaw_step_deg = 0.5;           // grid step for the yaw re-fit
};

void validate_cbr_config(const CbrConfig& cfg);

// Index of the prototype with the closest height. Same-class prototypes are
// preferred when any exist (and required when class_restricted drives
// refine_labels); ties go to the lowest index. Empty set is a config error.
std::size_t associate_cproto(const Label& label,
                             const std::vector<CProto>& protos,
                             bool class_restricted);

// Replaces l, w, h with the prototype's sizes; pose and class are untouched.
Label resize_to_cproto(const Label& label, const CProto& proto);

// Re-fits yaw from the cluster points and snaps each ego-near box face to the
// extremal point of the densest occupancy column along that axis. Returns the
// input unchanged when the cluster is too small or the implied move exceeds
// half the BEV diagonal; `applied` reports whether the box moved.
Label relocalize(const Label& label, const PointCloud& cluster,
                 const CbrConfig& cfg, bool* applied = nullptr);

struct CbrStats {
  std::size_t refined = 0;
  std::size_t passed_through = 0;        // no usable prototype
  std::size_t relocalization_skipped = 0;
};

// Resize + relocalize every label against its associated prototype. Labels
// without a same-class prototype (when class_restricted) pass through
// unchanged; clusters align with labels by index.
std::vector<Label> refine_labels(const std::vector<Label>& labels,
                                 const std::vector<PointCloud>& clouds,
                                 const std::vector<CProto>& protos,
                                 const CbrConfig& cfg,
                                 CbrStats* stats = nullptr);

}  // namespace cpl
