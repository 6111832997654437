#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cpl/grid.hpp"
#include "cpl/scene.hpp"

namespace cpl {

// One size rule: a box matches when every dimension lies in (lo, hi].
struct ClassRule {
  ClassId beta = ClassId::vehicle;
  double h_lo = -std::numeric_limits<double>::infinity();
  double h_hi = std::numeric_limits<double>::infinity();
  double w_lo = -std::numeric_limits<double>::infinity();
  double w_hi = std::numeric_limits<double>::infinity();
  double l_lo = -std::numeric_limits<double>::infinity();
  double l_hi = std::numeric_limits<double>::infinity();
};

// Narrowest class first so that specific rules are not shadowed by the wide
// vehicle intervals; anything unmatched is DiscardLarge.
std::vector<ClassRule> default_class_rules();

struct MfcConfig {
  int n = 5;  // past/future frames; window is 2n+1
  double ppscore_radius = 0.4;
  double ppscore_threshold = 0.5;

  double ground_tile = 20.0;
  // ~4.5 sigma of typical sensor noise: a 3-sigma band leaves a straggler
  // tail that attaches to nearby clusters and stretches enclosing box fits.
  double ground_inlier_dist = 0.09;
  int ground_ransac_iters = 200;
  std::uint64_t ground_ransac_seed = 1;
  double ground_normal_z_min = 0.8;

  double dbscan_eps = 0.7;
  int dbscan_min_pts = 5;
  int min_cluster_points = 5;

  double yaw_step_deg = 0.5;
  double min_extent = 0.1;

  std::vector<ClassRule> class_rules = default_class_rules();

  double track_iou_min = 0.1;
  int track_coast_frames = 2;
  IouMode track_iou_mode = IouMode::bev;
};

void validate_mfc_config(const MfcConfig& cfg);

// Per-frame global-coordinate clouds and neighbor grids, built once per
// sequence and shared by all center frames.
struct SequenceIndex {
  std::vector<PointCloud> global;
  std::vector<PointGrid> grids;
};

SequenceIndex build_sequence_index(const Sequence& seq, double grid_cell);

// Scores aligned with sequence.frames[f].points for f in [lo, hi].
struct PpScores {
  int lo = 0;
  int hi = -1;
  std::vector<std::vector<double>> per_frame;
};

PpScores compute_ppscore(const Sequence& seq, int center, int n, double radius);
PpScores compute_ppscore(const Sequence& seq, const SequenceIndex& index,
                         int center, int n, double radius);

// Multi-frame aggregate in the center frame's ego coordinates, tagged with
// each point's source frame position and index within that frame.
struct AggregatedCloud {
  PointCloud points;
  std::vector<int> source_frame;
  std::vector<std::uint32_t> source_index;
};

AggregatedCloud remove_motion_artifacts(const Sequence& seq, int center,
                                        const MfcConfig& cfg);
AggregatedCloud remove_motion_artifacts(const Sequence& seq,
                                        const SequenceIndex& index, int center,
                                        const MfcConfig& cfg);

AggregatedCloud remove_ground(const AggregatedCloud& cloud,
                              const MfcConfig& cfg);

// Standard DBSCAN on 3D Euclidean distance; returns one cluster id per point,
// -1 for noise. Neighborhoods include the point itself.
std::vector<int> cluster_dbscan(const PointCloud& points, double eps,
                                int min_pts);

// Yaw in [0, pi/2) minimizing the summed distance from each point to the
// nearest edge of the yaw-aligned bounding rectangle; 0.5-degree default grid.
double fit_yaw(const PointCloud& cluster, double step_deg);

// Minimal yaw-searched box around the cluster; alpha in [-pi/2, pi/2),
// l >= w, extents clamped to cfg.min_extent.
Box3D fit_box(const PointCloud& cluster, const MfcConfig& cfg);

ClassId classify_box(const Box3D& box, const std::vector<ClassRule>& rules);

struct Detection {
  Box3D box;  // global frame
  ClassId beta = ClassId::vehicle;
  PointCloud points;  // ego coordinates of the source frame
};

struct FrameDetections {
  int frame_index = 0;
  double ego_x = 0.0, ego_y = 0.0;  // sensor position, global frame
  std::vector<Detection> dets;
};

struct TrackEntry {
  int frame_index = 0;
  Box3D box;  // global frame
  double ego_x = 0.0, ego_y = 0.0;
  int source_det = -1;  // index into the frame's detection list
};

struct Track {
  std::int64_t tau = 0;
  ClassId beta = ClassId::vehicle;
  std::vector<TrackEntry> entries;  // strictly increasing frame_index
};

// Greedy frame-to-frame association by IoU against constant-velocity
// predictions. DiscardSmall detections may extend tracks but never start
// them; unmatched tracks coast up to track_coast_frames.
std::vector<Track> track_boxes(const std::vector<FrameDetections>& frames,
                               const MfcConfig& cfg);

// Replaces every box's size with the track's element-wise median (lower
// middle for even counts), keeping the ego-nearest face of each axis and the
// box bottom fixed. One label per (track, frame), sorted by (frame, tau);
// boxes stay in the global frame. `sources` (optional) receives the
// originating (track index, entry index) per label.
std::vector<Label> smooth_tracks(
    const std::vector<Track>& tracks,
    std::vector<std::pair<std::size_t, std::size_t>>* sources = nullptr);

struct MfcStats {
  std::size_t clusters_total = 0;
  std::size_t clusters_too_small = 0;
  std::size_t boxes_discard_large = 0;
  std::size_t tracks = 0;
  std::size_t labels = 0;
};

struct MfcResult {
  std::vector<Label> labels;         // ego coordinates of their frame
  std::vector<PointCloud> clusters;  // aligned with labels
  MfcStats stats;
};

// Full initial-label pass: aggregate, de-ground, cluster, fit, classify
// (DiscardLarge dropped), track, smooth.
MfcResult generate_initial_labels(const Sequence& seq, const MfcConfig& cfg);

}  // namespace cpl
