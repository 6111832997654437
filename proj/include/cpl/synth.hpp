#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cpl/scene.hpp"

namespace cpl {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Per-class (l, w, h) sampling intervals.
struct SizeRange {
  Interval l, w, h;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int num_frames = 11;
  double frame_dt = 0.1;   // seconds
  double ego_speed = 2.0;  // m/s along +x

  int vehicles = 4;
  int pedestrians = 2;
  int cyclists = 2;
  SizeRange vehicle_size = {{4.0, 5.4}, {1.7, 1.95}, {1.45, 1.8}};
  SizeRange pedestrian_size = {{0.35, 0.5}, {0.35, 0.5}, {1.6, 1.85}};
  SizeRange cyclist_size = {{1.6, 2.0}, {0.55, 0.8}, {1.5, 1.9}};
  Interval vehicle_speed = {3.0, 8.0};
  Interval pedestrian_speed = {0.8, 1.5};
  Interval cyclist_speed = {2.0, 5.0};

  double moving_fraction = 0.3;
  double point_density_at_10m = 60.0;   // points/m^2 on facing surfaces
  double ground_density_at_10m = 4.0;   // points/m^2 at 10 m
  double range_max = 80.0;
  double placement_min = 6.0;
  double placement_max = 45.0;
  double ground_radius = 50.0;
  double ground_inner = 3.0;  // closest sampled ground ring
  double ground_slope_deg = 0.0;
  double sensor_height = 1.8;
  double noise_sigma = 0.02;
  bool occlusion = true;
};

void validate_synth_config(const SynthConfig& cfg);

struct GtBox {
  Box3D box;  // global frame
  ClassId beta = ClassId::vehicle;
  int object_id = 0;
  bool is_moving = false;
};

struct GroundTruth {
  // Boxes per frame; object (l,w,h) constant across frames.
  std::vector<std::vector<GtBox>> frames;
  // Aligned with each frame's points: owning object id, -1 for ground.
  std::vector<std::vector<int>> point_object_ids;
};

// Deterministic cuboid scene: flat (optionally sloped) ground plus
// ray-visible object surfaces with 1/distance^2 density falloff.
std::pair<Sequence, GroundTruth> generate_scene(const SynthConfig& cfg);

// Ground truth as labels in each frame's ego coordinates (tau = object id).
std::vector<Label> ground_truth_labels(const Sequence& seq,
                                       const GroundTruth& gt);

}  // namespace cpl
