#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpl/geometry.hpp"

namespace cpl {

enum class ClassId {
  discard_small,
  vehicle,
  pedestrian,
  cyclist,
  discard_large,
};

const char* to_string(ClassId c);
ClassId class_from_string(const std::string& s);

// One pseudo-label (or ground-truth annotation): a box plus class identity
// beta, track identity tau, optional quality score, and its frame.
struct Label {
  Box3D box;
  ClassId beta = ClassId::vehicle;
  std::int64_t tau = 0;
  std::optional<double> css;
  int frame_index = 0;
};

void validate_label(const Label& label);

struct Frame {
  int index = 0;
  double timestamp = 0.0;
  Pose pose;          // ego-to-global
  PointCloud points;  // ego coordinates
};

struct Sequence {
  std::string id;
  std::vector<Frame> frames;
};

// At least one frame, strictly increasing indices, non-decreasing timestamps,
// valid poses, finite points.
void validate_sequence(const Sequence& seq);

}  // namespace cpl
