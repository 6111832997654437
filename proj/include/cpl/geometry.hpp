#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

namespace cpl {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
};

// Structure-of-arrays point storage; the coordinate arrays feed the SIMD
// kernels directly.
struct PointCloud {
  std::vector<double> x, y, z, intensity;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }

  void reserve(std::size_t n);
  void resize(std::size_t n);
  void clear();
  void push_back(const Point& p);
  void append(const PointCloud& other);

  Point point(std::size_t i) const { return {x[i], y[i], z[i], intensity[i]}; }
};

// Throws a validity error naming the first offending index if any coordinate
// is NaN or infinite.
void validate_finite(const PointCloud& cloud);

// Rigid transform mapping p -> rotation * p + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, double tx = 0.0, double ty = 0.0,
                       double tz = 0.0);
};

// Throws a validity error unless rotation is orthonormal with det +1
// within tol.
void validate_pose(const Pose& pose, double tol = 1e-9);

// compose(a, b) applies b first: p -> a(b(p)).
Pose compose(const Pose& a, const Pose& b);
Pose invert_pose(const Pose& pose);

Point apply_pose(const Pose& pose, const Point& p);
PointCloud transform_points(const PointCloud& points, const Pose& pose);

// Upright 3D box: center (x,y,z), extents (l,w,h), yaw alpha about z
// measured from +x toward +y.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double l = 0.0, w = 0.0, h = 0.0;
  double alpha = 0.0;

  double bottom() const { return z - 0.5 * h; }
  double top() const { return z + 0.5 * h; }
};

// Wraps an angle into [-pi, pi).
double normalize_angle(double a);

// Throws a validity error on non-positive dimensions or non-finite fields.
void validate_box(const Box3D& box);

// Bottom face counter-clockwise starting in the +l/+w quadrant, then the top
// face in the same order. Corner intensities are 0.
std::array<Point, 8> box_corners(const Box3D& box);

// Rotated-rectangle footprint IoU (convex polygon clipping).
double bev_iou(const Box3D& a, const Box3D& b);

// BEV intersection area scaled by vertical overlap, over the volume union.
double iou_3d(const Box3D& a, const Box3D& b);

enum class IouMode { bev, volume };

inline double box_iou(const Box3D& a, const Box3D& b, IouMode mode) {
  return mode == IouMode::bev ? bev_iou(a, b) : iou_3d(a, b);
}

}  // namespace cpl
