#include "cpl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpl/error.hpp"
#include "cpl/kernels.hpp"

namespace cpl {

void PointCloud::reserve(std::size_t n) {
  x.reserve(n);
  y.reserve(n);
  z.reserve(n);
  intensity.reserve(n);
}

void PointCloud::resize(std::size_t n) {
  x.resize(n);
  y.resize(n);
  z.resize(n);
  intensity.resize(n);
}

void PointCloud::clear() {
  x.clear();
  y.clear();
  z.clear();
  intensity.clear();
}

void PointCloud::push_back(const Point& p) {
  x.push_back(p.x);
  y.push_back(p.y);
  z.push_back(p.z);
  intensity.push_back(p.intensity);
}

void PointCloud::append(const PointCloud& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
  z.insert(z.end(), other.z.begin(), other.z.end());
  intensity.insert(intensity.end(), other.intensity.begin(),
                   other.intensity.end());
}

void validate_finite(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!std::isfinite(cloud.x[i]) || !std::isfinite(cloud.y[i]) ||
        !std::isfinite(cloud.z[i]))
      fail(ErrorKind::validity,
           "non-finite point coordinate at index " + std::to_string(i));
  }
}

Pose Pose::from_yaw(double yaw, double tx, double ty, double tz) {
  Pose p;
  const double c = std::cos(yaw), s = std::sin(yaw);
  p.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  p.translation = Eigen::Vector3d(tx, ty, tz);
  return p;
}

void validate_pose(const Pose& pose, double tol) {
  const Eigen::Matrix3d& r = pose.rotation;
  if (!r.allFinite() || !pose.translation.allFinite())
    fail(ErrorKind::validity, "pose contains non-finite values");
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > tol)
    fail(ErrorKind::validity, "pose rotation is not orthonormal (deviation " +
                                  std::to_string(ortho) + ")");
  if (std::abs(r.determinant() - 1.0) > tol)
    fail(ErrorKind::validity, "pose rotation determinant is not +1");
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert_pose(const Pose& pose) {
  Pose out;
  out.rotation = pose.rotation.transpose();
  out.translation = -(out.rotation * pose.translation);
  return out;
}

Point apply_pose(const Pose& pose, const Point& p) {
  const Eigen::Vector3d v =
      pose.rotation * Eigen::Vector3d(p.x, p.y, p.z) + pose.translation;
  return {v.x(), v.y(), v.z(), p.intensity};
}

PointCloud transform_points(const PointCloud& points, const Pose& pose) {
  validate_finite(points);
  double r[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[3 * i + j] = pose.rotation(i, j);
  const double t[3] = {pose.translation.x(), pose.translation.y(),
                       pose.translation.z()};
  PointCloud out;
  out.resize(points.size());
  out.intensity = points.intensity;
  kern::ops().apply_rigid(points.x.data(), points.y.data(), points.z.data(),
                          points.size(), r, t, out.x.data(), out.y.data(),
                          out.z.data());
  return out;
}

double normalize_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  double r = std::fmod(a + M_PI, two_pi);
  if (r < 0.0) r += two_pi;
  return r - M_PI;
}

void validate_box(const Box3D& box) {
  const bool finite = std::isfinite(box.x) && std::isfinite(box.y) &&
                      std::isfinite(box.z) && std::isfinite(box.l) &&
                      std::isfinite(box.w) && std::isfinite(box.h) &&
                      std::isfinite(box.alpha);
  if (!finite) fail(ErrorKind::validity, "box contains non-finite values");
  if (box.l <= 0.0 || box.w <= 0.0 || box.h <= 0.0)
    fail(ErrorKind::validity, "box dimensions must be positive");
}

std::array<Point, 8> box_corners(const Box3D& box) {
  const double hl = 0.5 * box.l, hw = 0.5 * box.w;
  const double c = std::cos(box.alpha), s = std::sin(box.alpha);
  // Counter-clockwise starting in the +l/+w quadrant.
  const double lu[4] = {hl, -hl, -hl, hl};
  const double lv[4] = {hw, hw, -hw, -hw};
  std::array<Point, 8> out;
  for (int face = 0; face < 2; ++face) {
    const double cz = face == 0 ? box.bottom() : box.top();
    for (int i = 0; i < 4; ++i) {
      out[4 * face + i] = {box.x + c * lu[i] - s * lv[i],
                           box.y + s * lu[i] + c * lv[i], cz, 0.0};
    }
  }
  return out;
}

namespace {

struct Vec2 {
  double x, y;
};

using Poly = std::vector<Vec2>;

void footprint(const Box3D& box, Vec2 out[4]) {
  const double hl = 0.5 * box.l, hw = 0.5 * box.w;
  const double c = std::cos(box.alpha), s = std::sin(box.alpha);
  const double lu[4] = {hl, -hl, -hl, hl};
  const double lv[4] = {hw, hw, -hw, -hw};
  for (int i = 0; i < 4; ++i)
    out[i] = {box.x + c * lu[i] - s * lv[i], box.y + s * lu[i] + c * lv[i]};
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Sutherland-Hodgman: clip `subject` against the half-plane left of edge
// (a, b) of a counter-clockwise clip polygon.
Poly clip_edge(const Poly& subject, const Vec2& a, const Vec2& b) {
  Poly out;
  out.reserve(subject.size() + 1);
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = subject[i];
    const Vec2& nxt = subject[(i + 1) % n];
    const double dc = cross(a, b, cur);
    const double dn = cross(a, b, nxt);
    if (dc >= 0.0) out.push_back(cur);
    if ((dc >= 0.0) != (dn >= 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

double polygon_area(const Poly& p) {
  double twice = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * twice;
}

double bev_intersection(const Box3D& a, const Box3D& b) {
  Vec2 ca[4], cb[4];
  footprint(a, ca);
  footprint(b, cb);
  Poly poly(ca, ca + 4);
  for (int i = 0; i < 4 && !poly.empty(); ++i)
    poly = clip_edge(poly, cb[i], cb[(i + 1) % 4]);
  if (poly.size() < 3) return 0.0;
  const double area = polygon_area(poly);
  // Clipping can leave sign noise on degenerate slivers.
  return area < 1e-12 ? 0.0 : area;
}

}  // namespace

double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.l * a.w + b.l * b.w - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double zo = std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom());
  if (zo <= 0.0) return 0.0;
  const double inter = bev_intersection(a, b) * zo;
  if (inter == 0.0) return 0.0;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace cpl
