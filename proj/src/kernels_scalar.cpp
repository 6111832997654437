#include <algorithm>
#include <cmath>

#include "cpl/kernels.hpp"

namespace cpl::kern {

namespace scalar {

void apply_rigid(const double* x, const double* y, const double* z,
                 std::size_t n, const double r[9], const double t[3],
                 double* ox, double* oy, double* oz) {
  for (std::size_t i = 0; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = r[0] * px + r[1] * py + r[2] * pz + t[0];
    oy[i] = r[3] * px + r[4] * py + r[5] * pz + t[1];
    oz[i] = r[6] * px + r[7] * py + r[8] * pz + t[2];
  }
}

bool any_within(const double* x, const double* y, const double* z,
                std::size_t n, double qx, double qy, double qz, double r2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - qx, dy = y[i] - qy, dz = z[i] - qz;
    if (dx * dx + dy * dy + dz * dz <= r2) return true;
  }
  return false;
}

void collect_within(const double* x, const double* y, const double* z,
                    std::size_t n, double qx, double qy, double qz, double r2,
                    std::uint32_t base, std::vector<std::uint32_t>& out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - qx, dy = y[i] - qy, dz = z[i] - qz;
    if (dx * dx + dy * dy + dz * dz <= r2)
      out.push_back(base + static_cast<std::uint32_t>(i));
  }
}

void rotated_bounds(const double* x, const double* y, std::size_t n, double c,
                    double s, double out[4]) {
  double umin = HUGE_VAL, umax = -HUGE_VAL;
  double vmin = HUGE_VAL, vmax = -HUGE_VAL;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] * c + y[i] * s;
    const double v = -x[i] * s + y[i] * c;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  out[0] = umin;
  out[1] = umax;
  out[2] = vmin;
  out[3] = vmax;
}

double edge_closeness(const double* x, const double* y, std::size_t n,
                      double c, double s, const double bounds[4]) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] * c + y[i] * s;
    const double v = -x[i] * s + y[i] * c;
    const double du = std::min(u - bounds[0], bounds[1] - u);
    const double dv = std::min(v - bounds[2], bounds[3] - v);
    acc += std::min(du, dv);
  }
  return acc;
}

std::size_t count_near_plane(const double* x, const double* y, const double* z,
                             std::size_t n, double nx, double ny, double nz,
                             double d, double tol) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = nx * x[i] + ny * y[i] + nz * z[i] + d;
    if (std::fabs(dist) <= tol) ++count;
  }
  return count;
}

void collect_near_plane(const double* x, const double* y, const double* z,
                        std::size_t n, double nx, double ny, double nz,
                        double d, double tol, std::vector<std::uint32_t>& out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = nx * x[i] + ny * y[i] + nz * z[i] + d;
    if (std::fabs(dist) <= tol) out.push_back(static_cast<std::uint32_t>(i));
  }
}

}  // namespace scalar

const Ops& scalar_ops() {
  static const Ops table = {
      scalar::apply_rigid,     scalar::any_within,
      scalar::collect_within,  scalar::rotated_bounds,
      scalar::edge_closeness,  scalar::count_near_plane,
      scalar::collect_near_plane,
  };
  return table;
}

}  // namespace cpl::kern
