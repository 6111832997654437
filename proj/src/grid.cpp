#include "cpl/grid.hpp"

#include <algorithm>
#include <cmath>

#include "cpl/error.hpp"
#include "cpl/kernels.hpp"

namespace cpl {

namespace {

constexpr std::int64_t kAxisBits = 21;
constexpr std::int64_t kAxisMax = (std::int64_t{1} << kAxisBits) - 1;

}  // namespace

PointGrid::PointGrid(const PointCloud& cloud, double cell_size) {
  if (!(cell_size > 0.0))
    fail(ErrorKind::config, "grid cell size must be positive");
  cell_ = cell_size;
  const std::size_t n = cloud.size();
  if (n == 0) return;

  origin_[0] = *std::min_element(cloud.x.begin(), cloud.x.end());
  origin_[1] = *std::min_element(cloud.y.begin(), cloud.y.end());
  origin_[2] = *std::min_element(cloud.z.begin(), cloud.z.end());

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cx =
        static_cast<std::int64_t>(std::floor((cloud.x[i] - origin_[0]) / cell_));
    const auto cy =
        static_cast<std::int64_t>(std::floor((cloud.y[i] - origin_[1]) / cell_));
    const auto cz =
        static_cast<std::int64_t>(std::floor((cloud.z[i] - origin_[2]) / cell_));
    if (cx > kAxisMax || cy > kAxisMax || cz > kAxisMax)
      fail(ErrorKind::validity, "point cloud extent exceeds grid capacity");
    keyed[i] = {cell_key(cx, cy, cz), static_cast<std::uint32_t>(i)};
  }
  std::sort(keyed.begin(), keyed.end());

  x_.resize(n);
  y_.resize(n);
  z_.resize(n);
  index_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t src = keyed[i].second;
    x_[i] = cloud.x[src];
    y_[i] = cloud.y[src];
    z_[i] = cloud.z[src];
    index_[i] = src;
  }
  cells_.reserve(n);
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || keyed[i].first != keyed[begin].first) {
      cells_.emplace(keyed[begin].first,
                     std::make_pair(static_cast<std::uint32_t>(begin),
                                    static_cast<std::uint32_t>(i)));
      begin = i;
    }
  }
}

std::uint64_t PointGrid::cell_key(std::int64_t cx, std::int64_t cy,
                                  std::int64_t cz) const {
  return (static_cast<std::uint64_t>(cx) << (2 * kAxisBits)) |
         (static_cast<std::uint64_t>(cy) << kAxisBits) |
         static_cast<std::uint64_t>(cz);
}

bool PointGrid::any_within(double qx, double qy, double qz,
                           double radius) const {
  if (x_.empty()) return false;
  const double r2 = radius * radius;
  std::int64_t lo[3], hi[3];
  const double q[3] = {qx, qy, qz};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<std::int64_t>(
        std::floor((q[a] - radius - origin_[a]) / cell_));
    hi[a] = static_cast<std::int64_t>(
        std::floor((q[a] + radius - origin_[a]) / cell_));
    if (hi[a] < 0 || lo[a] > kAxisMax) return false;
    lo[a] = std::max<std::int64_t>(lo[a], 0);
    hi[a] = std::min<std::int64_t>(hi[a], kAxisMax);
  }
  const auto& k = kern::ops();
  for (std::int64_t cx = lo[0]; cx <= hi[0]; ++cx)
    for (std::int64_t cy = lo[1]; cy <= hi[1]; ++cy)
      for (std::int64_t cz = lo[2]; cz <= hi[2]; ++cz) {
        const auto it = cells_.find(cell_key(cx, cy, cz));
        if (it == cells_.end()) continue;
        const auto [b, e] = it->second;
        if (k.any_within(x_.data() + b, y_.data() + b, z_.data() + b, e - b,
                         qx, qy, qz, r2))
          return true;
      }
  return false;
}

void PointGrid::collect_within(double qx, double qy, double qz, double radius,
                               std::vector<std::uint32_t>& out) const {
  if (x_.empty()) return;
  const double r2 = radius * radius;
  std::int64_t lo[3], hi[3];
  const double q[3] = {qx, qy, qz};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<std::int64_t>(
        std::floor((q[a] - radius - origin_[a]) / cell_));
    hi[a] = static_cast<std::int64_t>(
        std::floor((q[a] + radius - origin_[a]) / cell_));
    if (hi[a] < 0 || lo[a] > kAxisMax) return;
    lo[a] = std::max<std::int64_t>(lo[a], 0);
    hi[a] = std::min<std::int64_t>(hi[a], kAxisMax);
  }
  const auto& k = kern::ops();
  for (std::int64_t cx = lo[0]; cx <= hi[0]; ++cx)
    for (std::int64_t cy = lo[1]; cy <= hi[1]; ++cy)
      for (std::int64_t cz = lo[2]; cz <= hi[2]; ++cz) {
        const auto it = cells_.find(cell_key(cx, cy, cz));
        if (it == cells_.end()) continue;
        const auto [b, e] = it->second;
        const std::size_t before = out.size();
        k.collect_within(x_.data() + b, y_.data() + b, z_.data() + b, e - b,
                         qx, qy, qz, r2, b, out);
        // The kernel reports positions in the cell-sorted arrays; map them
        // back to original-cloud indices.
        for (std::size_t i = before; i < out.size(); ++i)
          out[i] = index_[out[i]];
      }
}

}  // namespace cpl
