#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "cpl/geometry.hpp"

namespace cpl {

// Uniform hash grid over a point cloud for fixed-radius neighbor queries.
// Points are copied into cell-sorted SoA arrays so each query runs the SIMD
// kernels over a few contiguous slices.
class PointGrid {
 public:
  PointGrid() = default;
  PointGrid(const PointCloud& cloud, double cell_size);

  std::size_t size() const { return x_.size(); }

  bool any_within(double qx, double qy, double qz, double radius) const;

  // Appends indices into the original cloud, in cell-scan order.
  void collect_within(double qx, double qy, double qz, double radius,
                      std::vector<std::uint32_t>& out) const;

 private:
  std::uint64_t cell_key(std::int64_t cx, std::int64_t cy,
                         std::int64_t cz) const;

  double cell_ = 1.0;
  double origin_[3] = {0.0, 0.0, 0.0};
  std::vector<double> x_, y_, z_;
  std::vector<std::uint32_t> index_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>>
      cells_;
};

}  // namespace cpl
