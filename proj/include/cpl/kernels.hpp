#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cpl::kern {

// Data-parallel inner loops shared by the point pipeline. Every entry has a
// scalar reference implementation plus an AVX2 variant; the table below is
// filled in once at startup based on cpuid. All kernels operate on SoA
// double arrays so the hot loops stay branch-free and vectorizable.
struct Ops {
  // out = R * p + t for n points. R is row-major 3x3.
  void (*apply_rigid)(const double* x, const double* y, const double* z,
                      std::size_t n, const double r[9], const double t[3],
                      double* ox, double* oy, double* oz);

  // True if any point lies within squared distance r2 of (qx,qy,qz).
  bool (*any_within)(const double* x, const double* y, const double* z,
                     std::size_t n, double qx, double qy, double qz,
                     double r2);

  // Appends base+i for every point i within squared distance r2 of the query.
  void (*collect_within)(const double* x, const double* y, const double* z,
                         std::size_t n, double qx, double qy, double qz,
                         double r2, std::uint32_t base,
                         std::vector<std::uint32_t>& out);

  // BEV bounds after rotating by -theta: u = x*c + y*s, v = -x*s + y*c.
  // out = {umin, umax, vmin, vmax}. n must be > 0.
  void (*rotated_bounds)(const double* x, const double* y, std::size_t n,
                         double c, double s, double out[4]);

  // Sum over points of the distance to the nearest edge of the rotated
  // rectangle described by bounds (same u/v convention as rotated_bounds).
  double (*edge_closeness)(const double* x, const double* y, std::size_t n,
                           double c, double s, const double bounds[4]);

  // Count of points with |nx*x + ny*y + nz*z + d| <= tol.
  std::size_t (*count_near_plane)(const double* x, const double* y,
                                  const double* z, std::size_t n, double nx,
                                  double ny, double nz, double d, double tol);

  // Appends indices of points with |nx*x + ny*y + nz*z + d| <= tol.
  void (*collect_near_plane)(const double* x, const double* y, const double* z,
                             std::size_t n, double nx, double ny, double nz,
                             double d, double tol,
                             std::vector<std::uint32_t>& out);
};

enum class Backend { scalar, avx2 };

// The active kernel table. Auto-selects the widest supported backend on
// first use; honors CPL_KERNEL=scalar|avx2 if set.
const Ops& ops();

Backend active_backend();
bool backend_available(Backend b);
// Forces a backend (used by equivalence tests and golden-file capture).
// Throws cpl::Error{config} if the backend is not available on this machine.
void set_backend(Backend b);

const Ops& scalar_ops();

}  // namespace cpl::kern
