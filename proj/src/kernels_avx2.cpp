// AVX2/FMA variants of the point kernels. This TU is the only one compiled
// with -mavx2; callers reach it through the dispatch table in kernels.cpp.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "cpl/kernels.hpp"

namespace cpl::kern {

namespace avx2 {

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  lo = _mm_min_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  lo = _mm_max_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

void apply_rigid(const double* x, const double* y, const double* z,
                 std::size_t n, const double r[9], const double t[3],
                 double* ox, double* oy, double* oz) {
  const __m256d r00 = _mm256_set1_pd(r[0]), r01 = _mm256_set1_pd(r[1]),
                r02 = _mm256_set1_pd(r[2]);
  const __m256d r10 = _mm256_set1_pd(r[3]), r11 = _mm256_set1_pd(r[4]),
                r12 = _mm256_set1_pd(r[5]);
  const __m256d r20 = _mm256_set1_pd(r[6]), r21 = _mm256_set1_pd(r[7]),
                r22 = _mm256_set1_pd(r[8]);
  const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]),
                t2 = _mm256_set1_pd(t[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_loadu_pd(x + i);
    const __m256d py = _mm256_loadu_pd(y + i);
    const __m256d pz = _mm256_loadu_pd(z + i);
    __m256d a = _mm256_fmadd_pd(r00, px, t0);
    a = _mm256_fmadd_pd(r01, py, a);
    a = _mm256_fmadd_pd(r02, pz, a);
    __m256d b = _mm256_fmadd_pd(r10, px, t1);
    b = _mm256_fmadd_pd(r11, py, b);
    b = _mm256_fmadd_pd(r12, pz, b);
    __m256d c = _mm256_fmadd_pd(r20, px, t2);
    c = _mm256_fmadd_pd(r21, py, c);
    c = _mm256_fmadd_pd(r22, pz, c);
    _mm256_storeu_pd(ox + i, a);
    _mm256_storeu_pd(oy + i, b);
    _mm256_storeu_pd(oz + i, c);
  }
  for (; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = r[0] * px + r[1] * py + r[2] * pz + t[0];
    oy[i] = r[3] * px + r[4] * py + r[5] * pz + t[1];
    oz[i] = r[6] * px + r[7] * py + r[8] * pz + t[2];
  }
}

inline __m256d dist2(__m256d px, __m256d py, __m256d pz, __m256d qx,
                     __m256d qy, __m256d qz) {
  const __m256d dx = _mm256_sub_pd(px, qx);
  const __m256d dy = _mm256_sub_pd(py, qy);
  const __m256d dz = _mm256_sub_pd(pz, qz);
  __m256d d = _mm256_mul_pd(dx, dx);
  d = _mm256_fmadd_pd(dy, dy, d);
  d = _mm256_fmadd_pd(dz, dz, d);
  return d;
}

bool any_within(const double* x, const double* y, const double* z,
                std::size_t n, double qx, double qy, double qz, double r2) {
  const __m256d vqx = _mm256_set1_pd(qx), vqy = _mm256_set1_pd(qy),
                vqz = _mm256_set1_pd(qz), vr2 = _mm256_set1_pd(r2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = dist2(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                            _mm256_loadu_pd(z + i), vqx, vqy, vqz);
    const __m256d mask = _mm256_cmp_pd(d, vr2, _CMP_LE_OQ);
    if (_mm256_movemask_pd(mask) != 0) return true;
  }
  for (; i < n; ++i) {
    const double dx = x[i] - qx, dy = y[i] - qy, dz = z[i] - qz;
    if (dx * dx + dy * dy + dz * dz <= r2) return true;
  }
  return false;
}

void collect_within(const double* x, const double* y, const double* z,
                    std::size_t n, double qx, double qy, double qz, double r2,
                    std::uint32_t base, std::vector<std::uint32_t>& out) {
  const __m256d vqx = _mm256_set1_pd(qx), vqy = _mm256_set1_pd(qy),
                vqz = _mm256_set1_pd(qz), vr2 = _mm256_set1_pd(r2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = dist2(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                            _mm256_loadu_pd(z + i), vqx, vqy, vqz);
    int mask = _mm256_movemask_pd(_mm256_cmp_pd(d, vr2, _CMP_LE_OQ));
    while (mask) {
      const int lane = __builtin_ctz(mask);
      out.push_back(base + static_cast<std::uint32_t>(i + lane));
      mask &= mask - 1;
    }
  }
  for (; i < n; ++i) {
    const double dx = x[i] - qx, dy = y[i] - qy, dz = z[i] - qz;
    if (dx * dx + dy * dy + dz * dz <= r2)
      out.push_back(base + static_cast<std::uint32_t>(i));
  }
}

void rotated_bounds(const double* x, const double* y, std::size_t n, double c,
                    double s, double out[4]) {
  const __m256d vc = _mm256_set1_pd(c), vs = _mm256_set1_pd(s);
  __m256d umin = _mm256_set1_pd(HUGE_VAL), umax = _mm256_set1_pd(-HUGE_VAL);
  __m256d vmin = umin, vmax = umax;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_loadu_pd(x + i);
    const __m256d py = _mm256_loadu_pd(y + i);
    const __m256d u = _mm256_fmadd_pd(px, vc, _mm256_mul_pd(py, vs));
    const __m256d v = _mm256_fnmadd_pd(px, vs, _mm256_mul_pd(py, vc));
    umin = _mm256_min_pd(umin, u);
    umax = _mm256_max_pd(umax, u);
    vmin = _mm256_min_pd(vmin, v);
    vmax = _mm256_max_pd(vmax, v);
  }
  double b0 = hmin(umin), b1 = hmax(umax), b2 = hmin(vmin), b3 = hmax(vmax);
  for (; i < n; ++i) {
    const double u = x[i] * c + y[i] * s;
    const double v = -x[i] * s + y[i] * c;
    b0 = std::min(b0, u);
    b1 = std::max(b1, u);
    b2 = std::min(b2, v);
    b3 = std::max(b3, v);
  }
  out[0] = b0;
  out[1] = b1;
  out[2] = b2;
  out[3] = b3;
}

double edge_closeness(const double* x, const double* y, std::size_t n,
                      double c, double s, const double bounds[4]) {
  const __m256d vc = _mm256_set1_pd(c), vs = _mm256_set1_pd(s);
  const __m256d umin = _mm256_set1_pd(bounds[0]),
                umax = _mm256_set1_pd(bounds[1]),
                vmin = _mm256_set1_pd(bounds[2]),
                vmax = _mm256_set1_pd(bounds[3]);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_loadu_pd(x + i);
    const __m256d py = _mm256_loadu_pd(y + i);
    const __m256d u = _mm256_fmadd_pd(px, vc, _mm256_mul_pd(py, vs));
    const __m256d v = _mm256_fnmadd_pd(px, vs, _mm256_mul_pd(py, vc));
    const __m256d du =
        _mm256_min_pd(_mm256_sub_pd(u, umin), _mm256_sub_pd(umax, u));
    const __m256d dv =
        _mm256_min_pd(_mm256_sub_pd(v, vmin), _mm256_sub_pd(vmax, v));
    acc = _mm256_add_pd(acc, _mm256_min_pd(du, dv));
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double u = x[i] * c + y[i] * s;
    const double v = -x[i] * s + y[i] * c;
    const double du = std::min(u - bounds[0], bounds[1] - u);
    const double dv = std::min(v - bounds[2], bounds[3] - v);
    total += std::min(du, dv);
  }
  return total;
}

std::size_t count_near_plane(const double* x, const double* y, const double* z,
                             std::size_t n, double nx, double ny, double nz,
                             double d, double tol) {
  const __m256d vnx = _mm256_set1_pd(nx), vny = _mm256_set1_pd(ny),
                vnz = _mm256_set1_pd(nz), vd = _mm256_set1_pd(d),
                vtol = _mm256_set1_pd(tol);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d dist = _mm256_fmadd_pd(vnx, _mm256_loadu_pd(x + i), vd);
    dist = _mm256_fmadd_pd(vny, _mm256_loadu_pd(y + i), dist);
    dist = _mm256_fmadd_pd(vnz, _mm256_loadu_pd(z + i), dist);
    dist = _mm256_and_pd(dist, abs_mask);
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(dist, vtol, _CMP_LE_OQ));
    count += static_cast<std::size_t>(__builtin_popcount(mask));
  }
  for (; i < n; ++i) {
    const double dist = nx * x[i] + ny * y[i] + nz * z[i] + d;
    if (std::fabs(dist) <= tol) ++count;
  }
  return count;
}

void collect_near_plane(const double* x, const double* y, const double* z,
                        std::size_t n, double nx, double ny, double nz,
                        double d, double tol, std::vector<std::uint32_t>& out) {
  const __m256d vnx = _mm256_set1_pd(nx), vny = _mm256_set1_pd(ny),
                vnz = _mm256_set1_pd(nz), vd = _mm256_set1_pd(d),
                vtol = _mm256_set1_pd(tol);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d dist = _mm256_fmadd_pd(vnx, _mm256_loadu_pd(x + i), vd);
    dist = _mm256_fmadd_pd(vny, _mm256_loadu_pd(y + i), dist);
    dist = _mm256_fmadd_pd(vnz, _mm256_loadu_pd(z + i), dist);
    dist = _mm256_and_pd(dist, abs_mask);
    int mask = _mm256_movemask_pd(_mm256_cmp_pd(dist, vtol, _CMP_LE_OQ));
    while (mask) {
      const int lane = __builtin_ctz(mask);
      out.push_back(static_cast<std::uint32_t>(i + lane));
      mask &= mask - 1;
    }
  }
  for (; i < n; ++i) {
    const double dist = nx * x[i] + ny * y[i] + nz * z[i] + d;
    if (std::fabs(dist) <= tol) out.push_back(static_cast<std::uint32_t>(i));
  }
}

}  // namespace avx2

const Ops& avx2_ops_impl() {
  static const Ops table = {
      avx2::apply_rigid,     avx2::any_within,
      avx2::collect_within,  avx2::rotated_bounds,
      avx2::edge_closeness,  avx2::count_near_plane,
      avx2::collect_near_plane,
  };
  return table;
}

}  // namespace cpl::kern

#endif  // __AVX2__ && __FMA__
