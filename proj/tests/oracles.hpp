#pragma once

// Reference implementations kept deliberately independent of the library:
// plain O(n^2) loops, Monte-Carlo estimates, and textbook formulas. Tests
// compare library output against these, so nothing here may call into
// cpl internals beyond the public data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "cpl/geometry.hpp"

namespace oracle {

inline bool point_in_rect(double px, double py, const cpl::Box3D& b) {
  const double dx = px - b.x, dy = py - b.y;
  const double c = std::cos(b.alpha), s = std::sin(b.alpha);
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return std::abs(u) <= 0.5 * b.l && std::abs(v) <= 0.5 * b.w;
}

inline bool point_in_box(double px, double py, double pz, const cpl::Box3D& b) {
  return pz >= b.z - 0.5 * b.h && pz <= b.z + 0.5 * b.h &&
         point_in_rect(px, py, b);
}

// Monte-Carlo IoU over the shared axis-aligned bounding region. Standard
// error at 1e5 samples stays well under 0.005 for unit-scale boxes.
inline double mc_iou(const cpl::Box3D& a, const cpl::Box3D& b, bool bev,
                     std::size_t samples, std::uint64_t seed) {
  const double ra = 0.5 * std::hypot(a.l, a.w);
  const double rb = 0.5 * std::hypot(b.l, b.w);
  const double x0 = std::min(a.x - ra, b.x - rb), x1 = std::max(a.x + ra, b.x + rb);
  const double y0 = std::min(a.y - ra, b.y - rb), y1 = std::max(a.y + ra, b.y + rb);
  const double z0 = std::min(a.z - 0.5 * a.h, b.z - 0.5 * b.h);
  const double z1 = std::max(a.z + 0.5 * a.h, b.z + 0.5 * b.h);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1), uz(z0, z1);
  std::size_t na = 0, nb = 0, nab = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double px = ux(gen), py = uy(gen);
    bool ia, ib;
    if (bev) {
      ia = point_in_rect(px, py, a);
      ib = point_in_rect(px, py, b);
    } else {
      const double pz = uz(gen);
      ia = point_in_box(px, py, pz, a);
      ib = point_in_box(px, py, pz, b);
    }
    na += ia;
    nb += ib;
    nab += ia && ib;
  }
  const std::size_t uni = na + nb - nab;
  return uni == 0 ? 0.0 : static_cast<double>(nab) / static_cast<double>(uni);
}

// Plain quadratic DBSCAN. Returns per-point cluster ids (-1 noise) and the
// core flags; border assignment follows first-come order like the textbook
// algorithm, so comparisons should look at the core-point partition only.
struct DbscanRef {
  std::vector<int> labels;
  std::vector<bool> core;
};

inline DbscanRef dbscan_ref(const std::vector<double>& x,
                            const std::vector<double>& y,
                            const std::vector<double>& z, double eps,
                            int min_pts) {
  const std::size_t n = x.size();
  const double e2 = eps * eps;
  std::vector<std::vector<std::uint32_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j], dz = z[i] - z[j];
      if (dx * dx + dy * dy + dz * dz <= e2)
        nbr[i].push_back(static_cast<std::uint32_t>(j));
    }
  DbscanRef r;
  r.labels.assign(n, -1);
  r.core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i)
    r.core[i] = nbr[i].size() >= static_cast<std::size_t>(min_pts);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.core[i] || r.labels[i] != -1) continue;
    const int id = next++;
    std::vector<std::size_t> stack{i};
    r.labels[i] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      if (!r.core[p]) continue;
      for (std::uint32_t q : nbr[p])
        if (r.labels[q] == -1) {
          r.labels[q] = id;
          if (r.core[q]) stack.push_back(q);
        }
    }
  }
  return r;
}

// True when two labelings induce the same partition over the selected points.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b,
                           const std::vector<bool>& select) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!select[i]) continue;
    auto ita = ab.find(a[i]);
    if (ita == ab.end())
      ab[a[i]] = b[i];
    else if (ita->second != b[i])
      return false;
    auto itb = ba.find(b[i]);
    if (itb == ba.end())
      ba[b[i]] = a[i];
    else if (itb->second != a[i])
      return false;
  }
  return true;
}

// Pearson correlation of rank vectors, average ranks on ties.
inline std::vector<double> avg_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> ord(n);
  std::iota(ord.begin(), ord.end(), std::size_t{0});
  std::stable_sort(ord.begin(), ord.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[ord[j + 1]] == v[ord[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[ord[k]] = r;
    i = j + 1;
  }
  return rank;
}

inline double spearman_ref(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() < 2) return 0.0;
  const std::vector<double> ra = avg_ranks(a), rb = avg_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace oracle
