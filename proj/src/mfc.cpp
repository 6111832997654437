#include "cpl/mfc.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "cpl/error.hpp"
#include "cpl/kernels.hpp"
#include "cpl/log.hpp"
#include "cpl/rng.hpp"

namespace cpl {

std::vector<ClassRule> default_class_rules() {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ClassRule> rules(4);
  rules[0] = {ClassId::discard_small, -inf, 0.8, -inf, inf, -inf, inf};
  rules[1] = {ClassId::pedestrian, 0.8, 2.3, 0.2, 1.0, 0.2, 1.0};
  rules[2] = {ClassId::cyclist, 1.4, 2.0, 0.5, 1.0, 1.0, 2.5};
  rules[3] = {ClassId::vehicle, 1.0, 3.0, 0.5, 3.0, 0.5, 8.0};
  return rules;
}

void validate_mfc_config(const MfcConfig& cfg) {
  if (cfg.n < 0) fail(ErrorKind::config, "mfc n must be >= 0");
  if (!(cfg.ppscore_radius > 0.0))
    fail(ErrorKind::config, "ppscore_radius must be positive");
  if (!(cfg.ppscore_threshold >= 0.0 && cfg.ppscore_threshold <= 1.0))
    fail(ErrorKind::config, "ppscore_threshold must lie in [0,1]");
  if (!(cfg.dbscan_eps > 0.0)) fail(ErrorKind::config, "dbscan_eps must be positive");
  if (cfg.dbscan_min_pts < 1) fail(ErrorKind::config, "dbscan_min_pts must be >= 1");
  if (cfg.min_cluster_points < 1)
    fail(ErrorKind::config, "min_cluster_points must be >= 1");
  if (!(cfg.ground_tile > 0.0) || !(cfg.ground_inlier_dist > 0.0) ||
      cfg.ground_ransac_iters < 1)
    fail(ErrorKind::config, "invalid ground-removal parameters");
  if (!(cfg.yaw_step_deg > 0.0 && cfg.yaw_step_deg <= 90.0))
    fail(ErrorKind::config, "yaw_step_deg must lie in (0,90]");
  if (!(cfg.min_extent > 0.0)) fail(ErrorKind::config, "min_extent must be positive");
  if (cfg.class_rules.empty()) fail(ErrorKind::config, "class_rules must be non-empty");
  if (!(cfg.track_iou_min >= 0.0 && cfg.track_iou_min <= 1.0))
    fail(ErrorKind::config, "track_iou_min must lie in [0,1]");
  if (cfg.track_coast_frames < 0)
    fail(ErrorKind::config, "track_coast_frames must be >= 0");
}

SequenceIndex build_sequence_index(const Sequence& seq, double grid_cell) {
  SequenceIndex index;
  index.global.reserve(seq.frames.size());
  index.grids.reserve(seq.frames.size());
  for (const Frame& f : seq.frames) {
    index.global.push_back(transform_points(f.points, f.pose));
    index.grids.emplace_back(index.global.back(), grid_cell);
  }
  return index;
}

PpScores compute_ppscore(const Sequence& seq, int center, int n, double radius) {
  return compute_ppscore(seq, build_sequence_index(seq, radius), center, n,
                         radius);
}

PpScores compute_ppscore(const Sequence& seq, const SequenceIndex& index,
                         int center, int n, double radius) {
  const int count = static_cast<int>(seq.frames.size());
  if (center < 0 || center >= count)
    fail(ErrorKind::validity, "center frame out of range");
  if (n < 0) fail(ErrorKind::config, "ppscore n must be >= 0");
  if (!(radius > 0.0)) fail(ErrorKind::config, "ppscore radius must be positive");

  PpScores scores;
  scores.lo = std::max(0, center - n);
  scores.hi = std::min(count - 1, center + n);
  const double window = scores.hi - scores.lo + 1;
  scores.per_frame.resize(scores.hi - scores.lo + 1);
  for (int f = scores.lo; f <= scores.hi; ++f) {
    const PointCloud& pts = index.global[f];
    std::vector<double>& out = scores.per_frame[f - scores.lo];
    out.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int hits = 1;  // the point's own frame always contains it
      for (int g = scores.lo; g <= scores.hi; ++g) {
        if (g == f) continue;
        if (index.grids[g].any_within(pts.x[i], pts.y[i], pts.z[i], radius))
          ++hits;
      }
      out[i] = hits / window;
    }
  }
  return scores;
}

AggregatedCloud remove_motion_artifacts(const Sequence& seq, int center,
                                        const MfcConfig& cfg) {
  return remove_motion_artifacts(
      seq, build_sequence_index(seq, cfg.ppscore_radius), center, cfg);
}

AggregatedCloud remove_motion_artifacts(const Sequence& seq,
                                        const SequenceIndex& index, int center,
                                        const MfcConfig& cfg) {
  const PpScores scores =
      compute_ppscore(seq, index, center, cfg.n, cfg.ppscore_radius);

  PointCloud kept_global;
  AggregatedCloud out;
  for (int f = scores.lo; f <= scores.hi; ++f) {
    const PointCloud& pts = index.global[f];
    const std::vector<double>& sc = scores.per_frame[f - scores.lo];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (f != center && sc[i] < cfg.ppscore_threshold) continue;
      kept_global.push_back(pts.point(i));
      out.source_frame.push_back(f);
      out.source_index.push_back(static_cast<std::uint32_t>(i));
    }
  }
  out.points =
      transform_points(kept_global, invert_pose(seq.frames[center].pose));
  return out;
}

namespace {

struct PlaneFit {
  double nx = 0.0, ny = 0.0, nz = 1.0, d = 0.0;
  std::size_t inliers = 0;
  bool valid = false;
};

PlaneFit ransac_plane(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& z, Rng& rng,
                      const MfcConfig& cfg) {
  const std::size_t n = x.size();
  PlaneFit best;
  for (int it = 0; it < cfg.ground_ransac_iters; ++it) {
    const std::size_t a = rng.uniform_index(n);
    const std::size_t b = rng.uniform_index(n);
    const std::size_t c = rng.uniform_index(n);
    if (a == b || a == c || b == c) continue;
    const double ux = x[b] - x[a], uy = y[b] - y[a], uz = z[b] - z[a];
    const double vx = x[c] - x[a], vy = y[c] - y[a], vz = z[c] - z[a];
    double nx = uy * vz - uz * vy;
    double ny = uz * vx - ux * vz;
    double nz = ux * vy - uy * vx;
    const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (norm < 1e-9) continue;
    nx /= norm;
    ny /= norm;
    nz /= norm;
    if (std::fabs(nz) < cfg.ground_normal_z_min) continue;
    const double d = -(nx * x[a] + ny * y[a] + nz * z[a]);
    const std::size_t inl = kern::ops().count_near_plane(
        x.data(), y.data(), z.data(), n, nx, ny, nz, d, cfg.ground_inlier_dist);
    if (!best.valid || inl > best.inliers) {
      best = {nx, ny, nz, d, inl, true};
    }
  }
  return best;
}

// Refit on inliers: centroid plus smallest-eigenvalue direction.
PlaneFit refit_plane(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& z,
                     const std::vector<std::uint32_t>& idx) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const std::uint32_t i : idx) mean += Eigen::Vector3d(x[i], y[i], z[i]);
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const std::uint32_t i : idx) {
    const Eigen::Vector3d p = Eigen::Vector3d(x[i], y[i], z[i]) - mean;
    cov += p * p.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d normal = eig.eigenvectors().col(0);
  if (normal.z() < 0.0) normal = -normal;
  PlaneFit fit;
  fit.nx = normal.x();
  fit.ny = normal.y();
  fit.nz = normal.z();
  fit.d = -normal.dot(mean);
  fit.valid = true;
  return fit;
}

}  // namespace

AggregatedCloud remove_ground(const AggregatedCloud& cloud,
                              const MfcConfig& cfg) {
  const std::size_t n = cloud.points.size();
  if (n < 3) {
    log::warn("remove_ground: fewer than 3 points, returning input unchanged");
    return cloud;
  }

  // Bucket points into ground tiles; std::map keeps tile order stable.
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::uint32_t>>
      tiles;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kx = static_cast<std::int64_t>(
        std::floor(cloud.points.x[i] / cfg.ground_tile));
    const auto ky = static_cast<std::int64_t>(
        std::floor(cloud.points.y[i] / cfg.ground_tile));
    tiles[{kx, ky}].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<char> is_ground(n, 0);
  for (const auto& [key, idx] : tiles) {
    if (idx.size() < 3) continue;

    // Scoring subset, strided to at most 4096 points.
    const std::size_t stride = idx.size() / 4096 + 1;
    std::vector<double> sx, sy, sz;
    for (std::size_t i = 0; i < idx.size(); i += stride) {
      sx.push_back(cloud.points.x[idx[i]]);
      sy.push_back(cloud.points.y[idx[i]]);
      sz.push_back(cloud.points.z[idx[i]]);
    }

    const std::uint64_t stream =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.first))
         << 32) |
        static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.second));
    Rng rng = Rng::substream(cfg.ground_ransac_seed, stream);
    PlaneFit fit = ransac_plane(sx, sy, sz, rng, cfg);
    // Require real support before declaring a ground plane in this tile.
    if (!fit.valid || fit.inliers < std::max<std::size_t>(30, sx.size() / 5))
      continue;

    std::vector<std::uint32_t> subset_inliers;
    kern::ops().collect_near_plane(sx.data(), sy.data(), sz.data(), sx.size(),
                                   fit.nx, fit.ny, fit.nz, fit.d,
                                   cfg.ground_inlier_dist, subset_inliers);
    if (subset_inliers.size() < 3) continue;
    fit = refit_plane(sx, sy, sz, subset_inliers);

    for (const std::uint32_t i : idx) {
      const double dist = fit.nx * cloud.points.x[i] +
                          fit.ny * cloud.points.y[i] +
                          fit.nz * cloud.points.z[i] + fit.d;
      if (std::fabs(dist) <= cfg.ground_inlier_dist) is_ground[i] = 1;
    }
  }

  AggregatedCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_ground[i]) continue;
    out.points.push_back(cloud.points.point(i));
    if (!cloud.source_frame.empty())
      out.source_frame.push_back(cloud.source_frame[i]);
    if (!cloud.source_index.empty())
      out.source_index.push_back(cloud.source_index[i]);
  }
  return out;
}

std::vector<int> cluster_dbscan(const PointCloud& points, double eps,
                                int min_pts) {
  if (!(eps > 0.0)) fail(ErrorKind::config, "dbscan eps must be positive");
  if (min_pts < 1) fail(ErrorKind::config, "dbscan min_pts must be >= 1");
  const std::size_t n = points.size();
  std::vector<int> labels(n, -1);
  if (n == 0) return labels;

  const PointGrid grid(points, eps);
  std::vector<char> visited(n, 0);
  std::vector<std::uint32_t> neigh;
  std::deque<std::uint32_t> queue;
  int next_cluster = 0;

  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = 1;
    neigh.clear();
    grid.collect_within(points.x[i], points.y[i], points.z[i], eps, neigh);
    if (neigh.size() < static_cast<std::size_t>(min_pts)) continue;  // noise for now

    const int cluster = next_cluster++;
    labels[i] = cluster;
    queue.assign(neigh.begin(), neigh.end());
    while (!queue.empty()) {
      const std::uint32_t j = queue.front();
      queue.pop_front();
      if (labels[j] == -1) labels[j] = cluster;  // border or previously noise
      if (visited[j]) continue;
      visited[j] = 1;
      labels[j] = cluster;
      neigh.clear();
      grid.collect_within(points.x[j], points.y[j], points.z[j], eps, neigh);
      if (neigh.size() >= static_cast<std::size_t>(min_pts))
        queue.insert(queue.end(), neigh.begin(), neigh.end());
    }
  }
  return labels;
}

double fit_yaw(const PointCloud& cluster, double step_deg) {
  if (cluster.empty()) fail(ErrorKind::validity, "fit_yaw on empty cluster");
  const auto& k = kern::ops();
  const int steps = static_cast<int>(std::ceil(90.0 / step_deg));
  double best_yaw = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s < steps; ++s) {
    const double yaw = s * step_deg * M_PI / 180.0;
    const double c = std::cos(yaw), sn = std::sin(yaw);
    double bounds[4];
    k.rotated_bounds(cluster.x.data(), cluster.y.data(), cluster.size(), c, sn,
                     bounds);
    const double cost = k.edge_closeness(cluster.x.data(), cluster.y.data(),
                                         cluster.size(), c, sn, bounds);
    if (cost < best_cost) {
      best_cost = cost;
      best_yaw = yaw;
    }
  }
  return best_yaw;
}

Box3D fit_box(const PointCloud& cluster, const MfcConfig& cfg) {
  if (cluster.empty()) fail(ErrorKind::validity, "fit_box on empty cluster");
  const double yaw = fit_yaw(cluster, cfg.yaw_step_deg);
  const double c = std::cos(yaw), s = std::sin(yaw);
  double bounds[4];
  kern::ops().rotated_bounds(cluster.x.data(), cluster.y.data(), cluster.size(),
                             c, s, bounds);
  const double du = bounds[1] - bounds[0];
  const double dv = bounds[3] - bounds[2];
  const double cu = 0.5 * (bounds[0] + bounds[1]);
  const double cv = 0.5 * (bounds[2] + bounds[3]);

  const auto [zmin, zmax] =
      std::minmax_element(cluster.z.begin(), cluster.z.end());
  Box3D box;
  box.x = cu * c - cv * s;
  box.y = cu * s + cv * c;
  box.z = 0.5 * (*zmin + *zmax);
  box.h = std::max(*zmax - *zmin, cfg.min_extent);
  const double eu = std::max(du, cfg.min_extent);
  const double ev = std::max(dv, cfg.min_extent);
  if (eu >= ev) {
    box.l = eu;
    box.w = ev;
    box.alpha = yaw;
  } else {
    box.l = ev;
    box.w = eu;
    box.alpha = yaw + M_PI / 2.0;
  }
  if (box.alpha >= M_PI / 2.0) box.alpha -= M_PI;
  return box;
}

ClassId classify_box(const Box3D& box, const std::vector<ClassRule>& rules) {
  for (const ClassRule& r : rules) {
    if (box.h > r.h_lo && box.h <= r.h_hi && box.w > r.w_lo &&
        box.w <= r.w_hi && box.l > r.l_lo && box.l <= r.l_hi)
      return r.beta;
  }
  return ClassId::discard_large;
}

namespace {

struct ActiveTrack {
  std::int64_t tau = 0;
  std::vector<TrackEntry> entries;
  double vx = 0.0, vy = 0.0;  // per frame-index unit
  int missed = 0;
};

double track_iou(const Box3D& a, const Box3D& b, IouMode mode) {
  return mode == IouMode::bev ? bev_iou(a, b) : iou_3d(a, b);
}

ClassId majority_class(const std::vector<TrackEntry>& entries,
                       const std::vector<ClassId>& classes) {
  // Count non-DiscardSmall classes; earliest-seen wins ties.
  std::vector<std::pair<ClassId, int>> counts;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ClassId c = classes[i];
    if (c == ClassId::discard_small) continue;
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& p) { return p.first == c; });
    if (it == counts.end())
      counts.push_back({c, 1});
    else
      ++it->second;
  }
  ClassId best = ClassId::discard_small;
  int best_count = 0;
  for (const auto& [c, cnt] : counts) {
    if (cnt > best_count) {
      best = c;
      best_count = cnt;
    }
  }
  return best;
}

}  // namespace

std::vector<Track> track_boxes(const std::vector<FrameDetections>& frames,
                               const MfcConfig& cfg) {
  std::vector<ActiveTrack> active;
  std::vector<std::vector<ClassId>> active_classes;
  std::vector<Track> done;
  std::vector<std::vector<ClassId>> done_classes;
  std::int64_t next_tau = 0;

  auto retire = [&](std::size_t a) {
    Track t;
    t.tau = active[a].tau;
    t.entries = std::move(active[a].entries);
    t.beta = majority_class(t.entries, active_classes[a]);
    done.push_back(std::move(t));
    done_classes.push_back(std::move(active_classes[a]));
  };

  for (const FrameDetections& frame : frames) {
    const std::size_t nd = frame.dets.size();
    // Constant-velocity predictions for every live track.
    std::vector<Box3D> pred(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      const TrackEntry& last = active[a].entries.back();
      const double dt = frame.frame_index - last.frame_index;
      pred[a] = last.box;
      pred[a].x += active[a].vx * dt;
      pred[a].y += active[a].vy * dt;
    }

    std::vector<int> det_track(nd, -1);
    std::vector<char> track_taken(active.size(), 0);
    if (!active.empty() && nd > 0) {
      std::vector<std::vector<double>> iou(active.size(),
                                           std::vector<double>(nd, 0.0));
      for (std::size_t a = 0; a < active.size(); ++a)
        for (std::size_t d = 0; d < nd; ++d)
          iou[a][d] = track_iou(pred[a], frame.dets[d].box, cfg.track_iou_mode);

      // Greedy global-best association; ties go to the lowest track then
      // lowest detection index.
      while (true) {
        double best = cfg.track_iou_min;
        int best_a = -1, best_d = -1;
        for (std::size_t a = 0; a < active.size(); ++a) {
          if (track_taken[a]) continue;
          for (std::size_t d = 0; d < nd; ++d) {
            if (det_track[d] != -1) continue;
            if (iou[a][d] > best) {
              best = iou[a][d];
              best_a = static_cast<int>(a);
              best_d = static_cast<int>(d);
            }
          }
        }
        if (best_a < 0) break;
        track_taken[best_a] = 1;
        det_track[best_d] = best_a;
      }
    }

    for (std::size_t d = 0; d < nd; ++d) {
      const Detection& det = frame.dets[d];
      if (det_track[d] >= 0) {
        ActiveTrack& tr = active[det_track[d]];
        const TrackEntry& last = tr.entries.back();
        const double dt = frame.frame_index - last.frame_index;
        tr.vx = (det.box.x - last.box.x) / dt;
        tr.vy = (det.box.y - last.box.y) / dt;
        tr.missed = 0;
        tr.entries.push_back({frame.frame_index, det.box, frame.ego_x,
                              frame.ego_y, static_cast<int>(d)});
        active_classes[det_track[d]].push_back(det.beta);
      } else if (det.beta != ClassId::discard_small) {
        ActiveTrack tr;
        tr.tau = next_tau++;
        tr.entries.push_back({frame.frame_index, det.box, frame.ego_x,
                              frame.ego_y, static_cast<int>(d)});
        active.push_back(std::move(tr));
        active_classes.push_back({det.beta});
        track_taken.push_back(1);
      }
    }

    // Coast or retire unmatched tracks.
    for (std::size_t a = active.size(); a-- > 0;) {
      if (track_taken[a]) continue;
      if (++active[a].missed > cfg.track_coast_frames) {
        retire(a);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(a));
        active_classes.erase(active_classes.begin() +
                             static_cast<std::ptrdiff_t>(a));
      }
    }
  }
  for (std::size_t a = 0; a < active.size(); ++a) retire(a);

  std::sort(done.begin(), done.end(),
            [](const Track& x, const Track& y) { return x.tau < y.tau; });
  return done;
}

namespace {

double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

// Resize one axis keeping the face nearer (ego_x, ego_y) fixed.
void resize_axis(double& cx, double& cy, double ux, double uy, double old_dim,
                 double new_dim, double ego_x, double ego_y) {
  const double toward_ego = (ego_x - cx) * ux + (ego_y - cy) * uy;
  const double sign = toward_ego >= 0.0 ? 1.0 : -1.0;
  const double face = sign * 0.5 * old_dim;
  const double shift = face - sign * 0.5 * new_dim;
  cx += shift * ux;
  cy += shift * uy;
}

}  // namespace

std::vector<Label> smooth_tracks(
    const std::vector<Track>& tracks,
    std::vector<std::pair<std::size_t, std::size_t>>* sources) {
  struct Row {
    Label label;
    std::size_t track, entry;
  };
  std::vector<Row> rows;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const Track& tr = tracks[t];
    if (tr.entries.empty()) continue;
    std::vector<double> ls, ws, hs;
    for (const TrackEntry& e : tr.entries) {
      ls.push_back(e.box.l);
      ws.push_back(e.box.w);
      hs.push_back(e.box.h);
    }
    const double ml = lower_median(ls);
    const double mw = lower_median(ws);
    const double mh = lower_median(hs);

    for (std::size_t e = 0; e < tr.entries.size(); ++e) {
      const TrackEntry& entry = tr.entries[e];
      Box3D box = entry.box;
      const double c = std::cos(box.alpha), s = std::sin(box.alpha);
      resize_axis(box.x, box.y, c, s, box.l, ml, entry.ego_x, entry.ego_y);
      resize_axis(box.x, box.y, -s, c, box.w, mw, entry.ego_x, entry.ego_y);
      box.z = box.bottom() + 0.5 * mh;
      box.l = ml;
      box.w = mw;
      box.h = mh;
      Label label;
      label.box = box;
      label.beta = tr.beta;
      label.tau = tr.tau;
      label.frame_index = entry.frame_index;
      rows.push_back({label, t, e});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.label.frame_index != b.label.frame_index)
      return a.label.frame_index < b.label.frame_index;
    return a.label.tau < b.label.tau;
  });

  std::vector<Label> labels;
  labels.reserve(rows.size());
  if (sources) sources->clear();
  for (const Row& r : rows) {
    labels.push_back(r.label);
    if (sources) sources->push_back({r.track, r.entry});
  }
  return labels;
}

MfcResult generate_initial_labels(const Sequence& seq, const MfcConfig& cfg) {
  validate_mfc_config(cfg);
  validate_sequence(seq);
  MfcResult result;

  const SequenceIndex index = build_sequence_index(seq, cfg.ppscore_radius);
  std::vector<FrameDetections> frames;
  frames.reserve(seq.frames.size());

  for (int c = 0; c < static_cast<int>(seq.frames.size()); ++c) {
    const Frame& frame = seq.frames[c];
    FrameDetections fd;
    fd.frame_index = frame.index;
    fd.ego_x = frame.pose.translation.x();
    fd.ego_y = frame.pose.translation.y();

    const AggregatedCloud agg = remove_motion_artifacts(seq, index, c, cfg);
    const AggregatedCloud ng = remove_ground(agg, cfg);
    const std::vector<int> cluster_ids =
        cluster_dbscan(ng.points, cfg.dbscan_eps, cfg.dbscan_min_pts);

    int nclusters = 0;
    for (const int id : cluster_ids) nclusters = std::max(nclusters, id + 1);
    std::vector<PointCloud> clusters(nclusters);
    for (std::size_t i = 0; i < cluster_ids.size(); ++i)
      if (cluster_ids[i] >= 0) clusters[cluster_ids[i]].push_back(ng.points.point(i));

    const double ego_yaw = std::atan2(frame.pose.rotation(1, 0),
                                      frame.pose.rotation(0, 0));
    for (PointCloud& cluster : clusters) {
      ++result.stats.clusters_total;
      if (cluster.size() < static_cast<std::size_t>(cfg.min_cluster_points)) {
        ++result.stats.clusters_too_small;
        continue;
      }
      const Box3D ego_box = fit_box(cluster, cfg);
      const ClassId beta = classify_box(ego_box, cfg.class_rules);
      if (beta == ClassId::discard_large) {
        ++result.stats.boxes_discard_large;
        continue;
      }
      const Point center =
          apply_pose(frame.pose, {ego_box.x, ego_box.y, ego_box.z, 0.0});
      Box3D global_box = ego_box;
      global_box.x = center.x;
      global_box.y = center.y;
      global_box.z = center.z;
      global_box.alpha = normalize_angle(ego_box.alpha + ego_yaw);
      fd.dets.push_back({global_box, beta, std::move(cluster)});
    }
    frames.push_back(std::move(fd));
  }

  const std::vector<Track> tracks = track_boxes(frames, cfg);
  result.stats.tracks = tracks.size();

  std::vector<std::pair<std::size_t, std::size_t>> sources;
  std::vector<Label> global_labels = smooth_tracks(tracks, &sources);

  std::map<int, int> frame_pos;
  for (std::size_t i = 0; i < frames.size(); ++i)
    frame_pos[frames[i].frame_index] = static_cast<int>(i);

  for (std::size_t i = 0; i < global_labels.size(); ++i) {
    Label label = global_labels[i];
    const int pos = frame_pos.at(label.frame_index);
    const Frame& frame = seq.frames[pos];
    const double ego_yaw =
        std::atan2(frame.pose.rotation(1, 0), frame.pose.rotation(0, 0));
    const Pose to_ego = invert_pose(frame.pose);
    const Point center =
        apply_pose(to_ego, {label.box.x, label.box.y, label.box.z, 0.0});
    label.box.x = center.x;
    label.box.y = center.y;
    label.box.z = center.z;
    label.box.alpha = normalize_angle(label.box.alpha - ego_yaw);

    const auto [track_i, entry_i] = sources[i];
    const TrackEntry& entry = tracks[track_i].entries[entry_i];
    result.labels.push_back(label);
    result.clusters.push_back(frames[pos].dets[entry.source_det].points);
  }
  result.stats.labels = result.labels.size();
  return result;
}

}  // namespace cpl
