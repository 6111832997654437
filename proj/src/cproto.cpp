#include "cpl/cproto.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cpl/error.hpp"
#include "cpl/geometry.hpp"

namespace cpl {

void validate_cproto_config(const CProtoConfig& cfg) {
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) {
    throw Error(ErrorKind::config, "cproto: eta must be in [0, 1]");
  }
  if (!(cfg.trim_margin >= 0.0)) {
    throw Error(ErrorKind::config, "cproto: trim_margin must be >= 0");
  }
  if (!(cfg.mover_min_step >= 0.0)) {
    throw Error(ErrorKind::config, "cproto: mover_min_step must be >= 0");
  }
}

namespace {

double pose_yaw(const Pose& p) {
  return std::atan2(p.rotation(1, 0), p.rotation(0, 0));
}

}  // namespace

std::vector<CProto> build_cproto_set(const std::vector<Label>& labels,
                                     const std::vector<PointCloud>& clouds,
                                     const std::vector<Pose>& ego_to_global,
                                     const CProtoConfig& cfg,
                                     CProtoStats* stats) {
  validate_cproto_config(cfg);
  if (labels.size() != clouds.size()) {
    throw Error(ErrorKind::validity,
                "cproto: label and cluster cloud counts differ");
  }
  for (const Label& lab : labels) {
    validate_label(lab);
    if (lab.frame_index < 0 ||
        static_cast<std::size_t>(lab.frame_index) >= ego_to_global.size()) {
      throw Error(ErrorKind::validity,
                  "cproto: label frame index has no ego pose");
    }
  }

  std::map<std::int64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[labels[i].tau].push_back(i);
  }

  CProtoStats local;
  std::vector<CProto> out;
  for (auto& [tau, members] : groups) {
    local.tracks_total += 1;
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (labels[a].frame_index != labels[b].frame_index) {
        return labels[a].frame_index < labels[b].frame_index;
      }
      return a < b;
    });

    // Global BEV trajectory of all track members, for motion direction.
    std::vector<double> gx(members.size()), gy(members.size());
    std::vector<double> galpha(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Label& lab = labels[members[k]];
      const Pose& pose = ego_to_global[static_cast<std::size_t>(lab.frame_index)];
      Point c = apply_pose(pose, {lab.box.x, lab.box.y, lab.box.z, 0.0});
      gx[k] = c.x;
      gy[k] = c.y;
      galpha[k] = normalize_angle(lab.box.alpha + pose_yaw(pose));
    }
    double path = 0.0;
    double frames_spanned = 0.0;
    for (std::size_t k = 0; k + 1 < members.size(); ++k) {
      path += std::hypot(gx[k + 1] - gx[k], gy[k + 1] - gy[k]);
      frames_spanned += static_cast<double>(labels[members[k + 1]].frame_index -
                                            labels[members[k]].frame_index);
    }
    double mean_step = frames_spanned > 0.0 ? path / frames_spanned : 0.0;
    double dir_x = gx.back() - gx.front();
    double dir_y = gy.back() - gy.front();
    double dir_norm = std::hypot(dir_x, dir_y);
    bool mover = mean_step > cfg.mover_min_step && dir_norm > 1e-9;
    if (mover) {
      dir_x /= dir_norm;
      dir_y /= dir_norm;
    }

    std::vector<std::size_t> selected;  // positions within `members`
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Label& lab = labels[members[k]];
      if (lab.css && *lab.css >= cfg.eta) selected.push_back(k);
    }
    if (selected.empty()) {
      local.tracks_skipped += 1;
      continue;
    }

    CProto proto;
    proto.source_tau = tau;
    proto.beta = labels[members[selected.front()]].beta;
    double sum_l = 0.0, sum_w = 0.0, sum_h = 0.0;
    for (std::size_t k : selected) {
      const Label& lab = labels[members[k]];
      const PointCloud& cloud = clouds[members[k]];
      sum_l += lab.box.l;
      sum_w += lab.box.w;
      sum_h += lab.box.h;

      const double c = std::cos(lab.box.alpha);
      const double s = std::sin(lab.box.alpha);
      std::vector<double> us(cloud.size()), vs(cloud.size());
      double mean_u = 0.0;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        double dx = cloud.x[i] - lab.box.x;
        double dy = cloud.y[i] - lab.box.y;
        us[i] = c * dx + s * dy;
        vs[i] = -s * dx + c * dy;
        mean_u += us[i];
      }
      if (!us.empty()) mean_u /= static_cast<double>(us.size());
      bool flip;
      if (mover) {
        // Leading face toward +x: flip boxes whose heading opposes travel.
        flip = std::cos(galpha[k]) * dir_x + std::sin(galpha[k]) * dir_y < 0.0;
      } else {
        // Stationary: keep the denser (sensor-facing) side toward +x.
        flip = mean_u < 0.0;
      }
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        double u = flip ? -us[i] : us[i];
        double v = flip ? -vs[i] : vs[i];
        proto.points.push_back(
            {u, v, cloud.z[i] - lab.box.z, cloud.intensity[i]});
      }
    }
    double n = static_cast<double>(selected.size());
    proto.box = Box3D{0.0, 0.0, 0.0, sum_l / n, sum_w / n, sum_h / n, 0.0};

    PointCloud kept;
    kept.reserve(proto.points.size());
    for (std::size_t i = 0; i < proto.points.size(); ++i) {
      double over = std::max({std::abs(proto.points.x[i]) - proto.box.l / 2.0,
                              std::abs(proto.points.y[i]) - proto.box.w / 2.0,
                              std::abs(proto.points.z[i]) - proto.box.h / 2.0});
      if (over <= cfg.trim_margin) {
        kept.push_back(proto.points.point(i));
      } else {
        local.points_trimmed += 1;
      }
    }
    proto.points = std::move(kept);
    out.push_back(std::move(proto));
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace cpl
