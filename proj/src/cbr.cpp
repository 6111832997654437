#include "cpl/cbr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpl/error.hpp"
#include "cpl/geometry.hpp"
#include "cpl/mfc.hpp"

namespace cpl {

void validate_cbr_config(const CbrConfig& cfg) {
  if (cfg.bins_per_meter < 1) {
    throw Error(ErrorKind::config, "cbr: bins_per_meter must be >= 1");
  }
  if (cfg.min_points_for_relocalization < 1) {
    throw Error(ErrorKind::config,
                "cbr: min_points_for_relocalization must be >= 1");
  }
  if (!(cfg.yaw_step_deg > 0.0 && cfg.yaw_step_deg <= 90.0)) {
    throw Error(ErrorKind::config, "cbr: yaw_step_deg must be in (0, 90]");
  }
}

std::size_t associate_cproto(const Label& label,
                             const std::vector<CProto>& protos,
                             bool class_restricted) {
  if (protos.empty()) {
    throw Error(ErrorKind::config, "cbr: prototype set is empty");
  }
  bool have_class = false;
  if (class_restricted) {
    for (const CProto& p : protos) {
      if (p.beta == label.beta) {
        have_class = true;
        break;
      }
    }
  }
  std::size_t best = protos.size();
  double best_diff = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < protos.size(); ++i) {
    if (have_class && protos[i].beta != label.beta) continue;
    double diff = std::abs(label.box.h - protos[i].box.h);
    if (diff < best_diff) {
      best_diff = diff;
      best = i;
    }
  }
  return best;
}

Label resize_to_cproto(const Label& label, const CProto& proto) {
  Label out = label;
  out.box.l = proto.box.l;
  out.box.w = proto.box.w;
  out.box.h = proto.box.h;
  return out;
}

namespace {

// Center coordinate along one box axis: the ego-near face (the sensor sits at
// the origin of label coordinates) lands on the extremal point of the densest
// histogram column. Columns within 60% of the maximum count tie toward the
// ego side: visible surfaces end at the sensor-facing boundary, so a boundary
// column beats a denser interior clump (e.g. a partially occluded end face
// mid-span), and featureless flat profiles snap to the cluster boundary
// instead of a noise-selected interior bin. Depends only on the cluster,
// never on the incoming center, so a second application reproduces the same
// center bit for bit.
double snap_axis(const std::vector<double>& coords, double extent,
                 int bins_per_meter) {
  double lo = *std::min_element(coords.begin(), coords.end());
  double bin = 1.0 / static_cast<double>(bins_per_meter);
  double mean = 0.0;
  std::vector<int> idx(coords.size());
  int nbins = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    idx[i] = static_cast<int>(std::floor((coords[i] - lo) / bin));
    nbins = std::max(nbins, idx[i] + 1);
    mean += coords[i];
  }
  mean /= static_cast<double>(coords.size());
  std::vector<int> counts(static_cast<std::size_t>(nbins), 0);
  for (int i : idx) counts[static_cast<std::size_t>(i)] += 1;
  int max_count = *std::max_element(counts.begin(), counts.end());
  const int sign = -mean >= 0.0 ? 1 : -1;  // which face looks at the sensor
  int densest = -1;
  for (int c = 0; c < nbins; ++c) {
    int col = sign > 0 ? nbins - 1 - c : c;  // scan from the ego side
    if (5 * counts[static_cast<std::size_t>(col)] >= 3 * max_count) {
      densest = col;
      break;
    }
  }
  double extremal = sign > 0 ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (idx[i] != densest) continue;
    extremal = sign > 0 ? std::max(extremal, coords[i])
                        : std::min(extremal, coords[i]);
  }
  return extremal - sign * extent / 2.0;
}

}  // namespace

Label relocalize(const Label& label, const PointCloud& cluster,
                 const CbrConfig& cfg, bool* applied) {
  validate_cbr_config(cfg);
  validate_label(label);
  if (applied) *applied = false;
  if (cluster.size() <
      static_cast<std::size_t>(cfg.min_points_for_relocalization)) {
    return label;
  }

  double theta = fit_yaw(cluster, cfg.yaw_step_deg);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  std::vector<double> us(cluster.size()), vs(cluster.size());
  double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo;
  double vlo = ulo, vhi = -ulo;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    us[i] = cluster.x[i] * ct + cluster.y[i] * st;
    vs[i] = -cluster.x[i] * st + cluster.y[i] * ct;
    ulo = std::min(ulo, us[i]);
    uhi = std::max(uhi, us[i]);
    vlo = std::min(vlo, vs[i]);
    vhi = std::max(vhi, vs[i]);
  }
  // Long side of the cluster carries the box length.
  double alpha = uhi - ulo >= vhi - vlo ? theta : theta + M_PI / 2.0;
  if (alpha >= M_PI / 2.0) alpha -= M_PI;
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  if (std::abs(alpha - theta) > 1e-12) {
    for (std::size_t i = 0; i < cluster.size(); ++i) {
      us[i] = cluster.x[i] * ca + cluster.y[i] * sa;
      vs[i] = -cluster.x[i] * sa + cluster.y[i] * ca;
    }
  }

  double cu = snap_axis(us, label.box.l, cfg.bins_per_meter);
  double cv = snap_axis(vs, label.box.w, cfg.bins_per_meter);
  double nx = cu * ca - cv * sa;
  double ny = cu * sa + cv * ca;
  double shift = std::hypot(nx - label.box.x, ny - label.box.y);
  if (shift > 0.5 * std::hypot(label.box.l, label.box.w)) {
    return label;  // re-fit disagrees too much; keep the incoming pose
  }
  Label out = label;
  out.box.x = nx;
  out.box.y = ny;
  out.box.alpha = normalize_angle(alpha);
  if (applied) *applied = true;
  return out;
}

std::vector<Label> refine_labels(const std::vector<Label>& labels,
                                 const std::vector<PointCloud>& clouds,
                                 const std::vector<CProto>& protos,
                                 const CbrConfig& cfg, CbrStats* stats) {
  validate_cbr_config(cfg);
  if (labels.size() != clouds.size()) {
    throw Error(ErrorKind::validity,
                "cbr: label and cluster cloud counts differ");
  }
  CbrStats local;
  std::vector<Label> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label& lab = labels[i];
    bool have_class = false;
    for (const CProto& p : protos) {
      if (!cfg.class_restricted || p.beta == lab.beta) {
        have_class = true;
        break;
      }
    }
    if (protos.empty() || !have_class) {
      local.passed_through += 1;
      out.push_back(lab);
      continue;
    }
    std::size_t k = associate_cproto(lab, protos, cfg.class_restricted);
    Label resized = resize_to_cproto(lab, protos[k]);
    bool applied = false;
    Label refined = relocalize(resized, clouds[i], cfg, &applied);
    if (!applied) local.relocalization_skipped += 1;
    local.refined += 1;
    out.push_back(refined);
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace cpl
