#include "cpl/css.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cpl/error.hpp"

namespace cpl {

std::map<ClassId, TemplateBox> default_templates() {
  return {
      {ClassId::vehicle, {5.06, 1.86, 1.49}},
      {ClassId::pedestrian, {1.0, 1.0, 2.0}},
      {ClassId::cyclist, {1.9, 0.85, 1.8}},
  };
}

void validate_css_config(const CssConfig& cfg) {
  if (!(cfg.range_max > 0.0)) {
    throw Error(ErrorKind::config, "css: range_max must be > 0");
  }
  if (cfg.mlo_resolutions.empty()) {
    throw Error(ErrorKind::config, "css: need at least one MLO resolution");
  }
  for (int r : cfg.mlo_resolutions) {
    if (r < 1) {
      throw Error(ErrorKind::config, "css: MLO resolutions must be >= 1");
    }
  }
  double sum = 0.0;
  for (double w : cfg.weights) {
    if (!(w >= 0.0)) {
      throw Error(ErrorKind::config, "css: weights must be >= 0");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::config, "css: weights must sum to 1");
  }
  if (!(cfg.kl_truncation > 0.0)) {
    throw Error(ErrorKind::config, "css: kl_truncation must be > 0");
  }
  for (const auto& [cls, tpl] : cfg.templates) {
    if (!(tpl.l > 0.0) || !(tpl.w > 0.0) || !(tpl.h > 0.0)) {
      throw Error(ErrorKind::config, "css: template sizes must be > 0 for " +
                                         std::string(to_string(cls)));
    }
  }
}

double distance_score(const Box3D& box, const CssConfig& cfg) {
  double d = std::sqrt(box.x * box.x + box.y * box.y + box.z * box.z);
  double t = d / cfg.range_max;
  return 1.0 - std::clamp(t, 0.0, 1.0);
}

double mlo_score(const Box3D& box, const PointCloud& points,
                 const CssConfig& cfg) {
  validate_box(box);
  if (points.size() == 0) return 0.0;
  const double c = std::cos(box.alpha);
  const double s = std::sin(box.alpha);
  const double hl = box.l / 2.0;
  const double hw = box.w / 2.0;
  // Box-frame BEV coordinates of the in-footprint points.
  std::vector<double> us, vs;
  us.reserve(points.size());
  vs.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double dx = points.x[i] - box.x;
    double dy = points.y[i] - box.y;
    double u = c * dx + s * dy;
    double v = -s * dx + c * dy;
    if (std::abs(u) <= hl + 1e-9 && std::abs(v) <= hw + 1e-9) {
      us.push_back(u);
      vs.push_back(v);
    }
  }
  if (us.empty()) return 0.0;
  double total = 0.0;
  std::vector<char> occupied;
  for (int r : cfg.mlo_resolutions) {
    occupied.assign(static_cast<std::size_t>(r) * r, 0);
    for (std::size_t i = 0; i < us.size(); ++i) {
      int iu = static_cast<int>(std::floor((us[i] + hl) / box.l * r));
      int iv = static_cast<int>(std::floor((vs[i] + hw) / box.w * r));
      iu = std::clamp(iu, 0, r - 1);
      iv = std::clamp(iv, 0, r - 1);
      occupied[static_cast<std::size_t>(iu) * r + iv] = 1;
    }
    std::size_t count = 0;
    for (char o : occupied) count += o;
    total += static_cast<double>(count) / (static_cast<double>(r) * r);
  }
  return total / static_cast<double>(cfg.mlo_resolutions.size());
}

double ss_score(const Box3D& box, const TemplateBox& tpl,
                const CssConfig& cfg) {
  validate_box(box);
  double sb = box.l + box.w + box.h;
  double st = tpl.l + tpl.w + tpl.h;
  double p[3] = {box.l / sb, box.w / sb, box.h / sb};
  double q[3] = {tpl.l / st, tpl.w / st, tpl.h / st};
  double kl = 0.0;
  for (int i = 0; i < 3; ++i) kl += p[i] * std::log(p[i] / q[i]);
  // The divergence is >= 0 in exact arithmetic; rounding noise near zero is
  // clamped so proportional sizes score exactly 1.
  if (kl < 1e-12) kl = 0.0;
  return 1.0 - std::min(cfg.kl_truncation, kl) / cfg.kl_truncation;
}

CssComponents css_components(const Box3D& box, const PointCloud& points,
                             ClassId beta, const CssConfig& cfg) {
  auto it = cfg.templates.find(beta);
  if (it == cfg.templates.end()) {
    throw Error(ErrorKind::config, "css: no size template for class " +
                                       std::string(to_string(beta)));
  }
  CssComponents out;
  out.distance = distance_score(box, cfg);
  out.mlo = mlo_score(box, points, cfg);
  out.ss = ss_score(box, it->second, cfg);
  out.css = cfg.weights[0] * out.distance + cfg.weights[1] * out.mlo +
            cfg.weights[2] * out.ss;
  out.css = std::clamp(out.css, 0.0, 1.0);
  return out;
}

double css_score(const Box3D& box, const PointCloud& points, ClassId beta,
                 const CssConfig& cfg) {
  return css_components(box, points, beta, cfg).css;
}

void score_labels(std::vector<Label>& labels,
                  const std::vector<PointCloud>& clouds, const CssConfig& cfg,
                  std::vector<CssComponents>* components) {
  validate_css_config(cfg);
  if (labels.size() != clouds.size()) {
    throw Error(ErrorKind::validity,
                "css: label and cluster cloud counts differ");
  }
  if (components) {
    components->clear();
    components->reserve(labels.size());
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CssComponents comp =
        css_components(labels[i].box, clouds[i], labels[i].beta, cfg);
    labels[i].css = comp.css;
    if (components) components->push_back(comp);
  }
}

}  // namespace cpl
