#pragma once

#include <array>
#include <map>
#include <vector>

#include "cpl/scene.hpp"

namespace cpl {

struct TemplateBox {
  double l = 1.0, w = 1.0, h = 1.0;
};

// Vehicle/Pedestrian/Cyclist template sizes in meters.
std::map<ClassId, TemplateBox> default_templates();

struct CssConfig {
  double range_max = 80.0;
  std::vector<int> mlo_resolutions = {2, 4, 6};
  // distance, occupancy, size-similarity weights; must sum to 1.
  std::array<double, 3> weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double kl_truncation = 0.05;
  std::map<ClassId, TemplateBox> templates = default_templates();
};

void validate_css_config(const CssConfig& cfg);

// 1 - clamp(||center|| / range_max, 0, 1).
double distance_score(const Box3D& box, const CssConfig& cfg);

// Mean over resolutions r of (occupied BEV cells)/r^2 on the box footprint.
double mlo_score(const Box3D& box, const PointCloud& points,
                 const CssConfig& cfg);

// 1 - min(trunc, KL(normalized sizes || normalized template)) / trunc.
double ss_score(const Box3D& box, const TemplateBox& tpl, const CssConfig& cfg);

double css_score(const Box3D& box, const PointCloud& points, ClassId beta,
                 const CssConfig& cfg);

struct CssComponents {
  double distance = 0.0, mlo = 0.0, ss = 0.0, css = 0.0;
};

CssComponents css_components(const Box3D& box, const PointCloud& points,
                             ClassId beta, const CssConfig& cfg);

// Fills each label's css from its cluster points.
void score_labels(std::vector<Label>& labels,
                  const std::vector<PointCloud>& clouds, const CssConfig& cfg,
                  std::vector<CssComponents>* components = nullptr);

}  // namespace cpl
