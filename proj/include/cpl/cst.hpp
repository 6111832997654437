#pragma once

#include <vector>

#include "cpl/geometry.hpp"

namespace cpl {

struct CstConfig {
  double s_low = 0.4;   // scores at or below this get weight 0
  double s_high = 0.7;  // scores at or above this get weight 1
};

void validate_cst_config(const CstConfig& cfg);

// Piecewise-linear confidence ramp over a score in [0, 1].
double css_weight(double score, const CstConfig& cfg);

// One student/teacher proposal pair with its confidence weight. The per-pair
// proposal and detection losses come from the trainer; this module only
// aggregates them and the contrastive terms.
struct ProposalPair {
  Box3D det_box;
  Box3D proto_box;
  std::vector<double> det_feature;
  std::vector<double> proto_feature;
  double weight = 1.0;
  double loss_pro = 0.0;
  double loss_det = 0.0;
};

// (1/N) * sum_i weight_i * (loss_pro_i + loss_det_i).
double weighted_detection_loss(const std::vector<ProposalPair>& pairs);

// -(1/N) * sum_i weight_i * cos(det_feature_i, proto_feature_i).
double feature_contrast_loss(const std::vector<ProposalPair>& pairs);

// (1/N) * sum_i weight_i * (1 - iou3d + ||dcenter|| + |sin dalpha|).
double box_contrast_loss(const std::vector<ProposalPair>& pairs);

}  // namespace cpl
