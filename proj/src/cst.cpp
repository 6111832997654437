#include "cpl/cst.hpp"

#include <cmath>

#include "cpl/error.hpp"

namespace cpl {

void validate_cst_config(const CstConfig& cfg) {
  if (!(cfg.s_low >= 0.0 && cfg.s_low < cfg.s_high && cfg.s_high <= 1.0)) {
    throw Error(ErrorKind::config,
                "cst: require 0 <= s_low < s_high <= 1");
  }
}

double css_weight(double score, const CstConfig& cfg) {
  validate_cst_config(cfg);
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorKind::validity, "cst: score must be in [0, 1]");
  }
  if (score <= cfg.s_low) return 0.0;
  if (score >= cfg.s_high) return 1.0;
  return (score - cfg.s_low) / (cfg.s_high - cfg.s_low);
}

double weighted_detection_loss(const std::vector<ProposalPair>& pairs) {
  if (pairs.empty()) {
    throw Error(ErrorKind::numeric, "cst: detection loss over empty set");
  }
  double sum = 0.0;
  for (const ProposalPair& p : pairs) {
    sum += p.weight * (p.loss_pro + p.loss_det);
  }
  return sum / static_cast<double>(pairs.size());
}

double feature_contrast_loss(const std::vector<ProposalPair>& pairs) {
  if (pairs.empty()) {
    throw Error(ErrorKind::numeric, "cst: feature loss over empty set");
  }
  double sum = 0.0;
  for (const ProposalPair& p : pairs) {
    if (p.det_feature.size() != p.proto_feature.size()) {
      throw Error(ErrorKind::validity, "cst: feature dimensions differ");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < p.det_feature.size(); ++i) {
      dot += p.det_feature[i] * p.proto_feature[i];
      na += p.det_feature[i] * p.det_feature[i];
      nb += p.proto_feature[i] * p.proto_feature[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) {
      throw Error(ErrorKind::numeric, "cst: zero-norm feature vector");
    }
    sum += p.weight * dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return -sum / static_cast<double>(pairs.size());
}

double box_contrast_loss(const std::vector<ProposalPair>& pairs) {
  if (pairs.empty()) {
    throw Error(ErrorKind::numeric, "cst: box loss over empty set");
  }
  double sum = 0.0;
  for (const ProposalPair& p : pairs) {
    double dx = p.det_box.x - p.proto_box.x;
    double dy = p.det_box.y - p.proto_box.y;
    double dz = p.det_box.z - p.proto_box.z;
    double dcenter = std::sqrt(dx * dx + dy * dy + dz * dz);
    double dalpha = p.det_box.alpha - p.proto_box.alpha;
    sum += p.weight * (1.0 - iou_3d(p.det_box, p.proto_box) + dcenter +
                       std::abs(std::sin(dalpha)));
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace cpl
