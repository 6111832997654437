#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cpl/geometry.hpp"
#include "cpl/scene.hpp"

namespace cpl {

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;
};

// Greedy one-to-one matching. Predictions are visited in css-descending
// order (missing css counts as 0, ties keep input order); each takes the
// highest-IoU free ground truth in its own frame with IoU >= iou_min.
MatchResult match_greedy(const std::vector<Label>& preds,
                         const std::vector<Label>& gts, double iou_min,
                         IouMode mode);

// (recall, precision); x/0 is defined as 0.
std::pair<double, double> recall_precision(const MatchResult& match,
                                           std::size_t preds_count,
                                           std::size_t gts_count);

// 40-recall-point interpolated AP over a score-ranked greedy sweep.
// `scores` aligns with `preds` by index.
double average_precision(const std::vector<Label>& preds,
                         const std::vector<double>& scores,
                         const std::vector<Label>& gts, double iou_min,
                         IouMode mode);

struct ErrorStats {
  double size_mae = 0.0;      // mean over pairs and over {l,w,h}
  double position_mae = 0.0;  // mean center distance
  double angle_mae = 0.0;     // folded by pi (rectangle symmetry)
  std::size_t matches = 0;
};

ErrorStats error_stats(const MatchResult& match, const std::vector<Label>& preds,
                       const std::vector<Label>& gts);

// Spearman rank correlation with average ranks on ties; returns 0 when either
// side has no variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cpl
