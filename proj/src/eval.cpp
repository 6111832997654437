#include "cpl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpl/error.hpp"
#include "cpl/geometry.hpp"

namespace cpl {

namespace {

// Shared greedy sweep: visit predictions in score-descending order (stable on
// ties) and pair each with its best free same-frame ground truth.
MatchResult greedy_by_scores(const std::vector<Label>& preds,
                             const std::vector<double>& scores,
                             const std::vector<Label>& gts, double iou_min,
                             IouMode mode,
                             std::vector<std::size_t>* visit_order) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  MatchResult out;
  std::vector<char> gt_taken(gts.size(), 0);
  std::vector<char> pred_matched(preds.size(), 0);
  for (std::size_t pi : order) {
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) continue;
      if (gts[gi].frame_index != preds[pi].frame_index) continue;
      double iou = box_iou(preds[pi].box, gts[gi].box, mode);
      if (iou >= iou_min && iou > best_iou) {
        best_iou = iou;
        best_gt = gi;
      }
    }
    // iou_min == 0 still requires actual overlap to pair.
    if (best_gt != gts.size() && best_iou > 0.0) {
      gt_taken[best_gt] = 1;
      pred_matched[pi] = 1;
      out.pairs.push_back({pi, best_gt, best_iou});
    }
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!pred_matched[i]) out.unmatched_preds.push_back(i);
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!gt_taken[i]) out.unmatched_gts.push_back(i);
  }
  if (visit_order) *visit_order = std::move(order);
  return out;
}

}  // namespace

MatchResult match_greedy(const std::vector<Label>& preds,
                         const std::vector<Label>& gts, double iou_min,
                         IouMode mode) {
  std::vector<double> scores(preds.size(), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].css) scores[i] = *preds[i].css;
  }
  return greedy_by_scores(preds, scores, gts, iou_min, mode, nullptr);
}

std::pair<double, double> recall_precision(const MatchResult& match,
                                           std::size_t preds_count,
                                           std::size_t gts_count) {
  double matched = static_cast<double>(match.pairs.size());
  double recall =
      gts_count == 0 ? 0.0 : matched / static_cast<double>(gts_count);
  double precision =
      preds_count == 0 ? 0.0 : matched / static_cast<double>(preds_count);
  return {recall, precision};
}

double average_precision(const std::vector<Label>& preds,
                         const std::vector<double>& scores,
                         const std::vector<Label>& gts, double iou_min,
                         IouMode mode) {
  if (preds.size() != scores.size()) {
    throw Error(ErrorKind::validity, "eval: score per prediction required");
  }
  if (preds.empty() || gts.empty()) return 0.0;
  std::vector<std::size_t> order;
  MatchResult match =
      greedy_by_scores(preds, scores, gts, iou_min, mode, &order);
  std::vector<char> is_tp(preds.size(), 0);
  for (const MatchPair& p : match.pairs) is_tp[p.pred] = 1;

  // Cumulative precision/recall after each ranked prediction.
  std::vector<double> recalls, precisions;
  recalls.reserve(order.size());
  precisions.reserve(order.size());
  double tp = 0.0, fp = 0.0;
  for (std::size_t pi : order) {
    if (is_tp[pi]) {
      tp += 1.0;
    } else {
      fp += 1.0;
    }
    recalls.push_back(tp / static_cast<double>(gts.size()));
    precisions.push_back(tp / (tp + fp));
  }
  double ap = 0.0;
  for (int k = 1; k <= 40; ++k) {
    double r = static_cast<double>(k) / 40.0;
    double best = 0.0;
    for (std::size_t i = 0; i < recalls.size(); ++i) {
      if (recalls[i] >= r - 1e-12) best = std::max(best, precisions[i]);
    }
    ap += best;
  }
  return ap / 40.0;
}

ErrorStats error_stats(const MatchResult& match,
                       const std::vector<Label>& preds,
                       const std::vector<Label>& gts) {
  if (match.pairs.empty()) {
    throw Error(ErrorKind::numeric, "eval: error stats over empty matching");
  }
  ErrorStats out;
  out.matches = match.pairs.size();
  for (const MatchPair& p : match.pairs) {
    const Box3D& a = preds.at(p.pred).box;
    const Box3D& b = gts.at(p.gt).box;
    out.size_mae +=
        (std::abs(a.l - b.l) + std::abs(a.w - b.w) + std::abs(a.h - b.h)) / 3.0;
    out.position_mae += std::sqrt((a.x - b.x) * (a.x - b.x) +
                                  (a.y - b.y) * (a.y - b.y) +
                                  (a.z - b.z) * (a.z - b.z));
    double d = std::abs(normalize_angle(a.alpha - b.alpha));
    out.angle_mae += std::min(d, M_PI - d);
  }
  double n = static_cast<double>(match.pairs.size());
  out.size_mae /= n;
  out.position_mae /= n;
  out.angle_mae /= n;
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::validity, "eval: spearman inputs differ in length");
  }
  if (a.size() < 2) return 0.0;
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace cpl
