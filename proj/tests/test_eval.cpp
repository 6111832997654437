#include <doctest.h>

#include <cmath>
#include <vector>

#include "cpl/error.hpp"
#include "cpl/eval.hpp"
#include "cpl/rng.hpp"
#include "oracles.hpp"

using cpl::Box3D;
using cpl::ClassId;
using cpl::IouMode;
using cpl::Label;

namespace {

Label boxed(double x, double y, double l, double w, double alpha, int frame,
            double css = -1.0) {
  Label lab;
  lab.box = Box3D{x, y, 0.75, l, w, 1.5, alpha};
  lab.beta = ClassId::vehicle;
  lab.frame_index = frame;
  if (css >= 0.0) lab.css = css;
  return lab;
}

}  // namespace

TEST_CASE("match_greedy gives the contested ground truth to the higher css") {
  // both predictions overlap gt 0 best; the higher-css one is visited first
  const std::vector<Label> gts = {boxed(0, 0, 4, 2, 0, 0)};
  std::vector<Label> preds = {boxed(0.6, 0, 4, 2, 0, 0, 0.2),
                              boxed(0.3, 0, 4, 2, 0, 0, 0.9)};
  auto res = cpl::match_greedy(preds, gts, 0.1, IouMode::bev);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].pred == 1);
  CHECK(res.pairs[0].gt == 0);
  REQUIRE(res.unmatched_preds.size() == 1);
  CHECK(res.unmatched_preds[0] == 0);
  CHECK(res.unmatched_gts.empty());

  // on a css tie the earlier prediction wins
  preds[0].css = 0.9;
  res = cpl::match_greedy(preds, gts, 0.1, IouMode::bev);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].pred == 0);

  // missing css ranks below any scored prediction
  preds[0].css.reset();
  res = cpl::match_greedy(preds, gts, 0.1, IouMode::bev);
  CHECK(res.pairs[0].pred == 1);
}

TEST_CASE("match_greedy is frame-local and one-to-one") {
  const std::vector<Label> gts = {boxed(0, 0, 4, 2, 0, 0),
                                  boxed(0, 0, 4, 2, 0, 1)};
  // identical geometry, wrong frame: no match across frames
  const std::vector<Label> preds = {boxed(0, 0, 4, 2, 0, 2, 0.9),
                                    boxed(0, 0, 4, 2, 0, 1, 0.8)};
  const auto res = cpl::match_greedy(preds, gts, 0.5, IouMode::bev);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].pred == 1);
  CHECK(res.pairs[0].gt == 1);
  CHECK(res.unmatched_gts == std::vector<std::size_t>{0});

  // each prediction takes its best free gt, never sharing
  const std::vector<Label> gts2 = {boxed(0, 0, 4, 2, 0, 0),
                                   boxed(0, 2.0, 4, 2, 0, 0)};
  const std::vector<Label> preds2 = {boxed(0, 0.4, 4, 2, 0, 0, 0.9),
                                     boxed(0, 0.3, 4, 2, 0, 0, 0.5)};
  const auto res2 = cpl::match_greedy(preds2, gts2, 0.05, IouMode::bev);
  REQUIRE(res2.pairs.size() == 2);
  CHECK(res2.pairs[0].pred == 0);
  CHECK(res2.pairs[0].gt == 0);  // best overlap for the first visited
  CHECK(res2.pairs[1].pred == 1);
  CHECK(res2.pairs[1].gt == 1);  // leftover

  // below the threshold nothing pairs, even with positive overlap
  const auto res3 = cpl::match_greedy(preds2, gts2, 0.95, IouMode::bev);
  CHECK(res3.pairs.empty());
  CHECK(res3.unmatched_preds.size() == 2);
  CHECK(res3.unmatched_gts.size() == 2);

  // disjoint boxes never pair even at iou_min == 0
  const std::vector<Label> far = {boxed(50, 50, 4, 2, 0, 0, 0.9)};
  const auto res4 = cpl::match_greedy(far, gts2, 0.0, IouMode::bev);
  CHECK(res4.pairs.empty());
}

TEST_CASE("recall_precision handles empty denominators") {
  cpl::MatchResult empty;
  auto rp = cpl::recall_precision(empty, 0, 0);
  CHECK(rp.first == 0.0);
  CHECK(rp.second == 0.0);
  rp = cpl::recall_precision(empty, 5, 0);
  CHECK(rp.first == 0.0);
  CHECK(rp.second == 0.0);

  cpl::MatchResult three;
  three.pairs.resize(3);
  rp = cpl::recall_precision(three, 4, 6);
  CHECK(rp.first == doctest::Approx(0.5));
  CHECK(rp.second == doctest::Approx(0.75));
}

TEST_CASE("average_precision interpolated over 40 recall points") {
  const std::vector<Label> gts = {boxed(0, 0, 4, 2, 0, 0)};
  const Label tp = boxed(0.1, 0, 4, 2, 0, 0);
  const Label fp = boxed(30, 30, 4, 2, 0, 0);

  // true positive ranked first: precision 1 at every recall level
  CHECK(cpl::average_precision({tp, fp}, {0.9, 0.1}, gts, 0.3,
                               IouMode::bev) == doctest::Approx(1.0));
  // false positive ranked first: precision is 1/2 everywhere
  CHECK(cpl::average_precision({tp, fp}, {0.1, 0.9}, gts, 0.3,
                               IouMode::bev) == doctest::Approx(0.5));

  // half the ground truth unreachable: the upper 20 recall points earn 0
  const std::vector<Label> gts2 = {boxed(0, 0, 4, 2, 0, 0),
                                   boxed(20, 0, 4, 2, 0, 0)};
  CHECK(cpl::average_precision({tp}, {0.9}, gts2, 0.3, IouMode::bev) ==
        doctest::Approx(0.5));

  CHECK(cpl::average_precision({}, {}, gts, 0.3, IouMode::bev) == 0.0);
  CHECK(cpl::average_precision({tp}, {0.9}, {}, 0.3, IouMode::bev) == 0.0);
  CHECK_THROWS_AS(
      cpl::average_precision({tp}, {0.9, 0.1}, gts, 0.3, IouMode::bev),
      cpl::Error);
}

TEST_CASE("error_stats averages size, position, and folded angle gaps") {
  std::vector<Label> gts = {boxed(0, 0, 4.0, 2.0, 0.05, 0)};
  std::vector<Label> preds = {boxed(0.3, -0.4, 4.5, 1.8, 0.05 + M_PI - 0.02,
                                    0, 0.9)};
  preds[0].box.h = 1.4;  // gt h stays 1.5
  auto res = cpl::match_greedy(preds, gts, 0.1, IouMode::bev);
  REQUIRE(res.pairs.size() == 1);
  const auto stats = cpl::error_stats(res, preds, gts);
  CHECK(stats.matches == 1);
  CHECK(stats.size_mae == doctest::Approx((0.5 + 0.2 + 0.1) / 3.0));
  CHECK(stats.position_mae == doctest::Approx(0.5));
  // pi minus a hair folds back to the hair: rectangles are symmetric
  CHECK(stats.angle_mae == doctest::Approx(0.02));

  cpl::MatchResult empty;
  CHECK_THROWS_AS(cpl::error_stats(empty, preds, gts), cpl::Error);
}

TEST_CASE("spearman rank correlation") {
  CHECK(cpl::spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(cpl::spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
  // monotone transforms do not matter
  CHECK(cpl::spearman({1, 2, 3, 4}, {1, 100, 10000, 1000000}) ==
        doctest::Approx(1.0));
  // no variance or too short: defined as 0
  CHECK(cpl::spearman({5, 5, 5}, {1, 2, 3}) == 0.0);
  CHECK(cpl::spearman({1.0}, {2.0}) == 0.0);
  CHECK(cpl::spearman({}, {}) == 0.0);
  CHECK_THROWS_AS(cpl::spearman({1, 2}, {1, 2, 3}), cpl::Error);

  // ties get average ranks: hand value via the rank-Pearson oracle
  const std::vector<double> a = {1, 1, 2, 3, 3, 3};
  const std::vector<double> b = {2, 1, 4, 4, 6, 5};
  CHECK(cpl::spearman(a, b) == doctest::Approx(oracle::spearman_ref(a, b)));

  cpl::Rng rng(60);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y;
    const int n = 3 + static_cast<int>(rng.uniform_index(30));
    for (int i = 0; i < n; ++i) {
      // coarse quantization forces frequent ties
      x.push_back(std::floor(rng.uniform(0, 6)));
      y.push_back(std::floor(rng.uniform(0, 6)));
    }
    CHECK(cpl::spearman(x, y) ==
          doctest::Approx(oracle::spearman_ref(x, y)).epsilon(1e-12));
  }
}
