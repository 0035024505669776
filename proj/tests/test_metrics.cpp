#include <doctest.h>

#include <cmath>

#include "lgan/core/rng.hpp"
#include "lgan/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace lgan;
using namespace lgan::metrics;

namespace {

Tensor<float> mask_from(std::vector<float> v, int64_t h, int64_t w) {
  return Tensor<float>::leaf({1, h, w}, std::move(v));
}

std::vector<int64_t> random_seq(Rng& rng, int alphabet, int64_t max_len, bool distinct) {
  const int64_t len = rng.uniform_int(distinct ? 1 : 0, max_len);
  std::vector<int64_t> s;
  if (distinct) {
    std::vector<int64_t> pool(alphabet);
    for (int i = 0; i < alphabet; ++i) pool[i] = i;
    for (int64_t i = 0; i < len && !pool.empty(); ++i) {
      const int64_t j = rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1);
      s.push_back(pool[j]);
      pool.erase(pool.begin() + j);
    }
  } else {
    for (int64_t i = 0; i < len; ++i) s.push_back(rng.uniform_int(0, alphabet - 1));
  }
  return s;
}

}  // namespace

TEST_CASE("average precision on the worked examples") {
  // Perfect separation.
  CHECK(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  // labels [1,0,1] with scores [0.9,0.8,0.7]: (1/1 + 2/3) / 2.
  CHECK(average_precision({0.9, 0.8, 0.7}, {1, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
  // mAP of those two classes.
  MapResult r = mean_average_precision({{0.9, 0.8, 0.7}, {0.9, 0.8, 0.2}},
                                       {{1, 0, 1}, {1, 1, 0}});
  CHECK(r.map == doctest::Approx((1.0 + 2.0 / 3.0) / 4 + 0.5));
  CHECK_THROWS_AS(average_precision({0.5, 0.4}, {0, 0}), std::invalid_argument);

  // A class with no positives is reported NaN and skipped in the mean.
  MapResult r2 = mean_average_precision({{0.9}, {0.1, 0.2}}, {{1}, {0, 0}});
  CHECK(r2.map == doctest::Approx(1.0));
  CHECK(std::isnan(r2.per_class_ap[1]));
}

TEST_CASE("average precision matches the rank-count oracle exactly") {
  Rng rng(91);
  for (int trial = 0; trial < 500; ++trial) {
    const int64_t n = rng.uniform_int(1, 24);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool any = false;
    for (int64_t i = 0; i < n; ++i) {
      // Coarse score grid to force plenty of ties.
      scores[i] = rng.uniform_int(0, 6) / 6.0;
      labels[i] = rng.uniform() < 0.4;
      any = any || labels[i];
    }
    if (!any) labels[static_cast<size_t>(rng.uniform_int(0, n - 1))] = 1;
    CHECK(average_precision(scores, labels) == oracle::ap_rank_count(scores, labels));
  }
}

TEST_CASE("average precision is invariant under monotone score transforms") {
  Rng rng(92);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t n = rng.uniform_int(2, 16);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int64_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform_int(0, 9) / 9.0;
      labels[i] = rng.uniform() < 0.5;
    }
    labels[0] = 1;
    std::vector<double> warped(n);
    for (int64_t i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]) + 7.0;
    CHECK(average_precision(scores, labels) == average_precision(warped, labels));
  }
}

TEST_CASE("DL distance worked examples") {
  CHECK(dl_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  // One adjacent transposition, normalized by gt length 3.
  CHECK(dl_distance({0, 1, 2}, {1, 0, 2}) == doctest::Approx(1.0 / 3));
  // The classic unrestricted case: CA -> AC -> ABC is two edits, not three.
  CHECK(dl_distance_raw({2, 0}, {0, 1, 2}) == 2);
  // Normalized distance may exceed 1 when the prediction is longer.
  CHECK(dl_distance({5}, {1, 2, 3}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(dl_distance({}, {1}), std::invalid_argument);
}

TEST_CASE("DL distance is symmetric before normalization") {
  Rng rng(93);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = random_seq(rng, 6, 6, false);
    auto b = random_seq(rng, 6, 6, false);
    CHECK(dl_distance_raw(a, b) == dl_distance_raw(b, a));
  }
}

TEST_CASE("DL matches the BFS edit-script oracle, exhaustive alphabet 3 up to length 4") {
  // Enumerate every sequence over {0,1,2} of length <= 4 (121 of them) and
  // compare all ordered pairs through single-source oracle balls.
  std::vector<std::vector<int64_t>> seqs;
  for (int64_t len = 0; len <= 4; ++len) {
    std::vector<int64_t> s(len, 0);
    while (true) {
      seqs.push_back(s);
      int64_t i = len - 1;
      while (i >= 0 && s[i] == 2) s[i--] = 0;
      if (i < 0) break;
      ++s[i];
    }
  }
  REQUIRE(seqs.size() == 121);
  int64_t mismatches = 0;
  for (const auto& a : seqs) {
    const auto ball = oracle::dl_bfs_ball(a, 3, 8, 4 + 2);
    for (const auto& b : seqs) {
      const auto it = ball.find(oracle::dl_pack(b));
      REQUIRE(it != ball.end());
      mismatches += dl_distance_raw(a, b) != it->second;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("DL matches the bidirectional BFS oracle on random alphabet-6 pairs") {
  Rng rng(94);
  int64_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_seq(rng, 6, 6, trial % 2 == 0);
    auto b = random_seq(rng, 6, 6, trial % 3 == 0);
    if (a.empty() && b.empty()) continue;
    mismatches += dl_distance_raw(a, b) != oracle::dl_bfs_pair(a, b, 6);
  }
  CHECK(mismatches == 0);
}

TEST_CASE("random orderings score near the reference baselines") {
  // Ten classes, sequence lengths drawn like the reference corpus (2.9 +/- 1.1
  // labels per image, clipped to [1,10]). Two baselines are quoted there:
  // random labels 0.91, random permutation of the oracle labels 0.42.
  Rng rng(95);
  auto paper_len = [&]() {
    const double v = std::round(2.9 + 1.1 * rng.normal());
    return static_cast<int64_t>(std::min(10.0, std::max(1.0, v)));
  };
  auto perm_of = [&](int64_t len) {
    std::vector<int64_t> pool, s;
    for (int i = 0; i < 10; ++i) pool.push_back(i);
    for (int64_t i = 0; i < len; ++i) {
      const int64_t j = rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1);
      s.push_back(pool[j]);
      pool.erase(pool.begin() + j);
    }
    return s;
  };
  double rand_sum = 0, perm_sum = 0;
  const int64_t n = 4000;
  for (int64_t t = 0; t < n; ++t) {
    const int64_t len = paper_len();
    auto gt = perm_of(len);
    rand_sum += dl_distance(gt, perm_of(len));
    auto perm = gt;
    for (int64_t i = len - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    perm_sum += dl_distance(gt, perm);
  }
  const double rand_mean = rand_sum / n;
  const double perm_mean = perm_sum / n;
  CHECK(rand_mean > 0.80);
  CHECK(rand_mean < 1.05);
  CHECK(perm_mean > 0.33);
  CHECK(perm_mean < 0.48);
}

TEST_CASE("multilayer IoU worked examples") {
  // pred == gt -> 1 per class.
  MaskMap gt, pred;
  gt[0] = mask_from({1, 1, 0, 0}, 2, 2);
  pred[0] = mask_from({1, 1, 0, 0}, 2, 2);
  IouResult r = multilayer_miou(pred, gt);
  CHECK(r.per_class[0] == doctest::Approx(1.0));
  CHECK(r.mean == doctest::Approx(1.0));

  // pred covers exactly half of gt, no false positives -> 0.5.
  pred[0] = mask_from({1, 0, 0, 0}, 2, 2);
  gt[0] = mask_from({1, 1, 0, 0}, 2, 2);
  CHECK(multilayer_miou(pred, gt).per_class[0] == doctest::Approx(0.5));

  // 4x4 case: |gt| = 8, |pred| = 8, intersection 4 -> 4/12.
  std::vector<float> g(16, 0.f), p(16, 0.f);
  for (int i = 0; i < 8; ++i) g[i] = 1.f;
  for (int i = 4; i < 12; ++i) p[i] = 1.f;
  gt[0] = mask_from(g, 4, 4);
  pred[0] = mask_from(p, 4, 4);
  CHECK(multilayer_miou(pred, gt).per_class[0] == doctest::Approx(4.0 / 12.0));

  // A class predicted but absent from gt is reported 0 and not averaged.
  pred[3] = mask_from(std::vector<float>{1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 4, 4);
  IouResult r2 = multilayer_miou(pred, gt);
  CHECK(r2.per_class[3] == 0.0);
  CHECK(r2.mean == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("multilayer IoU equals brute-force counting on random 8x8 masks") {
  Rng rng(96);
  for (int trial = 0; trial < 300; ++trial) {
    MaskMap pred, gt;
    for (int64_t c = 0; c < 3; ++c) {
      std::vector<float> g(64), p(64);
      bool any = false;
      for (int i = 0; i < 64; ++i) {
        g[i] = rng.uniform() < 0.4 ? 1.f : 0.f;
        p[i] = rng.uniform() < 0.4 ? 1.f : 0.f;
        any = any || g[i] != 0.f;
      }
      if (!any) g[0] = 1.f;
      if (rng.uniform() < 0.8) gt[c] = mask_from(g, 8, 8);
      if (rng.uniform() < 0.8) pred[c] = mask_from(p, 8, 8);
    }
    IouResult r = multilayer_miou(pred, gt);
    double sum = 0;
    int64_t cnt = 0;
    for (const auto& [c, gm] : gt) {
      std::vector<float> pm = pred.count(c) ? pred[c].data() : std::vector<float>(64, 0.f);
      const auto k = oracle::brute_counts(pm, gm.data(), nullptr);
      const double iou = k.uni ? static_cast<double>(k.inter) / k.uni : 0.0;
      CHECK(r.per_class[c] == iou);
      sum += iou;
      ++cnt;
    }
    if (cnt) CHECK(r.mean == sum / cnt);
  }
}

TEST_CASE("multilayer IoU is invariant to class enumeration order") {
  Rng rng(97);
  std::vector<float> g0(64), g1(64), p0(64), p1(64);
  for (int i = 0; i < 64; ++i) {
    g0[i] = rng.uniform() < 0.5;
    g1[i] = rng.uniform() < 0.5;
    p0[i] = rng.uniform() < 0.5;
    p1[i] = rng.uniform() < 0.5;
  }
  MaskMap gt_a, gt_b, pr_a, pr_b;
  gt_a[0] = mask_from(g0, 8, 8);
  gt_a[1] = mask_from(g1, 8, 8);
  gt_b[1] = mask_from(g1, 8, 8);
  gt_b[0] = mask_from(g0, 8, 8);
  pr_a[0] = mask_from(p0, 8, 8);
  pr_a[1] = mask_from(p1, 8, 8);
  pr_b[1] = mask_from(p1, 8, 8);
  pr_b[0] = mask_from(p0, 8, 8);
  IouResult ra = multilayer_miou(pr_a, gt_a);
  IouResult rb = multilayer_miou(pr_b, gt_b);
  CHECK(ra.mean == rb.mean);
  CHECK(ra.per_class == rb.per_class);
}

TEST_CASE("occlusion breakdown worked examples") {
  // gt amodal 2x4: full top row plus two occluded pixels below.
  MaskMap gt, vis, pred;
  gt[0] = mask_from({1, 1, 1, 1, 1, 1, 0, 0}, 2, 4);
  vis[0] = mask_from({1, 1, 1, 1, 0, 0, 0, 0}, 2, 4);

  // pred == visible: perfect on visible, zero on occluded.
  pred[0] = vis[0];
  OcclusionResult r = occlusion_breakdown(pred, gt, vis);
  CHECK(r.miou_visible == doctest::Approx(1.0));
  CHECK(r.miou_occluded == doctest::Approx(0.0));

  // pred == amodal: perfect on both.
  pred[0] = gt[0];
  r = occlusion_breakdown(pred, gt, vis);
  CHECK(r.miou_visible == doctest::Approx(1.0));
  CHECK(r.miou_occluded == doctest::Approx(1.0));

  // Occluded strip of 2 pixels with pred covering 1 -> 0.5.
  pred[0] = mask_from({1, 1, 1, 1, 1, 0, 0, 0}, 2, 4);
  r = occlusion_breakdown(pred, gt, vis);
  CHECK(r.miou_occluded == doctest::Approx(0.5));

  // A fully visible class is excluded from the occluded mean.
  gt[1] = mask_from({0, 0, 0, 0, 0, 0, 1, 1}, 2, 4);
  vis[1] = gt[1];
  pred[1] = gt[1];
  r = occlusion_breakdown(pred, gt, vis);
  CHECK(r.per_class_occluded.count(1) == 0);
  CHECK(r.miou_occluded == doctest::Approx(0.5));

  // Visible mask exceeding amodal is rejected.
  vis[1] = mask_from({1, 0, 0, 0, 0, 0, 1, 1}, 2, 4);
  CHECK_THROWS_AS(occlusion_breakdown(pred, gt, vis), std::invalid_argument);
}

TEST_CASE("occlusion breakdown equals restricted brute-force counting") {
  Rng rng(98);
  for (int trial = 0; trial < 300; ++trial) {
    MaskMap pred, gt, vis;
    std::vector<float> g(64), v(64), p(64);
    bool any_g = false;
    for (int i = 0; i < 64; ++i) {
      g[i] = rng.uniform() < 0.5 ? 1.f : 0.f;
      v[i] = (g[i] != 0.f && rng.uniform() < 0.6) ? 1.f : 0.f;
      p[i] = rng.uniform() < 0.4 ? 1.f : 0.f;
      any_g = any_g || g[i] != 0.f;
    }
    if (!any_g) g[0] = v[0] = 1.f;
    gt[0] = mask_from(g, 8, 8);
    vis[0] = mask_from(v, 8, 8);
    pred[0] = mask_from(p, 8, 8);
    OcclusionResult r = occlusion_breakdown(pred, gt, vis);

    std::vector<float> occ(64);
    for (int i = 0; i < 64; ++i) occ[i] = (g[i] != 0.f && v[i] == 0.f) ? 1.f : 0.f;
    const auto kv = oracle::brute_counts(p, g, &v);
    const auto ko = oracle::brute_counts(p, g, &occ);
    if (kv.uni) CHECK(r.per_class_visible[0] == static_cast<double>(kv.inter) / kv.uni);
    if (ko.uni) CHECK(r.per_class_occluded[0] == static_cast<double>(ko.inter) / ko.uni);
  }
}

TEST_CASE("eval report serializes with the exact field names") {
  EvalReport rep;
  rep.per_class_ap = {1.0, std::numeric_limits<double>::quiet_NaN()};
  rep.map = 1.0;
  rep.mean_dl = 0.25;
  rep.per_class_iou = {0.5, 0.75};
  rep.miou = 0.625;
  rep.miou_occluded = 0.1;
  rep.miou_visible = 0.9;
  rep.n_images = 42;
  const std::string j = eval_report_to_json(rep);
  for (const char* field : {"per_class_ap", "\"map\"", "mean_dl", "per_class_iou", "\"miou\"",
                            "miou_occluded", "miou_visible", "n_images"}) {
    CHECK(j.find(field) != std::string::npos);
  }
  CHECK(j.find("null") != std::string::npos);  // NaN AP -> null
}
