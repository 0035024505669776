#include "lgan/metrics/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace lgan::metrics {

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("average_precision: scores/labels length mismatch");
  }
  int64_t npos = 0;
  for (int l : labels) npos += l != 0;
  if (npos == 0) throw std::invalid_argument("average_precision: no positives");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  int64_t tp = 0;
  for (size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] != 0) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(npos);
}

MapResult mean_average_precision(const std::vector<std::vector<double>>& scores_per_class,
                                 const std::vector<std::vector<int>>& labels_per_class) {
  if (scores_per_class.size() != labels_per_class.size()) {
    throw std::invalid_argument("mean_average_precision: class count mismatch");
  }
  MapResult r;
  double sum = 0.0;
  int64_t counted = 0;
  for (size_t c = 0; c < scores_per_class.size(); ++c) {
    const bool any_pos =
        std::any_of(labels_per_class[c].begin(), labels_per_class[c].end(), [](int l) { return l != 0; });
    if (!any_pos) {
      r.per_class_ap.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double ap = average_precision(scores_per_class[c], labels_per_class[c]);
    r.per_class_ap.push_back(ap);
    sum += ap;
    ++counted;
  }
  r.map = counted ? sum / static_cast<double>(counted) : 0.0;
  return r;
}

int64_t dl_distance_raw(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
  const int64_t n = static_cast<int64_t>(a.size());
  const int64_t m = static_cast<int64_t>(b.size());
  // Dense relabeling for the last-occurrence table.
  std::unordered_map<int64_t, int64_t> dense;
  auto id = [&](int64_t v) {
    auto [it, fresh] = dense.emplace(v, static_cast<int64_t>(dense.size()));
    (void)fresh;
    return it->second;
  };
  std::vector<int64_t> av(n), bv(m);
  for (int64_t i = 0; i < n; ++i) av[i] = id(a[i]);
  for (int64_t j = 0; j < m; ++j) bv[j] = id(b[j]);

  const int64_t maxdist = n + m;
  std::vector<int64_t> da(dense.size(), 0);
  std::vector<std::vector<int64_t>> d(n + 2, std::vector<int64_t>(m + 2, 0));
  d[0][0] = maxdist;
  for (int64_t i = 0; i <= n; ++i) {
    d[i + 1][0] = maxdist;
    d[i + 1][1] = i;
  }
  for (int64_t j = 0; j <= m; ++j) {
    d[0][j + 1] = maxdist;
    d[1][j + 1] = j;
  }
  for (int64_t i = 1; i <= n; ++i) {
    int64_t db = 0;
    for (int64_t j = 1; j <= m; ++j) {
      const int64_t k = da[bv[j - 1]];
      const int64_t l = db;
      int64_t cost = 1;
      if (av[i - 1] == bv[j - 1]) {
        cost = 0;
        db = j;
      }
      d[i + 1][j + 1] = std::min({d[i][j] + cost,                          // substitute / match
                                  d[i + 1][j] + 1,                          // insert
                                  d[i][j + 1] + 1,                          // delete
                                  d[k][l] + (i - k - 1) + 1 + (j - l - 1)});  // transpose
    }
    da[av[i - 1]] = i;
  }
  return d[n + 1][m + 1];
}

double dl_distance(const std::vector<int64_t>& gt, const std::vector<int64_t>& pred) {
  if (gt.empty()) throw std::invalid_argument("dl_distance: ground-truth sequence is empty");
  return static_cast<double>(dl_distance_raw(gt, pred)) / static_cast<double>(gt.size());
}

namespace {

struct Counts {
  int64_t inter = 0, uni = 0;
};

Counts restricted_counts(const Tensor<float>* pred, const Tensor<float>& gt,
                         const Tensor<float>* region) {
  Counts c;
  const auto& g = gt.data();
  for (size_t p = 0; p < g.size(); ++p) {
    if (region && (*region).data()[p] == 0.f) continue;
    const bool gp = g[p] != 0.f;
    const bool pp = pred && pred->data()[p] != 0.f;
    c.inter += gp && pp;
    c.uni += gp || pp;
  }
  return c;
}

void check_mask_shapes(const char* op, const MaskMap& a, const MaskMap& b) {
  for (const auto& [c, m] : a) {
    auto it = b.find(c);
    if (it != b.end() && it->second.shape() != m.shape()) {
      throw std::invalid_argument(std::string(op) + ": mask shape mismatch for class " +
                                  std::to_string(c));
    }
  }
}

}  // namespace

IouResult multilayer_miou(const MaskMap& pred, const MaskMap& gt_amodal) {
  check_mask_shapes("multilayer_miou", pred, gt_amodal);
  IouResult r;
  double sum = 0.0;
  int64_t counted = 0;
  for (const auto& [c, gt] : gt_amodal) {
    auto it = pred.find(c);
    const Counts k = restricted_counts(it == pred.end() ? nullptr : &it->second, gt, nullptr);
    const double iou = k.uni ? static_cast<double>(k.inter) / static_cast<double>(k.uni) : 0.0;
    r.per_class[c] = iou;
    sum += iou;
    ++counted;
  }
  // Spurious predictions for classes absent from gt: reported, not averaged.
  for (const auto& [c, pm] : pred) {
    if (!gt_amodal.count(c)) r.per_class[c] = 0.0;
  }
  r.mean = counted ? sum / static_cast<double>(counted) : 0.0;
  return r;
}

OcclusionResult occlusion_breakdown(const MaskMap& pred, const MaskMap& gt_amodal,
                                    const MaskMap& gt_visible) {
  check_mask_shapes("occlusion_breakdown", pred, gt_amodal);
  check_mask_shapes("occlusion_breakdown", gt_visible, gt_amodal);
  OcclusionResult r;
  double vis_sum = 0.0, occ_sum = 0.0;
  int64_t vis_n = 0, occ_n = 0;
  for (const auto& [c, gt] : gt_amodal) {
    auto vit = gt_visible.find(c);
    if (vit == gt_visible.end()) {
      throw std::invalid_argument("occlusion_breakdown: missing visible mask for class " +
                                  std::to_string(c));
    }
    const auto& vis = vit->second;
    for (size_t p = 0; p < gt.data().size(); ++p) {
      if (vis.data()[p] != 0.f && gt.data()[p] == 0.f) {
        throw std::invalid_argument("occlusion_breakdown: visible mask exceeds amodal for class " +
                                    std::to_string(c));
      }
    }
    auto pit = pred.find(c);
    const Tensor<float>* pm = pit == pred.end() ? nullptr : &pit->second;

    const Counts kv = restricted_counts(pm, gt, &vis);
    if (kv.uni) {
      const double iou = static_cast<double>(kv.inter) / static_cast<double>(kv.uni);
      r.per_class_visible[c] = iou;
      vis_sum += iou;
      ++vis_n;
    }
    // Occluded region = amodal minus visible.
    std::vector<float> occ(gt.data().size());
    for (size_t p = 0; p < occ.size(); ++p) {
      occ[p] = (gt.data()[p] != 0.f && vis.data()[p] == 0.f) ? 1.f : 0.f;
    }
    Tensor<float> occ_region = Tensor<float>::leaf(gt.shape(), std::move(occ));
    const Counts ko = restricted_counts(pm, gt, &occ_region);
    if (ko.uni) {
      const double iou = static_cast<double>(ko.inter) / static_cast<double>(ko.uni);
      r.per_class_occluded[c] = iou;
      occ_sum += iou;
      ++occ_n;
    }
  }
  r.miou_visible = vis_n ? vis_sum / static_cast<double>(vis_n) : 0.0;
  r.miou_occluded = occ_n ? occ_sum / static_cast<double>(occ_n) : 0.0;
  return r;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  auto to_nullable = [](const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) {
      if (std::isnan(x)) {
        arr.push_back(nullptr);
      } else {
        arr.push_back(x);
      }
    }
    return arr;
  };
  j["per_class_ap"] = to_nullable(report.per_class_ap);
  j["map"] = report.map;
  j["mean_dl"] = report.mean_dl;
  j["per_class_iou"] = to_nullable(report.per_class_iou);
  j["miou"] = report.miou;
  j["miou_occluded"] = report.miou_occluded;
  j["miou_visible"] = report.miou_visible;
  j["n_images"] = report.n_images;
  return j.dump(2);
}

}  // namespace lgan::metrics
