/* Copyright 2026 The collage_forge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "collage_forge/core_model.hpp"
#include "collage_forge/csv.hpp"
#include "collage_forge/dataset_io.hpp"
#include "collage_forge/errors.hpp"

namespace cforge {

/// |a ∩ b| / |a ∪ b| over pixel cells; 0 when disjoint.
inline double iou(const Rect& a, const Rect& b) {
  const std::int64_t inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

struct GroundTruthBox {
  FrameRef frame;
  Rect rect;
  std::string species;
};

enum class MatchFlag : std::uint8_t { kFalsePositive, kTruePositive, kIgnored };

struct MatchResult {
  std::vector<std::size_t> order;  // detection indices, highest score first
  std::vector<MatchFlag> flags;    // parallel to `order`
  std::vector<int> matched_gt;     // parallel to `order`, -1 when unmatched
};

/// Score-descending order; ties go to the smaller x, then the smaller y.
inline std::vector<std::size_t> detection_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return std::tie(dets[a].rect.x, dets[a].rect.y) < std::tie(dets[b].rect.x, dets[b].rect.y);
  });
  return order;
}

namespace detail {

inline bool outside(std::int64_t area, std::int64_t lo, std::int64_t hi) {
  return area < lo || area > hi;
}

}  // namespace detail

/// Greedy matching for one frame and one class. Each detection, in score
/// order, takes the unmatched ground truth with the highest IoU >= thresh
/// (ties: lower index). Ground truth outside [area_lo, area_hi] is "ignored":
/// it is only taken when no regular ground truth qualifies, and the detection
/// that takes it is ignored too, as is an unmatched detection whose own area
/// falls outside the range.
inline MatchResult match_detections(std::span<const Detection> dets,
                                    std::span<const Rect> gts, double thresh,
                                    std::int64_t area_lo = 0,
                                    std::int64_t area_hi = INT64_MAX) {
  MatchResult out;
  out.order = detection_order(dets);
  std::vector<bool> gt_ignored(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_ignored[g] = detail::outside(gts[g].area(), area_lo, area_hi);
  }
  std::vector<bool> taken(gts.size(), false);
  for (const auto d : out.order) {
    int best = -1;
    for (const bool want_ignored : {false, true}) {
      double best_iou = -1.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g] || gt_ignored[g] != want_ignored) continue;
        const double v = iou(dets[d].rect, gts[g]);
        if (v >= thresh && v > best_iou) {
          best_iou = v;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) break;
    }
    MatchFlag flag = MatchFlag::kFalsePositive;
    if (best >= 0) {
      taken[best] = true;
      flag = gt_ignored[best] ? MatchFlag::kIgnored : MatchFlag::kTruePositive;
    } else if (detail::outside(dets[d].rect.area(), area_lo, area_hi)) {
      flag = MatchFlag::kIgnored;
    }
    out.flags.push_back(flag);
    out.matched_gt.push_back(best);
  }
  return out;
}

struct ScoredFlag {
  double score = 0.0;
  bool true_positive = false;
};

/// 101-point interpolated AP: mean over recall levels r = 0, 0.01, ..., 1 of
/// the best precision reached at any recall >= r (0 if r is never reached).
/// Detections are ranked by descending score, ties kept in input order.
/// Undefined when n_gt == 0.
inline std::optional<double> average_precision(std::vector<ScoredFlag> dets, std::int64_t n_gt) {
  if (n_gt <= 0) return std::nullopt;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
  const std::size_t n = dets.size();
  std::vector<std::int64_t> tp(n);
  std::vector<double> precision(n);
  std::int64_t cum_tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cum_tp += dets[i].true_positive ? 1 : 0;
    tp[i] = cum_tp;
    precision[i] = static_cast<double>(cum_tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0.0;
  std::size_t i = 0;
  for (std::int64_t k = 0; k <= 100; ++k) {
    // recall(i) >= k/100  <=>  100 * tp[i] >= k * n_gt, exactly.
    while (i < n && 100 * tp[i] < k * n_gt) ++i;
    if (i == n) break;
    sum += precision[i];
  }
  return sum / 101.0;
}

struct AreaRange {
  std::string name;
  std::int64_t lo = 0;
  std::int64_t hi = INT64_MAX;
};

struct EvalConfig {
  std::vector<double> iou_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                        0.75, 0.80, 0.85, 0.90, 0.95};
  AreaRange small{"small", 0, 32 * 32};
  AreaRange medium{"medium", 32 * 32, 96 * 96};
  AreaRange large{"large", 96 * 96, INT64_MAX};

  void validate() const {
    if (iou_thresholds.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "need at least one IoU threshold");
    }
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
      const double t = iou_thresholds[i];
      if (!(t > 0.0 && t <= 1.0) || (i && !(t > iou_thresholds[i - 1]))) {
        throw Error(ErrorKind::kInvalidArgument,
                    "IoU thresholds must be strictly increasing within (0, 1]");
      }
    }
  }
};

struct EvalResult {
  std::map<std::string, std::optional<double>> per_class_ap;  // at IoU 0.5
  std::optional<double> map;                                  // mean of per_class_ap
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap50_95;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
};

namespace detail {

using Grouped = std::map<std::pair<std::string, std::int64_t>,
                         std::pair<std::vector<Detection>, std::vector<Rect>>>;

inline std::optional<double> mean_defined(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

/// AP for one class at one threshold and area range. Frames are visited in
/// (video_id, frame_index) order; the global ranking is a stable sort of the
/// per-frame score orders.
inline std::optional<double> class_ap(const Grouped& frames, double thresh,
                                      const AreaRange& range) {
  std::int64_t n_gt = 0;
  std::vector<ScoredFlag> flags;
  for (const auto& [key, content] : frames) {
    const auto& [dets, gts] = content;
    for (const auto& g : gts) {
      if (!outside(g.area(), range.lo, range.hi)) ++n_gt;
    }
    const auto m = match_detections(dets, gts, thresh, range.lo, range.hi);
    for (std::size_t i = 0; i < m.order.size(); ++i) {
      if (m.flags[i] == MatchFlag::kIgnored) continue;
      flags.push_back({dets[m.order[i]].score, m.flags[i] == MatchFlag::kTruePositive});
    }
  }
  return average_precision(std::move(flags), n_gt);
}

}  // namespace detail

/// AP50 / mAP, AP75, AP50:95 and area-restricted AP over every class that has
/// ground truth. Classes without ground truth are left out of every mean.
inline EvalResult evaluate(const std::vector<GroundTruthBox>& gts,
                           const std::vector<Detection>& dets, const EvalConfig& cfg = {}) {
  cfg.validate();
  std::map<std::string, detail::Grouped> by_class;
  for (const auto& g : gts) {
    by_class[g.species][{g.frame.video_id, g.frame.frame_index}].second.push_back(g.rect);
  }
  for (const auto& d : dets) {
    // Detections of classes absent from ground truth cannot change any
    // defined metric.
    auto it = by_class.find(d.species);
    if (it == by_class.end()) continue;
    it->second[{d.frame.video_id, d.frame.frame_index}].first.push_back(d);
  }

  EvalResult r;
  const AreaRange all{"all", 0, INT64_MAX};
  std::vector<std::optional<double>> at50, at75, suite, small, medium, large;
  for (const auto& [species, frames] : by_class) {
    const auto ap = detail::class_ap(frames, 0.5, all);
    r.per_class_ap[species] = ap;
    at50.push_back(ap);
    at75.push_back(detail::class_ap(frames, 0.75, all));
    for (const double t : cfg.iou_thresholds) {
      suite.push_back(detail::class_ap(frames, t, all));
      small.push_back(detail::class_ap(frames, t, cfg.small));
      medium.push_back(detail::class_ap(frames, t, cfg.medium));
      large.push_back(detail::class_ap(frames, t, cfg.large));
    }
  }
  r.map = detail::mean_defined(at50);
  r.ap50 = r.map;
  r.ap75 = detail::mean_defined(at75);
  r.ap50_95 = detail::mean_defined(suite);
  r.ap_small = detail::mean_defined(small);
  r.ap_medium = detail::mean_defined(medium);
  r.ap_large = detail::mean_defined(large);
  return r;
}

// ---------------------------------------------------------------------------
// File formats

inline const csv::Row kDetectionsHeader = {"video_id", "frame_index", "x",       "y",
                                           "w",        "h",           "species", "score"};

inline std::vector<Detection> read_detections(const std::filesystem::path& path) {
  const auto t = csv::read_table(path, kDetectionsHeader);
  std::vector<Detection> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Detection d;
    d.frame.video_id = t.rows[i][0];
    d.frame.frame_index = csv::parse_int<std::int64_t>(t, i, 1);
    d.rect = Rect{csv::parse_int<std::int32_t>(t, i, 2), csv::parse_int<std::int32_t>(t, i, 3),
                  csv::parse_int<std::int32_t>(t, i, 4), csv::parse_int<std::int32_t>(t, i, 5)};
    if (!d.rect.valid()) t.fail(i, "invalid detection rect");
    d.species = t.rows[i][6];
    d.score = csv::parse_real(t, i, 7);
    if (!(d.score >= 0.0 && d.score <= 1.0)) t.fail(i, "score must lie in [0, 1]");
    out.push_back(std::move(d));
  }
  return out;
}

inline void write_detections(const std::filesystem::path& path,
                             const std::vector<Detection>& dets) {
  csv::Writer w(path);
  w.row(kDetectionsHeader);
  for (const auto& d : dets) {
    char score[32];
    std::snprintf(score, sizeof score, "%.17g", d.score);
    w.row({d.frame.video_id, std::to_string(d.frame.frame_index), std::to_string(d.rect.x),
           std::to_string(d.rect.y), std::to_string(d.rect.w), std::to_string(d.rect.h),
           d.species, score});
  }
  w.close();
}

/// Flattens a COCO container into ground-truth boxes keyed by each image's
/// (video_id, frame_index). Crowd annotations are dropped.
inline std::vector<GroundTruthBox> ground_truth_from_coco(const CocoDataset& coco) {
  std::map<std::int64_t, const CocoImage*> images;
  for (const auto& im : coco.images) images[im.id] = &im;
  std::map<std::int64_t, std::string> names;
  for (const auto& c : coco.categories) names[c.id] = c.name;
  std::vector<GroundTruthBox> out;
  for (const auto& a : coco.annotations) {
    if (a.iscrowd) continue;
    const auto im = images.find(a.image_id);
    const auto cat = names.find(a.category_id);
    if (im == images.end() || cat == names.end()) {
      throw Error(ErrorKind::kParse,
                  "annotation " + std::to_string(a.id) + " has dangling image or category");
    }
    GroundTruthBox g;
    g.frame.video_id = im->second->video_id;
    g.frame.frame_index = im->second->frame_index;
    g.rect = a.bbox;
    g.species = cat->second;
    out.push_back(std::move(g));
  }
  return out;
}

/// Throws a vocabulary error when a detection names a species that is not a
/// category of the ground truth.
inline void check_vocabulary(const CocoDataset& coco, const std::vector<Detection>& dets) {
  std::set<std::string> known;
  for (const auto& c : coco.categories) known.insert(c.name);
  for (const auto& d : dets) {
    if (!known.count(d.species)) {
      throw Error(ErrorKind::kVocabulary,
                  "detection species '" + d.species + "' is not a ground-truth category");
    }
  }
}

}  // namespace cforge
