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

// Slow, straight-line reference implementations used only by the tests.
// None of these call into the library code paths they are compared against.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collage_forge/core_model.hpp"
#include "collage_forge/image.hpp"

namespace oracle {

using cforge::CabofLabel;
using cforge::Detection;
using cforge::FrameRef;
using cforge::Placement;
using cforge::Rect;

/// Frame survives iff every same-video CABOF timestamp is more than
/// `buffer_ms` away.
inline std::vector<FrameRef> mine(const std::vector<FrameRef>& frames,
                                  const std::vector<CabofLabel>& cabof, std::int64_t buffer_ms) {
  std::vector<FrameRef> out;
  for (const auto& f : frames) {
    bool keep = true;
    for (const auto& c : cabof) {
      if (c.video_id != f.video_id) continue;
      const std::int64_t d = f.timestamp.millis - c.timestamp.millis;
      if ((d < 0 ? -d : d) <= buffer_ms) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(f);
  }
  return out;
}

/// Per-pixel visibility: cells of each placement not covered by a placement
/// with greater paint order. Indexed by paint order.
inline std::vector<std::int64_t> visible_pixels(const std::vector<Placement>& ps) {
  std::vector<std::int64_t> out(ps.size(), 0);
  for (const auto& p : ps) {
    std::int64_t n = 0;
    for (std::int32_t y = p.dest.y; y < p.dest.y + p.dest.h; ++y) {
      for (std::int32_t x = p.dest.x; x < p.dest.x + p.dest.w; ++x) {
        bool covered = false;
        for (const auto& q : ps) {
          if (q.paint_order > p.paint_order && x >= q.dest.x && x < q.dest.x + q.dest.w &&
              y >= q.dest.y && y < q.dest.y + q.dest.h) {
            covered = true;
            break;
          }
        }
        if (!covered) ++n;
      }
    }
    out[p.paint_order] = n;
  }
  return out;
}

/// Ownership mask: for each pixel, the paint order of the last placement
/// covering it, or -1.
inline std::vector<int> owner_mask(std::int32_t width, std::int32_t height,
                                   const std::vector<Placement>& ps) {
  std::vector<int> mask(static_cast<std::size_t>(width) * height, -1);
  std::vector<Placement> sorted = ps;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.paint_order < b.paint_order; });
  for (const auto& p : sorted) {
    for (std::int32_t y = p.dest.y; y < p.dest.y + p.dest.h; ++y) {
      for (std::int32_t x = p.dest.x; x < p.dest.x + p.dest.w; ++x) {
        mask[static_cast<std::size_t>(y) * width + x] = p.paint_order;
      }
    }
  }
  return mask;
}

inline double iou(const Rect& a, const Rect& b) {
  // Count overlapping columns and rows explicitly.
  std::int64_t cols = 0, rows = 0;
  for (std::int32_t x = a.x; x < a.x + a.w; ++x) cols += (x >= b.x && x < b.x + b.w);
  for (std::int32_t y = a.y; y < a.y + a.h; ++y) rows += (y >= b.y && y < b.y + b.h);
  const std::int64_t inter = cols * rows;
  const std::int64_t uni = std::int64_t{a.w} * a.h + std::int64_t{b.w} * b.h - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Exhaustive assignment: among all injective partial assignments of
/// detections (in the given rank order) to ground truths with IoU >= thresh,
/// pick the one whose per-rank IoU sequence is lexicographically largest
/// (unmatched counts as -1, ties on IoU prefer the lower gt index). Returns
/// the matched gt index per rank, -1 for none.
inline std::vector<int> exhaustive_match(const std::vector<Rect>& ranked_dets,
                                         const std::vector<Rect>& gts, double thresh) {
  std::vector<int> best, cur;
  std::vector<double> best_key, cur_key;
  bool have_best = false;
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == ranked_dets.size()) {
      if (!have_best || cur_key > best_key) {
        have_best = true;
        best = cur;
        best_key = cur_key;
      }
      return;
    }
    // gts in ascending index order so equal keys keep the lowest index.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double v = oracle::iou(ranked_dets[i], gts[g]);
      if (v < thresh) continue;
      used[g] = true;
      cur.push_back(static_cast<int>(g));
      cur_key.push_back(v);
      // Prefer lower index on equal IoU: encode a tiny index penalty.
      cur_key.back() -= 1e-12 * static_cast<double>(g);
      rec(i + 1);
      cur.pop_back();
      cur_key.pop_back();
      used[g] = false;
    }
    cur.push_back(-1);
    cur_key.push_back(-1.0);
    rec(i + 1);
    cur.pop_back();
    cur_key.pop_back();
  };
  if (ranked_dets.empty()) return {};
  rec(0);
  return best;
}

/// 101-point AP straight from the definition: for each recall level k/100,
/// the maximum precision over all ranks whose recall is >= k/100.
inline std::optional<double> ap_101(const std::vector<std::pair<double, bool>>& scored,
                                    std::int64_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  std::vector<std::pair<double, bool>> s = scored;
  std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double total = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double best = 0.0;
    for (std::size_t rank = 0; rank < s.size(); ++rank) {
      std::int64_t tp = 0;
      for (std::size_t j = 0; j <= rank; ++j) tp += s[j].second;
      if (100 * tp >= k * n_gt) {
        best = std::max(best, static_cast<double>(tp) / static_cast<double>(rank + 1));
      }
    }
    total += best;
  }
  return total / 101.0;
}

struct RefBox {
  std::string image;
  Rect rect;
  std::string cls;
  double score = 0.0;
};

/// Reference AP for one class, threshold and area range [lo, hi] with
/// COCO-style ignore handling, written without the library's data layout.
inline std::optional<double> class_ap(const std::vector<RefBox>& gts,
                                      const std::vector<RefBox>& dets, const std::string& cls,
                                      double thresh, std::int64_t lo, std::int64_t hi) {
  auto out_of_range = [&](const Rect& r) {
    const std::int64_t a = std::int64_t{r.w} * r.h;
    return a < lo || a > hi;
  };
  std::map<std::string, std::pair<std::vector<RefBox>, std::vector<RefBox>>> per_image;
  std::int64_t n_gt = 0;
  for (const auto& g : gts) {
    if (g.cls != cls) continue;
    per_image[g.image].first.push_back(g);
    if (!out_of_range(g.rect)) ++n_gt;
  }
  for (const auto& d : dets) {
    if (d.cls == cls) per_image[d.image].second.push_back(d);
  }
  std::vector<std::pair<double, bool>> scored;
  for (auto& [image, content] : per_image) {
    auto& [g, d] = content;
    std::stable_sort(d.begin(), d.end(), [](const RefBox& a, const RefBox& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
      return a.rect.y < b.rect.y;
    });
    std::vector<bool> taken(g.size(), false);
    for (const auto& det : d) {
      int pick = -1;
      double pick_iou = -1;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (taken[k] || out_of_range(g[k].rect)) continue;
        const double v = oracle::iou(det.rect, g[k].rect);
        if (v >= thresh && v > pick_iou) { pick = static_cast<int>(k); pick_iou = v; }
      }
      bool ignored_gt = false;
      if (pick < 0) {
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (taken[k] || !out_of_range(g[k].rect)) continue;
          const double v = oracle::iou(det.rect, g[k].rect);
          if (v >= thresh && v > pick_iou) { pick = static_cast<int>(k); pick_iou = v; }
        }
        ignored_gt = pick >= 0;
      }
      if (pick >= 0) {
        taken[pick] = true;
        if (!ignored_gt) scored.push_back({det.score, true});
      } else if (!out_of_range(det.rect)) {
        scored.push_back({det.score, false});
      }
    }
  }
  return ap_101(scored, n_gt);
}

struct RefSuite {
  std::optional<double> ap50, ap75, ap50_95, ap_s, ap_m, ap_l;
};

inline RefSuite suite(const std::vector<RefBox>& gts, const std::vector<RefBox>& dets) {
  std::vector<std::string> classes;
  for (const auto& g : gts) {
    if (std::find(classes.begin(), classes.end(), g.cls) == classes.end()) classes.push_back(g.cls);
  }
  auto mean = [](const std::vector<std::optional<double>>& xs) -> std::optional<double> {
    double s = 0;
    int n = 0;
    for (const auto& x : xs) {
      if (x) { s += *x; ++n; }
    }
    if (!n) return std::nullopt;
    return s / n;
  };
  const std::int64_t inf = INT64_MAX;
  std::vector<std::optional<double>> a50, a75, all, sm, md, lg;
  for (const auto& c : classes) {
    a50.push_back(class_ap(gts, dets, c, 0.5, 0, inf));
    a75.push_back(class_ap(gts, dets, c, 0.75, 0, inf));
    for (int t = 50; t <= 95; t += 5) {
      const double th = t / 100.0;
      all.push_back(class_ap(gts, dets, c, th, 0, inf));
      sm.push_back(class_ap(gts, dets, c, th, 0, 1024));
      md.push_back(class_ap(gts, dets, c, th, 1024, 9216));
      lg.push_back(class_ap(gts, dets, c, th, 9216, inf));
    }
  }
  return {mean(a50), mean(a75), mean(all), mean(sm), mean(md), mean(lg)};
}

}  // namespace oracle
