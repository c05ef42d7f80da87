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
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "collage_forge/context_index.hpp"
#include "collage_forge/core_model.hpp"
#include "collage_forge/errors.hpp"
#include "collage_forge/image.hpp"
#include "collage_forge/ingestion.hpp"
#include "collage_forge/rng.hpp"

namespace cforge {

struct SynthesisConfig {
  int max_boxes = 15;
  std::int64_t min_collages = 2000;
  CollageMode mode = CollageMode::kMatched;
  double tau = 0.0;  // a box must keep strictly more than this visible fraction
  int max_place_attempts = 50;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (max_boxes < 1) throw Error(ErrorKind::kInvalidArgument, "max_boxes must be >= 1");
    if (min_collages < 1) {
      throw Error(ErrorKind::kInvalidArgument, "min_collages must be >= 1");
    }
    if (!(tau >= 0.0 && tau < 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "tau must lie in [0, 1)");
    }
    if (max_place_attempts < 0) {
      throw Error(ErrorKind::kInvalidArgument, "max_place_attempts must be >= 0");
    }
  }
};

// ---------------------------------------------------------------------------
// Occlusion

/// Exact number of pixel cells of `target` not covered by any rect in
/// `covers`. Coordinate compression over the cover edges clipped to `target`.
inline std::int64_t visible_area(const Rect& target, std::span<const Rect> covers) {
  std::vector<std::int32_t> xs{target.x, target.right()};
  std::vector<std::int32_t> ys{target.y, target.bottom()};
  std::vector<Rect> clipped;
  for (const auto& c : covers) {
    const std::int32_t x0 = std::max(c.x, target.x);
    const std::int32_t y0 = std::max(c.y, target.y);
    const std::int32_t x1 = std::min(c.right(), target.right());
    const std::int32_t y1 = std::min(c.bottom(), target.bottom());
    if (x0 >= x1 || y0 >= y1) continue;
    clipped.push_back(Rect{x0, y0, x1 - x0, y1 - y0});
    xs.push_back(x0);
    xs.push_back(x1);
    ys.push_back(y0);
    ys.push_back(y1);
  }
  if (clipped.empty()) return target.area();
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  std::int64_t covered = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const bool hit = std::any_of(clipped.begin(), clipped.end(), [&](const Rect& c) {
        return c.x <= xs[i] && xs[i + 1] <= c.right() && c.y <= ys[j] &&
               ys[j + 1] <= c.bottom();
      });
      if (hit) covered += std::int64_t{xs[i + 1] - xs[i]} * (ys[j + 1] - ys[j]);
    }
  }
  return target.area() - covered;
}

struct OcclusionEntry {
  std::int32_t paint_order = 0;
  std::int64_t visible_px = 0;
  std::int64_t total_px = 0;

  double visible_fraction() const {
    return static_cast<double>(visible_px) / static_cast<double>(total_px);
  }
};

struct OcclusionReport {
  std::vector<OcclusionEntry> entries;  // sorted by paint_order
  bool satisfied = true;                // every visible fraction > tau
};

/// A placement's visible pixels are those not covered by any placement with
/// a greater paint order.
inline OcclusionReport check_occlusion(const std::vector<Placement>& placements, double tau) {
  std::vector<const Placement*> order;
  order.reserve(placements.size());
  for (const auto& p : placements) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const Placement* a, const Placement* b) {
    return a->paint_order < b->paint_order;
  });
  std::vector<Rect> rects;
  rects.reserve(order.size());
  for (const auto* p : order) rects.push_back(p->dest);

  OcclusionReport report;
  for (std::size_t i = 0; i < order.size(); ++i) {
    OcclusionEntry e;
    e.paint_order = order[i]->paint_order;
    e.total_px = rects[i].area();
    e.visible_px = visible_area(rects[i], std::span<const Rect>(rects).subspan(i + 1));
    // visible/total > tau, compared without rounding the fraction first.
    if (!(static_cast<double>(e.visible_px) > tau * static_cast<double>(e.total_px))) {
      report.satisfied = false;
    }
    report.entries.push_back(e);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Placement

enum class SkipReason { kTooLarge, kOccluded };

inline const char* to_string(SkipReason r) {
  return r == SkipReason::kTooLarge ? "too_large" : "occluded";
}

struct PlacementSkip {
  std::int64_t box_id = 0;
  SkipReason reason = SkipReason::kOccluded;
  friend bool operator==(const PlacementSkip&, const PlacementSkip&) = default;
};

struct PlacementResult {
  std::vector<Placement> placements;
  std::vector<PlacementSkip> skips;
};

/// Places boxes in order at uniformly drawn positions fully inside the
/// background. A position that would leave any earlier placement with a
/// visible fraction <= tau is redrawn, at most `attempts` times; after that
/// the box is skipped. Boxes larger than the background are skipped.
inline PlacementResult place_boxes(std::int32_t bg_width, std::int32_t bg_height,
                                   const std::vector<BoxLabel>& boxes, double tau,
                                   int attempts, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  PlacementResult out;
  for (const auto& box : boxes) {
    if (box.rect.w > bg_width || box.rect.h > bg_height) {
      out.skips.push_back({box.id, SkipReason::kTooLarge});
      continue;
    }
    bool accepted = false;
    for (int attempt = 0; attempt <= attempts && !accepted; ++attempt) {
      Placement p;
      p.source_box_id = box.id;
      p.dest = Rect{static_cast<std::int32_t>(rng.uniform_int(0, bg_width - box.rect.w)),
                    static_cast<std::int32_t>(rng.uniform_int(0, bg_height - box.rect.h)),
                    box.rect.w, box.rect.h};
      p.paint_order = static_cast<std::int32_t>(out.placements.size());
      out.placements.push_back(p);
      if (check_occlusion(out.placements, tau).satisfied) {
        accepted = true;
      } else {
        out.placements.pop_back();
      }
    }
    if (!accepted) out.skips.push_back({box.id, SkipReason::kOccluded});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planning

/// A plan plus the bookkeeping that goes into the run manifest.
struct PlanRecord {
  CollagePlan plan;
  SubstrateCombo source_combo;
  std::vector<std::int64_t> sampled_box_ids;  // in draw order, skipped ones included
  std::vector<PlacementSkip> skips;
  std::int64_t refill_epoch = 0;
};

struct PlanningResult {
  std::vector<PlanRecord> records;
  std::int64_t refills = 0;
  std::int64_t discarded_draws = 0;  // draws where every box was skipped
  std::vector<SubstrateCombo> unmatched_combos;  // matched mode: no background shares a code

  std::vector<CollagePlan> plans() const {
    std::vector<CollagePlan> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.plan);
    return out;
  }
};

/// Background combo used for boxes of `combo` in matched mode, or nothing if
/// no available combo shares a substrate code with it.
inline std::optional<SubstrateCombo> matched_background_combo(
    const SubstrateCombo& combo, const std::vector<SubstrateCombo>& available) {
  if (available.empty()) return std::nullopt;
  SubstrateCombo resolved = resolve_combo(combo, available);
  if (resolved == combo || jaccard(combo, resolved).shared > 0) return resolved;
  return std::nullopt;
}

/// Round-robin over box combos in canonical order. Each turn draws 1..max_boxes
/// boxes without replacement from the combo's pool, picks a background, and
/// places the boxes. Stops as soon as min_collages plans exist. All pools are
/// refilled when every pool is empty.
///
/// Randomness for plan k comes from split_seed(master_seed, k): stream 0
/// drives box sampling, stream 1 the background choice, stream 2 placement.
/// Box sampling therefore does not depend on the mode.
inline PlanningResult plan_collages(const ContextIndex& index, const SynthesisConfig& cfg) {
  cfg.validate();
  PlanningResult result;

  std::vector<const Frame*> all_backgrounds;
  for (const auto& [combo, frames] : index.bg_by_combo) {
    for (const auto& f : frames) all_backgrounds.push_back(&f);
  }
  const auto bg_combos = index.background_combos();

  struct Slot {
    const SubstrateCombo* combo;
    const std::vector<BoxLabel>* source;
    const std::vector<Frame>* backgrounds;  // matched mode only
    SubstrateCombo bg_combo;
    std::vector<const BoxLabel*> pool;
  };
  std::vector<Slot> slots;
  for (const auto& [combo, boxes] : index.boxes_by_combo) {
    if (boxes.empty()) continue;
    Slot s{&combo, &boxes, nullptr, {}, {}};
    if (cfg.mode == CollageMode::kMatched) {
      const auto resolved = matched_background_combo(combo, bg_combos);
      if (!resolved) {
        result.unmatched_combos.push_back(combo);
        continue;
      }
      s.bg_combo = *resolved;
      s.backgrounds = &index.bg_by_combo.at(*resolved);
    }
    slots.push_back(std::move(s));
  }

  if (cfg.mode == CollageMode::kMatched && slots.empty()) {
    throw Error(ErrorKind::kUnsatisfiable,
                "no substrate combo has both boxes and a matching background");
  }
  if (cfg.mode == CollageMode::kRandom && (slots.empty() || all_backgrounds.empty())) {
    throw Error(ErrorKind::kUnsatisfiable, "random mode needs at least one box and one background");
  }

  auto refill = [&] {
    for (auto& s : slots) {
      s.pool.clear();
      for (const auto& b : *s.source) s.pool.push_back(&b);
    }
  };
  refill();

  std::int64_t epoch = 0;
  std::int64_t plan_id = 0;
  std::int64_t emitted_this_epoch = 0;
  while (true) {
    const bool exhausted =
        std::all_of(slots.begin(), slots.end(), [](const Slot& s) { return s.pool.empty(); });
    if (exhausted) {
      if (emitted_this_epoch == 0) {
        throw Error(ErrorKind::kUnsatisfiable,
                    "a full pass over every box produced no placeable collage");
      }
      refill();
      ++epoch;
      ++result.refills;
      emitted_this_epoch = 0;
    }
    for (auto& s : slots) {
      if (s.pool.empty()) continue;
      const std::uint64_t seed = split_seed(cfg.master_seed, static_cast<std::uint64_t>(plan_id));

      Rng sampler(split_seed(seed, 0));
      const auto r = sampler.uniform_int(1, cfg.max_boxes);
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(r), s.pool.size());
      std::vector<BoxLabel> chosen;
      PlanRecord rec;
      for (std::size_t i = 0; i < take; ++i) {
        const auto k = sampler.index(s.pool.size());
        chosen.push_back(*s.pool[k]);
        rec.sampled_box_ids.push_back(s.pool[k]->id);
        s.pool.erase(s.pool.begin() + static_cast<std::ptrdiff_t>(k));
      }

      Rng picker(split_seed(seed, 1));
      const Frame* bg = nullptr;
      if (cfg.mode == CollageMode::kMatched) {
        bg = &(*s.backgrounds)[picker.index(s.backgrounds->size())];
      } else {
        bg = all_backgrounds[picker.index(all_backgrounds.size())];
      }

      auto placed = place_boxes(bg->width, bg->height, chosen, cfg.tau,
                                cfg.max_place_attempts, split_seed(seed, 2));
      if (placed.placements.empty()) {
        ++result.discarded_draws;
        ++plan_id;
        continue;
      }
      rec.plan.plan_id = plan_id;
      rec.plan.background = bg->ref;
      rec.plan.background_substrate = bg->substrate;
      rec.plan.placements = std::move(placed.placements);
      rec.plan.mode = cfg.mode;
      rec.plan.seed = seed;
      rec.source_combo = *s.combo;
      rec.skips = std::move(placed.skips);
      rec.refill_epoch = epoch;
      result.records.push_back(std::move(rec));
      ++plan_id;
      ++emitted_this_epoch;
      if (static_cast<std::int64_t>(result.records.size()) >= cfg.min_collages) {
        return result;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Compositing

/// Read-only access to frame images by (video_id, frame_index), with a small
/// LRU cache. Safe for concurrent use.
class FrameStore {
 public:
  explicit FrameStore(const Dataset& ds, std::size_t cache_capacity = 32)
      : capacity_(std::max<std::size_t>(1, cache_capacity)) {
    for (const auto& f : ds.frames) {
      entries_[key(f.ref)] = Entry{ds.image_file(f), f.width, f.height};
    }
  }

  std::shared_ptr<const Image> get(const FrameRef& ref) const {
    const auto k = key(ref);
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(k); it != cache_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.second);
        return it->second.first;
      }
    }
    const auto e = entries_.find(k);
    if (e == entries_.end()) {
      throw Error(ErrorKind::kIo, "no image registered for frame " + k);
    }
    auto img = std::make_shared<const Image>(read_png(e->second.path));
    if (img->width() != e->second.width || img->height() != e->second.height) {
      throw Error(ErrorKind::kDimensionMismatch,
                  e->second.path.string() + " is " + std::to_string(img->width()) + "x" +
                      std::to_string(img->height()) + ", manifest says " +
                      std::to_string(e->second.width) + "x" +
                      std::to_string(e->second.height));
    }
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(k); it != cache_.end()) return it->second.first;
    lru_.push_front(k);
    cache_[k] = {img, lru_.begin()};
    while (cache_.size() > capacity_) {
      cache_.erase(lru_.back());
      lru_.pop_back();
    }
    return img;
  }

 private:
  struct Entry {
    std::filesystem::path path;
    std::int32_t width = 0;
    std::int32_t height = 0;
  };

  static std::string key(const FrameRef& ref) {
    return ref.video_id + '#' + std::to_string(ref.frame_index);
  }

  std::unordered_map<std::string, Entry> entries_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::list<std::string> lru_;
  mutable std::unordered_map<
      std::string,
      std::pair<std::shared_ptr<const Image>, std::list<std::string>::iterator>>
      cache_;
};

struct CollageAnnotation {
  Rect rect;
  std::string species;
  std::int64_t source_box_id = 0;
  std::int32_t paint_order = 0;
  std::int64_t visible_px = 0;
  std::int64_t total_px = 0;

  friend bool operator==(const CollageAnnotation&, const CollageAnnotation&) = default;
};

struct RenderedCollage {
  Image image;
  std::vector<CollageAnnotation> annotations;  // in paint order
};

using BoxLookup = std::unordered_map<std::int64_t, BoxLabel>;

inline BoxLookup make_box_lookup(const std::vector<BoxLabel>& boxes) {
  BoxLookup out;
  for (const auto& b : boxes) out.emplace(b.id, b);
  return out;
}

/// Background pixels with each source crop copied verbatim in paint order.
/// Every placement gets an annotation, partially covered ones included.
inline RenderedCollage composite(const CollagePlan& plan, const BoxLookup& boxes,
                                 const FrameStore& store) {
  if (plan.placements.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "plan " + std::to_string(plan.plan_id) +
                                                 " has no placements");
  }
  RenderedCollage out;
  out.image = *store.get(plan.background);

  std::vector<Placement> ordered = plan.placements;
  std::sort(ordered.begin(), ordered.end(),
            [](const Placement& a, const Placement& b) { return a.paint_order < b.paint_order; });
  const auto report = check_occlusion(ordered, 0.0);

  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& p = ordered[i];
    const auto it = boxes.find(p.source_box_id);
    if (it == boxes.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "plan references unknown box " + std::to_string(p.source_box_id));
    }
    const BoxLabel& box = it->second;
    if (p.dest.w != box.rect.w || p.dest.h != box.rect.h ||
        !p.dest.fits_inside(out.image.width(), out.image.height())) {
      throw Error(ErrorKind::kInvalidArgument,
                  "placement of box " + std::to_string(box.id) + " is resized or out of bounds");
    }
    const auto source = store.get(box.frame);
    if (!box.rect.fits_inside(source->width(), source->height())) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "box " + std::to_string(box.id) + " exceeds its source image");
    }
    out.image.paste(*source, box.rect, p.dest.x, p.dest.y);
    out.annotations.push_back({p.dest, box.species, box.id, p.paint_order,
                               report.entries[i].visible_px, report.entries[i].total_px});
  }
  return out;
}

/// Renders every plan on `workers` threads and hands each result to `sink`
/// together with its index. `sink` is called concurrently for distinct
/// indices. The first exception thrown by any worker is rethrown.
inline void render_all(const std::vector<CollagePlan>& plans, const BoxLookup& boxes,
                       const FrameStore& store, unsigned workers,
                       const std::function<void(std::size_t, RenderedCollage&&)>& sink) {
  workers = std::max(1u, workers);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plans.size()) return;
      try {
        sink(i, composite(plans[i], boxes, store));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace cforge
