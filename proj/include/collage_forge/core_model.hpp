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
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "collage_forge/errors.hpp"

namespace cforge {

/// Milliseconds from the start of a video. Never negative.
struct Timestamp {
  std::int64_t millis = 0;

  static Timestamp from_millis(std::int64_t ms) {
    if (ms < 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "negative timestamp " + std::to_string(ms));
    }
    return Timestamp{ms};
  }

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Timestamp of a frame index at a given frame rate, rounded to the nearest
/// millisecond (half away from zero).
inline Timestamp frame_timestamp(std::int64_t frame_index, double fps) {
  return Timestamp::from_millis(
      std::llround(static_cast<double>(frame_index) * 1000.0 / fps));
}

struct FrameRef {
  std::string video_id;
  std::int64_t frame_index = 0;
  Timestamp timestamp;

  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

// Frames are identified by (video_id, frame_index); the timestamp is derived.
inline bool frame_key_less(const FrameRef& a, const FrameRef& b) {
  return std::tie(a.video_id, a.frame_index) <
         std::tie(b.video_id, b.frame_index);
}

/// Axis-aligned integer rectangle, top-left origin, covering pixel cells
/// [x, x+w) x [y, y+h).
struct Rect {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t w = 1;
  std::int32_t h = 1;

  std::int64_t area() const { return std::int64_t{w} * h; }
  std::int32_t right() const { return x + w; }
  std::int32_t bottom() const { return y + h; }

  bool valid() const { return w >= 1 && h >= 1 && x >= 0 && y >= 0; }

  bool fits_inside(std::int32_t width, std::int32_t height) const {
    return x >= 0 && y >= 0 && right() <= width && bottom() <= height;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::int64_t intersection_area(const Rect& a, const Rect& b) {
  const std::int64_t iw =
      std::int64_t{std::min(a.right(), b.right())} - std::max(a.x, b.x);
  const std::int64_t ih =
      std::int64_t{std::min(a.bottom(), b.bottom())} - std::max(a.y, b.y);
  return (iw > 0 && ih > 0) ? iw * ih : 0;
}

/// The set of substrate classes labeling a frame. Codes are kept sorted and
/// unique; the canonical string joins them with '+'.
class SubstrateCombo {
 public:
  SubstrateCombo() = default;

  const std::vector<std::string>& codes() const { return codes_; }
  const std::string& canonical() const { return canonical_; }
  bool empty() const { return codes_.empty(); }

  friend bool operator==(const SubstrateCombo& a, const SubstrateCombo& b) {
    return a.canonical_ == b.canonical_;
  }
  friend std::strong_ordering operator<=>(const SubstrateCombo& a,
                                          const SubstrateCombo& b) {
    return a.canonical_ <=> b.canonical_;
  }

 private:
  friend SubstrateCombo canonical_combo(std::vector<std::string> codes);

  std::vector<std::string> codes_;
  std::string canonical_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Builds the canonical combo from free-form codes: trims whitespace, drops
/// empties, sorts and deduplicates. Throws EmptyCombo when nothing is left.
inline SubstrateCombo canonical_combo(std::vector<std::string> codes) {
  std::vector<std::string> kept;
  kept.reserve(codes.size());
  for (auto& code : codes) {
    const auto t = detail::trim(code);
    if (!t.empty()) kept.emplace_back(t);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  if (kept.empty()) {
    throw Error(ErrorKind::kEmptyCombo, "substrate combo has no codes");
  }
  SubstrateCombo combo;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) combo.canonical_ += '+';
    combo.canonical_ += kept[i];
  }
  combo.codes_ = std::move(kept);
  return combo;
}

/// Parses a canonical "a+b" string back into a combo.
inline SubstrateCombo combo_from_canonical(std::string_view text) {
  std::vector<std::string> codes;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('+', start);
    const auto stop = end == std::string_view::npos ? text.size() : end;
    codes.emplace_back(text.substr(start, stop - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return canonical_combo(std::move(codes));
}

inline const SubstrateCombo& unknown_combo() {
  static const SubstrateCombo kUnknown = canonical_combo({"unknown"});
  return kUnknown;
}

/// Weak label: `count` individuals of `species` counted at the bottom edge of
/// the frame at `timestamp`.
struct CabofLabel {
  std::string video_id;
  Timestamp timestamp;
  std::string species;
  std::int32_t count = 1;

  friend bool operator==(const CabofLabel&, const CabofLabel&) = default;
};

struct BoxLabel {
  std::int64_t id = 0;
  FrameRef frame;
  Rect rect;
  std::string species;
  SubstrateCombo substrate;

  friend bool operator==(const BoxLabel&, const BoxLabel&) = default;
};

inline bool box_order_less(const BoxLabel& a, const BoxLabel& b) {
  return std::tie(a.frame.video_id, a.frame.frame_index, a.id) <
         std::tie(b.frame.video_id, b.frame.frame_index, b.id);
}

/// One pasted box: the source crop lands at `dest` (same size, no scaling).
struct Placement {
  std::int64_t source_box_id = 0;
  Rect dest;
  std::int32_t paint_order = 0;

  friend bool operator==(const Placement&, const Placement&) = default;
};

enum class CollageMode { kMatched, kRandom };

inline const char* to_string(CollageMode mode) {
  return mode == CollageMode::kMatched ? "matched" : "random";
}

inline CollageMode parse_mode(std::string_view text) {
  if (text == "matched") return CollageMode::kMatched;
  if (text == "random") return CollageMode::kRandom;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown mode '" + std::string(text) + "'");
}

struct CollagePlan {
  std::int64_t plan_id = 0;
  FrameRef background;
  SubstrateCombo background_substrate;
  std::vector<Placement> placements;
  CollageMode mode = CollageMode::kMatched;
  std::uint64_t seed = 0;

  friend bool operator==(const CollagePlan&, const CollagePlan&) = default;
};

/// Checks the structural plan invariants: 1..max_boxes placements and
/// paint orders forming a permutation of 0..n-1.
inline bool plan_is_well_formed(const CollagePlan& plan, int max_boxes) {
  const auto n = plan.placements.size();
  if (n < 1 || n > static_cast<std::size_t>(max_boxes)) return false;
  std::vector<bool> seen(n, false);
  for (const auto& p : plan.placements) {
    if (p.paint_order < 0 || static_cast<std::size_t>(p.paint_order) >= n ||
        seen[p.paint_order]) {
      return false;
    }
    seen[p.paint_order] = true;
  }
  return true;
}

struct Detection {
  FrameRef frame;
  Rect rect;
  std::string species;
  double score = 0.0;
};

}  // namespace cforge
