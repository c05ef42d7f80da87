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
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "collage_forge/core_model.hpp"

namespace cforge {

struct MiningConfig {
  std::int64_t buffer_ms = 10'000;
};

/// Closed [lo, hi] millisecond windows, sorted and merged, for one video.
using RemovalWindows = std::vector<std::pair<std::int64_t, std::int64_t>>;

inline std::map<std::string, RemovalWindows> removal_windows(
    const std::vector<CabofLabel>& cabof, std::int64_t buffer_ms) {
  std::map<std::string, std::vector<std::int64_t>> stamps;
  for (const auto& c : cabof) stamps[c.video_id].push_back(c.timestamp.millis);

  std::map<std::string, RemovalWindows> out;
  for (auto& [video, ts] : stamps) {
    std::sort(ts.begin(), ts.end());
    auto& merged = out[video];
    for (const auto t : ts) {
      const std::int64_t lo = t - buffer_ms;
      const std::int64_t hi = t + buffer_ms;
      // Integer timestamps: windows that merely touch (hi + 1 == lo) also merge.
      if (!merged.empty() && lo <= merged.back().second + 1) {
        merged.back().second = std::max(merged.back().second, hi);
      } else {
        merged.emplace_back(lo, hi);
      }
    }
  }
  return out;
}

/// Keeps the frames whose timestamp is strictly more than `buffer_ms` away
/// from every CABOF timestamp of the same video. Input order is preserved.
///
/// Works on any frame-like element; `proj` maps an element to its FrameRef.
template <typename FrameLike, typename Proj = std::identity>
std::vector<FrameLike> mine_backgrounds(const std::vector<FrameLike>& frames,
                                        const std::vector<CabofLabel>& cabof,
                                        const MiningConfig& cfg, Proj proj = {}) {
  if (cfg.buffer_ms < 0) {
    throw Error(ErrorKind::kInvalidArgument, "mining buffer must be >= 0");
  }
  const auto windows = removal_windows(cabof, cfg.buffer_ms);
  std::vector<FrameLike> kept;
  kept.reserve(frames.size());
  for (const auto& f : frames) {
    const FrameRef& ref = std::invoke(proj, f);
    const auto it = windows.find(ref.video_id);
    if (it == windows.end()) {
      kept.push_back(f);
      continue;
    }
    const auto& w = it->second;
    const std::int64_t t = ref.timestamp.millis;
    // First window whose upper end reaches t; it is the only candidate.
    const auto pos = std::lower_bound(
        w.begin(), w.end(), t,
        [](const std::pair<std::int64_t, std::int64_t>& iv, std::int64_t v) {
          return iv.second < v;
        });
    if (pos == w.end() || t < pos->first) kept.push_back(f);
  }
  return kept;
}

}  // namespace cforge
