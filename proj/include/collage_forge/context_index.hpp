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
#include <set>
#include <string>
#include <vector>

#include "collage_forge/core_model.hpp"
#include "collage_forge/errors.hpp"
#include "collage_forge/ingestion.hpp"

namespace cforge {

/// Substrate combo -> background frames, and substrate combo -> box labels.
/// Keys iterate in canonical-string order; lists are sorted by
/// (video_id, frame_index[, box id]).
struct ContextIndex {
  std::map<SubstrateCombo, std::vector<Frame>> bg_by_combo;
  std::map<SubstrateCombo, std::vector<BoxLabel>> boxes_by_combo;

  std::vector<SubstrateCombo> background_combos() const {
    std::vector<SubstrateCombo> out;
    for (const auto& [combo, frames] : bg_by_combo) {
      if (!frames.empty()) out.push_back(combo);
    }
    return out;
  }

  std::size_t background_count() const {
    std::size_t n = 0;
    for (const auto& [combo, frames] : bg_by_combo) n += frames.size();
    return n;
  }

  std::size_t box_count() const {
    std::size_t n = 0;
    for (const auto& [combo, boxes] : boxes_by_combo) n += boxes.size();
    return n;
  }
};

inline ContextIndex build_index(const std::vector<Frame>& backgrounds,
                                const std::vector<BoxLabel>& boxes,
                                const std::vector<SubstrateInterval>& substrate) {
  const SubstrateTrack track(substrate);
  ContextIndex index;
  for (const auto& f : backgrounds) {
    Frame copy = f;
    copy.substrate = track.lookup(f.ref.video_id, f.ref.timestamp);
    index.bg_by_combo[copy.substrate].push_back(std::move(copy));
  }
  for (const auto& b : boxes) {
    const auto& combo = track.lookup(b.frame.video_id, b.frame.timestamp);
    if (!b.substrate.empty() && b.substrate != combo) {
      throw Error(ErrorKind::kInvalidArgument,
                  "box " + std::to_string(b.id) + " carries substrate '" +
                      b.substrate.canonical() + "' but its frame resolves to '" +
                      combo.canonical() + "'");
    }
    BoxLabel copy = b;
    copy.substrate = combo;
    index.boxes_by_combo[combo].push_back(std::move(copy));
  }
  for (auto& [combo, frames] : index.bg_by_combo) {
    std::stable_sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
      return frame_key_less(a.ref, b.ref);
    });
  }
  for (auto& [combo, list] : index.boxes_by_combo) {
    std::stable_sort(list.begin(), list.end(), box_order_less);
  }
  return index;
}

/// Jaccard similarity |a ∩ b| / |a ∪ b| as an exact (numerator, denominator).
struct Jaccard {
  std::size_t shared = 0;
  std::size_t total = 1;

  friend bool operator<(const Jaccard& a, const Jaccard& b) {
    return a.shared * b.total < b.shared * a.total;
  }
  friend bool operator==(const Jaccard& a, const Jaccard& b) {
    return a.shared * b.total == b.shared * a.total;
  }
};

inline Jaccard jaccard(const SubstrateCombo& a, const SubstrateCombo& b) {
  std::vector<std::string> common;
  std::set_intersection(a.codes().begin(), a.codes().end(), b.codes().begin(),
                        b.codes().end(), std::back_inserter(common));
  return Jaccard{common.size(), a.codes().size() + b.codes().size() - common.size()};
}

/// `query` if it is available, else the available combo with the highest
/// Jaccard similarity; ties go to the smaller canonical string. The result
/// does not depend on the order of `available`.
inline SubstrateCombo resolve_combo(const SubstrateCombo& query,
                                    const std::vector<SubstrateCombo>& available) {
  if (available.empty()) {
    throw Error(ErrorKind::kNoBackgrounds,
                "no background combos to match '" + query.canonical() + "'");
  }
  const SubstrateCombo* best = nullptr;
  Jaccard best_score;
  for (const auto& a : available) {
    if (a == query) return a;
    const Jaccard s = jaccard(query, a);
    if (!best || best_score < s || (s == best_score && a < *best)) {
      best = &a;
      best_score = s;
    }
  }
  return *best;
}

/// One row of the `stats` dump.
struct ComboStats {
  SubstrateCombo combo;
  std::size_t n_backgrounds = 0;
  std::size_t n_boxes = 0;
};

inline std::vector<ComboStats> combo_stats(const ContextIndex& index) {
  std::map<SubstrateCombo, ComboStats> rows;
  for (const auto& [combo, frames] : index.bg_by_combo) {
    rows[combo].combo = combo;
    rows[combo].n_backgrounds = frames.size();
  }
  for (const auto& [combo, boxes] : index.boxes_by_combo) {
    rows[combo].combo = combo;
    rows[combo].n_boxes = boxes.size();
  }
  std::vector<ComboStats> out;
  for (auto& [combo, row] : rows) out.push_back(std::move(row));
  return out;
}

inline void write_combo_stats(std::ostream& out, const std::vector<ComboStats>& rows) {
  out << "combo,n_backgrounds,n_boxes\n";
  for (const auto& r : rows) {
    out << csv::quote(r.combo.canonical()) << ',' << r.n_backgrounds << ',' << r.n_boxes
        << '\n';
  }
}

}  // namespace cforge
