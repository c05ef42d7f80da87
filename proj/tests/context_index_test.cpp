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

#include <gtest/gtest.h>

#include <algorithm>

#include "collage_forge/context_index.hpp"
#include "collage_forge/rng.hpp"

namespace cforge {
namespace {

SubstrateCombo combo(std::initializer_list<const char*> codes) {
  std::vector<std::string> v(codes.begin(), codes.end());
  return canonical_combo(v);
}

Frame frame(const std::string& v, std::int64_t idx) {
  Frame f;
  f.ref = {v, idx, frame_timestamp(idx, 30.0)};
  f.width = 100;
  f.height = 100;
  return f;
}

TEST(BuildIndex, PartitionsBackgroundsByCombo) {
  const std::vector<SubstrateInterval> track = {
      {"v", Timestamp{0}, Timestamp{10000}, combo({"mud"})},
      {"v", Timestamp{10000}, Timestamp{20000}, combo({"cobble"})}};
  const auto index = build_index({frame("v", 30), frame("v", 60), frame("v", 330)}, {}, track);
  ASSERT_EQ(index.bg_by_combo.size(), 2u);
  EXPECT_EQ(index.bg_by_combo.at(combo({"mud"})).size(), 2u);
  EXPECT_EQ(index.bg_by_combo.at(combo({"cobble"})).size(), 1u);
  EXPECT_TRUE(index.boxes_by_combo.empty());
}

TEST(BuildIndex, CountsPreservedAndOrderIndependent) {
  Rng rng(5);
  const std::vector<std::string> codes = {"mud", "sand", "rock"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SubstrateInterval> track;
    std::int64_t t = 0;
    while (t < 60000) {
      const auto end = t + rng.uniform_int(1000, 20000);
      if (rng.uniform_int(0, 4)) {
        track.push_back({"v", Timestamp{t}, Timestamp{end},
                         canonical_combo({codes[rng.index(3)], codes[rng.index(3)]})});
      }
      t = end;
    }
    std::vector<Frame> bgs;
    std::vector<BoxLabel> boxes;
    const auto n = rng.uniform_int(0, 60);
    for (int i = 0; i < n; ++i) bgs.push_back(frame("v", rng.uniform_int(0, 1800)));
    const auto m = rng.uniform_int(0, 60);
    for (int i = 0; i < m; ++i) {
      BoxLabel b;
      b.id = i;
      b.frame = frame("v", rng.uniform_int(0, 1800)).ref;
      b.rect = {0, 0, 5, 5};
      boxes.push_back(b);
    }
    const auto index = build_index(bgs, boxes, track);
    EXPECT_EQ(index.background_count(), bgs.size());
    EXPECT_EQ(index.box_count(), boxes.size());
    const SubstrateTrack lookup(track);
    for (const auto& [c, frames] : index.bg_by_combo) {
      EXPECT_TRUE(std::is_sorted(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
        return frame_key_less(a.ref, b.ref);
      }));
      for (const auto& f : frames) EXPECT_EQ(lookup.lookup("v", f.ref.timestamp), c);
    }
    for (const auto& [c, list] : index.boxes_by_combo) {
      EXPECT_TRUE(std::is_sorted(list.begin(), list.end(), box_order_less));
      for (const auto& b : list) EXPECT_EQ(b.substrate, c);
    }

    // Shuffled inputs give the same index.
    auto bgs2 = bgs;
    auto boxes2 = boxes;
    std::reverse(bgs2.begin(), bgs2.end());
    std::reverse(boxes2.begin(), boxes2.end());
    const auto index2 = build_index(bgs2, boxes2, track);
    ASSERT_EQ(index2.boxes_by_combo, index.boxes_by_combo);
    ASSERT_EQ(index2.bg_by_combo.size(), index.bg_by_combo.size());
    for (const auto& [c, frames] : index.bg_by_combo) {
      const auto& other = index2.bg_by_combo.at(c);
      ASSERT_EQ(other.size(), frames.size());
      for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(other[i].ref, frames[i].ref);
    }
  }
}

TEST(BuildIndex, InconsistentBoxSubstrateRejected) {
  const std::vector<SubstrateInterval> track = {
      {"v", Timestamp{0}, Timestamp{10000}, combo({"mud"})}};
  BoxLabel b;
  b.id = 1;
  b.frame = frame("v", 30).ref;
  b.substrate = combo({"sand"});
  EXPECT_THROW(build_index({}, {b}, track), Error);
}

TEST(ResolveCombo, TieBetweenMudAndCobblePicksCobble) {
  const auto got = resolve_combo(combo({"mud", "cobble"}),
                                 {combo({"mud"}), combo({"cobble"}), combo({"rock"})});
  EXPECT_EQ(got, combo({"cobble"}));
}

TEST(ResolveCombo, ExactMatchWins) {
  EXPECT_EQ(resolve_combo(combo({"mud"}), {combo({"cobble", "mud"}), combo({"mud"})}),
            combo({"mud"}));
}

TEST(ResolveCombo, HighestJaccard) {
  // {mud,rock} vs {mud,cobble}: 1/3; vs {sand}: 0.
  EXPECT_EQ(resolve_combo(combo({"mud", "rock"}), {combo({"sand"}), combo({"mud", "cobble"})}),
            combo({"cobble", "mud"}));
}

TEST(ResolveCombo, EmptyAvailableIsNoBackgrounds) {
  try {
    resolve_combo(combo({"mud"}), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoBackgrounds);
  }
}

TEST(ResolveCombo, MatchesEnumerationAndIgnoresOrder) {
  Rng rng(11);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  auto random_combo = [&] {
    std::vector<std::string> codes;
    const auto k = rng.uniform_int(1, 4);
    for (int i = 0; i < k; ++i) codes.push_back(vocab[rng.index(vocab.size())]);
    return canonical_combo(codes);
  };
  for (int trial = 0; trial < 400; ++trial) {
    const auto q = random_combo();
    std::vector<SubstrateCombo> avail;
    const auto n = rng.uniform_int(1, 6);
    for (int i = 0; i < n; ++i) avail.push_back(random_combo());

    // Enumerate: score every candidate as a double fraction, pick the best.
    const SubstrateCombo* want = nullptr;
    double want_score = -1;
    bool exact = false;
    for (const auto& a : avail) {
      if (a == q) exact = true;
      std::size_t inter = 0;
      for (const auto& c : q.codes()) {
        inter += std::count(a.codes().begin(), a.codes().end(), c);
      }
      const double s = static_cast<double>(inter) /
                       static_cast<double>(q.codes().size() + a.codes().size() - inter);
      if (s > want_score + 1e-12 ||
          (std::abs(s - want_score) <= 1e-12 && a.canonical() < want->canonical())) {
        want = &a;
        want_score = s;
      }
    }
    const auto got = resolve_combo(q, avail);
    EXPECT_EQ(got, exact ? q : *want);
    EXPECT_NE(std::find(avail.begin(), avail.end(), got), avail.end());
    auto shuffled = avail;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(resolve_combo(q, shuffled), got);
  }
}

TEST(ComboStats, UnionOfKeys) {
  ContextIndex index;
  index.bg_by_combo[combo({"mud"})] = {frame("v", 0), frame("v", 1)};
  BoxLabel b;
  index.boxes_by_combo[combo({"sand"})] = {b};
  std::ostringstream out;
  write_combo_stats(out, combo_stats(index));
  EXPECT_EQ(out.str(), "combo,n_backgrounds,n_boxes\nmud,2,0\nsand,0,1\n");
}

}  // namespace
}  // namespace cforge
