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
#include <map>

#include "collage_forge/ingestion.hpp"
#include "test_util.hpp"

namespace cforge {
namespace {

using testutil::spit;
using testutil::TempDir;

// Three frames of one video at 30 fps: indices 300 (10 s), 360 (12 s), 630 (21 s).
DatasetRoot write_hand_fixture(const fs::path& dir) {
  const auto root = DatasetRoot::at(dir);
  fs::create_directories(root.frames_dir / "vid");
  for (const char* name : {"a.png", "b.png", "c.png"}) {
    write_png(root.frames_dir / "vid" / name, Image(64, 48, {10, 20, 30}));
  }
  spit(root.frames_manifest,
       "video_id,frame_index,timestamp_ms,width,height,image_path\n"
       "vid,300,10000,64,48,vid/a.png\n"
       "vid,360,12000,64,48,vid/b.png\n"
       "vid,630,21000,64,48,vid/c.png\n");
  spit(root.boxes_path,
       "box_id,video_id,frame_index,x,y,w,h,species\n"
       "1,vid,360,4,4,10,8,urchin\n"
       "2,vid,630,0,0,64,48,sea star\n");
  spit(root.cabof_path, "video_id,timestamp_ms,species,count\nvid,12000,urchin,3\n");
  spit(root.substrate_path,
       "video_id,start_ms,end_ms,codes\n"
       "vid,10000,20000,mud\n"
       "vid,20000,30000,mud;cobble\n");
  return root;
}

TEST(LoadDataset, HandFixtureCountsAndSubstrates) {
  TempDir tmp("ingest");
  const auto ds = load_dataset(write_hand_fixture(tmp.path()));
  EXPECT_EQ(ds.frames.size(), 3u);
  EXPECT_EQ(ds.boxes.size(), 2u);
  EXPECT_EQ(ds.cabof.size(), 1u);
  // 12.0 s lies inside [10 s, 20 s) labeled mud.
  EXPECT_EQ(ds.boxes[0].substrate.canonical(), "mud");
  EXPECT_EQ(ds.boxes[0].frame.timestamp.millis, 12000);
  EXPECT_EQ(ds.boxes[1].substrate.canonical(), "cobble+mud");
  EXPECT_EQ(ds.boxes[1].species, "sea star");
  EXPECT_EQ(ds.cabof[0].count, 3);
}

TEST(LoadDataset, EmptyCabofFile) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  spit(root.cabof_path, "video_id,timestamp_ms,species,count\n");
  EXPECT_TRUE(load_dataset(root).cabof.empty());
}

TEST(LoadDataset, HalfOpenIntervalsAndUnknownGaps) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  // Frame at 10 s is the start of [10 s, 20 s); drop the interval so 21 s
  // falls into a gap.
  spit(root.substrate_path, "video_id,start_ms,end_ms,codes\nvid,5000,10000,sand\nvid,10000,21000,mud\n");
  const auto ds = load_dataset(root);
  EXPECT_EQ(ds.frames[0].substrate.canonical(), "mud");      // 10000 in [10000, 21000)
  EXPECT_EQ(ds.frames[2].substrate.canonical(), "unknown");  // 21000 == end, excluded
}

TEST(LoadDataset, OverlappingIntervalsRejected) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  spit(root.substrate_path, "video_id,start_ms,end_ms,codes\nvid,0,15000,mud\nvid,14999,30000,sand\n");
  try {
    load_dataset(root);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOverlap);
  }
}

TEST(LoadDataset, ParseErrorsCarryLineContext) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  spit(root.cabof_path, "video_id,timestamp_ms,species,count\nvid,12000,urchin,3\nvid,abc,urchin,1\n");
  try {
    load_dataset(root);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("cabof.csv:3"), std::string::npos) << e.what();
  }
  spit(root.cabof_path, "video_id,timestamp_ms,species,count\nvid,12000,urchin,0\n");
  EXPECT_THROW(load_dataset(root), Error);
  spit(root.cabof_path, "wrong,header\n");
  EXPECT_THROW(load_dataset(root), Error);
}

TEST(LoadDataset, TimestampMustMatchFrameIndex) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  spit(root.frames_manifest,
       "video_id,frame_index,timestamp_ms,width,height,image_path\n"
       "vid,300,10001,64,48,vid/a.png\n");
  spit(root.boxes_path, "box_id,video_id,frame_index,x,y,w,h,species\n");
  EXPECT_THROW(load_dataset(root), Error);
}

TEST(LoadDataset, MissingFrameImage) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  fs::remove(root.frames_dir / "vid" / "b.png");
  try {
    load_dataset(root);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingFrameImage);
  }
}

TEST(LoadDataset, BoxOutsideFrameRejected) {
  TempDir tmp("ingest");
  auto root = write_hand_fixture(tmp.path());
  spit(root.boxes_path, "box_id,video_id,frame_index,x,y,w,h,species\n1,vid,360,60,4,10,8,urchin\n");
  EXPECT_THROW(load_dataset(root), Error);
}

FixtureSpec five_box_spec(std::uint64_t seed) {
  FixtureSpec spec;
  spec.seed = seed;
  spec.width = 96;
  spec.height = 64;
  spec.species = {"a", "b"};
  spec.videos = {{"v0", 10, 30}};
  spec.substrate = {{"v0", Timestamp{0}, Timestamp{5000}, canonical_combo({"mud"})},
                    {"v0", Timestamp{5000}, Timestamp{10000}, canonical_combo({"sand", "mud"})}};
  spec.cabof = {{"v0", Timestamp{2000}, "a", 1}};
  for (int i = 0; i < 5; ++i) {
    spec.boxes.push_back({i + 10, "v0", 30 * (i * 2), Rect{i * 3, i * 2, 10 + i, 12 - i},
                          i % 2 ? "a" : "b"});
  }
  return spec;
}

std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = testutil::slurp(e.path());
  }
  return out;
}

TEST(MakeFixture, SameSeedByteIdentical) {
  TempDir a("fixa"), b("fixb");
  make_fixture(five_box_spec(7), a.path());
  make_fixture(five_box_spec(7), b.path());
  const auto ta = tree_bytes(a.path());
  EXPECT_EQ(ta.size(), 10u + 4u);
  EXPECT_EQ(ta, tree_bytes(b.path()));
}

TEST(MakeFixture, NoPlantedBoxesGivesHeaderOnly) {
  TempDir tmp("fix");
  auto spec = five_box_spec(1);
  spec.boxes.clear();
  const auto root = make_fixture(spec, tmp.path());
  EXPECT_EQ(testutil::slurp(root.boxes_path), "box_id,video_id,frame_index,x,y,w,h,species\n");
}

TEST(MakeFixture, FivePlantedBoxesRoundTrip) {
  TempDir tmp("fix");
  const auto spec = five_box_spec(3);
  const auto ds = load_dataset(make_fixture(spec, tmp.path()));
  ASSERT_EQ(ds.boxes.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(ds.boxes[i].id, spec.boxes[i].id);
    EXPECT_EQ(ds.boxes[i].rect, spec.boxes[i].rect);
    EXPECT_EQ(ds.boxes[i].frame.frame_index, spec.boxes[i].frame_index);
    EXPECT_EQ(ds.boxes[i].species, spec.boxes[i].species);
  }
  // Box on frame 240 (8 s) sits in [5 s, 10 s).
  EXPECT_EQ(ds.boxes[4].substrate.canonical(), "mud+sand");
  // The planted pixels are the box color.
  const auto img = read_png(ds.image_file(ds.frames[0]));
  EXPECT_EQ(img.at(spec.boxes[0].rect.x, spec.boxes[0].rect.y), fixture_box_color(3, 10));
}

TEST(MakeFixture, FuzzedSpecsReloadExactly) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    TempDir tmp("fuzz" + std::to_string(seed));
    FixtureShape shape;
    shape.videos = 1 + static_cast<int>(seed % 3);
    shape.frames_per_video = 8 + static_cast<std::int64_t>(seed % 5);
    shape.width = 48;
    shape.height = 32;
    shape.boxes = static_cast<int>(seed * 3);
    shape.cabof = static_cast<int>(seed % 4);
    shape.min_box = 2;
    shape.max_box = 16;
    const auto spec = random_fixture_spec(seed, shape);
    const auto ds = load_dataset(make_fixture(spec, tmp.path()));
    ASSERT_EQ(ds.boxes.size(), spec.boxes.size());
    ASSERT_EQ(ds.cabof, spec.cabof);
    ASSERT_EQ(ds.substrate, spec.substrate);
    const SubstrateTrack track(spec.substrate);
    for (std::size_t i = 0; i < ds.boxes.size(); ++i) {
      EXPECT_EQ(ds.boxes[i].id, spec.boxes[i].id);
      EXPECT_EQ(ds.boxes[i].rect, spec.boxes[i].rect);
      EXPECT_EQ(ds.boxes[i].frame.video_id, spec.boxes[i].video_id);
      EXPECT_EQ(ds.boxes[i].frame.frame_index, spec.boxes[i].frame_index);
      EXPECT_EQ(ds.boxes[i].species, spec.boxes[i].species);
      EXPECT_EQ(ds.boxes[i].substrate,
                track.lookup(ds.boxes[i].frame.video_id, ds.boxes[i].frame.timestamp));
    }
    // Substrate resolution is total.
    for (const auto& f : ds.frames) EXPECT_FALSE(f.substrate.empty());
  }
}

}  // namespace
}  // namespace cforge
