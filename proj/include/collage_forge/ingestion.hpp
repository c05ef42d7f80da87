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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "collage_forge/core_model.hpp"
#include "collage_forge/csv.hpp"
#include "collage_forge/errors.hpp"
#include "collage_forge/image.hpp"
#include "collage_forge/rng.hpp"

namespace cforge {

namespace fs = std::filesystem;

inline const csv::Row kFramesHeader = {"video_id",  "frame_index", "timestamp_ms",
                                       "width",     "height",      "image_path"};
inline const csv::Row kBoxesHeader = {"box_id", "video_id", "frame_index", "x",
                                      "y",      "w",        "h",           "species"};
inline const csv::Row kCabofHeader = {"video_id", "timestamp_ms", "species", "count"};
inline const csv::Row kSubstrateHeader = {"video_id", "start_ms", "end_ms", "codes"};

/// Locations of the label streams. `frames_dir` anchors relative image paths.
struct DatasetRoot {
  fs::path frames_manifest;
  fs::path frames_dir;
  fs::path boxes_path;
  fs::path cabof_path;
  fs::path substrate_path;
  double fps = 30.0;

  /// Conventional layout: frames.csv, boxes.csv, cabof.csv, substrate.csv and
  /// a frames/ directory directly under `dir`.
  static DatasetRoot at(const fs::path& dir, double fps = 30.0) {
    return DatasetRoot{dir / "frames.csv", dir / "frames",    dir / "boxes.csv",
                       dir / "cabof.csv",  dir / "substrate.csv", fps};
  }
};

struct SubstrateInterval {
  std::string video_id;
  Timestamp start;
  Timestamp end;
  SubstrateCombo combo;

  friend bool operator==(const SubstrateInterval&, const SubstrateInterval&) = default;
};

/// A frame from the manifest together with its image geometry and the
/// substrate combo resolved for its timestamp.
struct Frame {
  FrameRef ref;
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::string image_path;  // as written in the manifest
  SubstrateCombo substrate;
};

struct Dataset {
  DatasetRoot root;
  std::vector<Frame> frames;
  std::vector<BoxLabel> boxes;
  std::vector<CabofLabel> cabof;
  std::vector<SubstrateInterval> substrate;

  fs::path image_file(const Frame& f) const {
    fs::path p(f.image_path);
    return p.is_absolute() ? p : root.frames_dir / p;
  }
};

/// Per-video sorted, non-overlapping intervals with half-open lookup.
class SubstrateTrack {
 public:
  SubstrateTrack() = default;

  explicit SubstrateTrack(std::vector<SubstrateInterval> intervals) {
    for (auto& iv : intervals) by_video_[iv.video_id].push_back(std::move(iv));
    for (auto& [video, list] : by_video_) {
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.start < b.start;
      });
      for (std::size_t i = 1; i < list.size(); ++i) {
        if (list[i].start.millis < list[i - 1].end.millis) {
          throw Error(ErrorKind::kOverlap,
                      "substrate intervals overlap in video '" + video + "': [" +
                          std::to_string(list[i - 1].start.millis) + ", " +
                          std::to_string(list[i - 1].end.millis) + ") and [" +
                          std::to_string(list[i].start.millis) + ", " +
                          std::to_string(list[i].end.millis) + ")");
        }
      }
    }
  }

  /// Combo of the interval with start <= t < end, or "unknown".
  const SubstrateCombo& lookup(const std::string& video_id, Timestamp t) const {
    const auto it = by_video_.find(video_id);
    if (it == by_video_.end()) return unknown_combo();
    const auto& list = it->second;
    auto pos = std::upper_bound(
        list.begin(), list.end(), t,
        [](Timestamp v, const SubstrateInterval& iv) { return v < iv.start; });
    if (pos == list.begin()) return unknown_combo();
    --pos;
    return t < pos->end ? pos->combo : unknown_combo();
  }

 private:
  std::map<std::string, std::vector<SubstrateInterval>> by_video_;
};

namespace detail {

struct FrameKey {
  std::string video_id;
  std::int64_t frame_index;
  friend bool operator==(const FrameKey&, const FrameKey&) = default;
};

struct FrameKeyHash {
  std::size_t operator()(const FrameKey& k) const {
    return std::hash<std::string>{}(k.video_id) ^
           static_cast<std::size_t>(mix64(static_cast<std::uint64_t>(k.frame_index)));
  }
};

inline std::vector<std::string> split_codes(const std::string& field) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = field.find(';', start);
    out.push_back(field.substr(start, end == std::string::npos ? end : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace detail

inline std::vector<SubstrateInterval> read_substrate(const fs::path& path) {
  const auto t = csv::read_table(path, kSubstrateHeader);
  std::vector<SubstrateInterval> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    SubstrateInterval iv;
    iv.video_id = t.rows[i][0];
    const auto start = csv::parse_int<std::int64_t>(t, i, 1);
    const auto end = csv::parse_int<std::int64_t>(t, i, 2);
    if (start < 0) t.fail(i, "negative start_ms");
    if (start >= end) t.fail(i, "start_ms must be < end_ms");
    iv.start = Timestamp{start};
    iv.end = Timestamp{end};
    try {
      iv.combo = canonical_combo(detail::split_codes(t.rows[i][3]));
    } catch (const Error&) {
      t.fail(i, "empty substrate codes");
    }
    out.push_back(std::move(iv));
  }
  return out;
}

inline std::vector<CabofLabel> read_cabof(const fs::path& path) {
  const auto t = csv::read_table(path, kCabofHeader);
  std::vector<CabofLabel> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CabofLabel c;
    c.video_id = t.rows[i][0];
    const auto ts = csv::parse_int<std::int64_t>(t, i, 1);
    if (ts < 0) t.fail(i, "negative timestamp_ms");
    c.timestamp = Timestamp{ts};
    c.species = t.rows[i][2];
    c.count = csv::parse_int<std::int32_t>(t, i, 3);
    if (c.count < 1) t.fail(i, "count must be >= 1");
    out.push_back(std::move(c));
  }
  return out;
}

/// Parses all label streams and resolves every frame's and box's substrate.
inline Dataset load_dataset(const DatasetRoot& root) {
  if (!(root.fps > 0)) throw Error(ErrorKind::kInvalidArgument, "fps must be > 0");
  for (const auto* p : {&root.frames_manifest, &root.boxes_path, &root.cabof_path,
                        &root.substrate_path}) {
    if (!fs::exists(*p)) throw Error(ErrorKind::kIo, "missing file " + p->string());
  }

  Dataset ds;
  ds.root = root;
  ds.substrate = read_substrate(root.substrate_path);
  const SubstrateTrack track(ds.substrate);
  ds.cabof = read_cabof(root.cabof_path);

  std::unordered_map<detail::FrameKey, std::size_t, detail::FrameKeyHash> frame_at;
  {
    const auto t = csv::read_table(root.frames_manifest, kFramesHeader);
    ds.frames.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      Frame f;
      f.ref.video_id = t.rows[i][0];
      f.ref.frame_index = csv::parse_int<std::int64_t>(t, i, 1);
      if (f.ref.frame_index < 0) t.fail(i, "negative frame_index");
      const auto ts = csv::parse_int<std::int64_t>(t, i, 2);
      if (ts != frame_timestamp(f.ref.frame_index, root.fps).millis) {
        t.fail(i, "timestamp_ms " + std::to_string(ts) +
                      " disagrees with frame_index at the dataset fps");
      }
      f.ref.timestamp = Timestamp{ts};
      f.width = csv::parse_int<std::int32_t>(t, i, 3);
      f.height = csv::parse_int<std::int32_t>(t, i, 4);
      if (f.width < 1 || f.height < 1) t.fail(i, "frame dimensions must be >= 1");
      f.image_path = t.rows[i][5];
      f.substrate = track.lookup(f.ref.video_id, f.ref.timestamp);
      const auto [it, fresh] =
          frame_at.emplace(detail::FrameKey{f.ref.video_id, f.ref.frame_index},
                           ds.frames.size());
      if (!fresh) t.fail(i, "duplicate frame");
      ds.frames.push_back(std::move(f));
    }
  }

  {
    const auto t = csv::read_table(root.boxes_path, kBoxesHeader);
    std::set<std::int64_t> ids;
    ds.boxes.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      BoxLabel b;
      b.id = csv::parse_int<std::int64_t>(t, i, 0);
      if (!ids.insert(b.id).second) t.fail(i, "duplicate box_id");
      const auto frame_index = csv::parse_int<std::int64_t>(t, i, 2);
      const auto it = frame_at.find(detail::FrameKey{t.rows[i][1], frame_index});
      if (it == frame_at.end()) t.fail(i, "box references a frame not in the manifest");
      const Frame& f = ds.frames[it->second];
      b.frame = f.ref;
      b.rect = Rect{csv::parse_int<std::int32_t>(t, i, 3),
                    csv::parse_int<std::int32_t>(t, i, 4),
                    csv::parse_int<std::int32_t>(t, i, 5),
                    csv::parse_int<std::int32_t>(t, i, 6)};
      if (!b.rect.valid() || !b.rect.fits_inside(f.width, f.height)) {
        t.fail(i, "box rect is empty or outside its frame");
      }
      b.species = t.rows[i][7];
      if (b.species.empty()) t.fail(i, "empty species");
      b.substrate = f.substrate;
      if (!fs::exists(ds.image_file(f))) {
        throw Error(ErrorKind::kMissingFrameImage,
                    "box " + std::to_string(b.id) + " references frame image " +
                        ds.image_file(f).string() + " which does not exist");
      }
      ds.boxes.push_back(std::move(b));
    }
  }
  return ds;
}

/// Writes frames in manifest format (used for the mined background set).
inline void write_frames_manifest(const fs::path& path, const std::vector<Frame>& frames) {
  csv::Writer w(path);
  w.row(kFramesHeader);
  for (const auto& f : frames) {
    w.row({f.ref.video_id, std::to_string(f.ref.frame_index),
           std::to_string(f.ref.timestamp.millis), std::to_string(f.width),
           std::to_string(f.height), f.image_path});
  }
  w.close();
}

// ---------------------------------------------------------------------------
// Synthetic fixtures

struct FixtureVideo {
  std::string video_id;
  std::int64_t frame_count = 0;
  std::int64_t frame_stride = 1;  // extracted frame indices: 0, s, 2s, ...
};

struct PlantedBox {
  std::int64_t id = 0;
  std::string video_id;
  std::int64_t frame_index = 0;
  Rect rect;
  std::string species;
};

/// Everything needed to write a synthetic dataset. Colors are derived from
/// `seed`, so two specs differing only in seed give different pixels.
struct FixtureSpec {
  std::uint64_t seed = 0;
  double fps = 30.0;
  std::int32_t width = 320;
  std::int32_t height = 180;
  std::vector<std::string> species;
  std::vector<FixtureVideo> videos;
  std::vector<SubstrateInterval> substrate;
  std::vector<CabofLabel> cabof;
  std::vector<PlantedBox> boxes;
};

namespace detail {

inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline Rgb color_from(std::uint64_t h) {
  return Rgb{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8),
             static_cast<std::uint8_t>(h >> 16)};
}

inline std::string frame_image_name(const std::string& video_id, std::int64_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08lld.png", static_cast<long long>(idx));
  return video_id + "/" + buf;
}

}  // namespace detail

inline Rgb fixture_background_color(std::uint64_t seed, const SubstrateCombo& combo) {
  // Muted tones so planted boxes stand out.
  const Rgb c = detail::color_from(mix64(seed ^ detail::hash_string(combo.canonical())));
  return Rgb{static_cast<std::uint8_t>(40 + c.r % 80),
             static_cast<std::uint8_t>(40 + c.g % 80),
             static_cast<std::uint8_t>(40 + c.b % 80)};
}

inline Rgb fixture_box_color(std::uint64_t seed, std::int64_t box_id) {
  const Rgb c = detail::color_from(
      split_seed(seed ^ 0xB0B0B0B0ULL, static_cast<std::uint64_t>(box_id)));
  return Rgb{static_cast<std::uint8_t>(128 + c.r % 128),
             static_cast<std::uint8_t>(128 + c.g % 128),
             static_cast<std::uint8_t>(c.b)};
}

/// Writes frames/, frames.csv, boxes.csv, cabof.csv and substrate.csv under
/// `dir`. Deterministic: the same spec always yields the same bytes.
inline DatasetRoot make_fixture(const FixtureSpec& spec, const fs::path& dir) {
  const DatasetRoot root = DatasetRoot::at(dir, spec.fps);
  std::error_code ec;
  fs::create_directories(root.frames_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + root.frames_dir.string());

  const SubstrateTrack track(spec.substrate);
  std::map<std::pair<std::string, std::int64_t>, std::vector<const PlantedBox*>> planted;
  for (const auto& b : spec.boxes) planted[{b.video_id, b.frame_index}].push_back(&b);

  std::vector<Frame> frames;
  for (const auto& v : spec.videos) {
    fs::create_directories(root.frames_dir / v.video_id, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create frame directory for " + v.video_id);
    for (std::int64_t k = 0; k < v.frame_count; ++k) {
      Frame f;
      f.ref.video_id = v.video_id;
      f.ref.frame_index = k * v.frame_stride;
      f.ref.timestamp = frame_timestamp(f.ref.frame_index, spec.fps);
      f.width = spec.width;
      f.height = spec.height;
      f.image_path = detail::frame_image_name(v.video_id, f.ref.frame_index);
      f.substrate = track.lookup(v.video_id, f.ref.timestamp);

      Image img(spec.width, spec.height, fixture_background_color(spec.seed, f.substrate));
      if (auto it = planted.find({v.video_id, f.ref.frame_index}); it != planted.end()) {
        for (const auto* b : it->second) {
          if (!b->rect.valid() || !b->rect.fits_inside(spec.width, spec.height)) {
            throw Error(ErrorKind::kInvalidArgument,
                        "planted box " + std::to_string(b->id) + " does not fit the frame");
          }
          img.fill_rect(b->rect, fixture_box_color(spec.seed, b->id));
        }
      }
      write_png(root.frames_dir / f.image_path, img);
      frames.push_back(std::move(f));
    }
  }
  write_frames_manifest(root.frames_manifest, frames);

  {
    csv::Writer w(root.boxes_path);
    w.row(kBoxesHeader);
    for (const auto& b : spec.boxes) {
      w.row({std::to_string(b.id), b.video_id, std::to_string(b.frame_index),
             std::to_string(b.rect.x), std::to_string(b.rect.y), std::to_string(b.rect.w),
             std::to_string(b.rect.h), b.species});
    }
    w.close();
  }
  {
    csv::Writer w(root.cabof_path);
    w.row(kCabofHeader);
    for (const auto& c : spec.cabof) {
      w.row({c.video_id, std::to_string(c.timestamp.millis), c.species,
             std::to_string(c.count)});
    }
    w.close();
  }
  {
    csv::Writer w(root.substrate_path);
    w.row(kSubstrateHeader);
    for (const auto& iv : spec.substrate) {
      std::string codes;
      for (const auto& c : iv.combo.codes()) {
        if (!codes.empty()) codes += ';';
        codes += c;
      }
      w.row({iv.video_id, std::to_string(iv.start.millis), std::to_string(iv.end.millis),
             codes});
    }
    w.close();
  }
  return root;
}

/// Knobs for randomly generated fixture specs.
struct FixtureShape {
  int videos = 2;
  std::int64_t frames_per_video = 120;
  std::int64_t frame_stride = 30;  // one extracted frame per second at 30 fps
  std::int32_t width = 320;
  std::int32_t height = 180;
  int species = 5;
  int boxes = 60;
  int cabof = 10;
  std::int32_t min_box = 8;
  std::int32_t max_box = 40;
  std::vector<std::string> substrate_codes = {"boulder", "cobble", "mud", "rock", "sand"};
  int max_codes_per_combo = 2;
  double substrate_gap_probability = 0.1;  // chance a segment is left unlabeled
};

/// Draws a fixture spec: piecewise-constant substrate tracks, CABOF events,
/// and boxes planted mostly on frames close to CABOF events, the way partial
/// annotations concentrate on busy parts of a video.
inline FixtureSpec random_fixture_spec(std::uint64_t seed, const FixtureShape& shape) {
  Rng rng(split_seed(seed, 0xF1C7));
  FixtureSpec spec;
  spec.seed = seed;
  spec.width = shape.width;
  spec.height = shape.height;
  for (int s = 0; s < shape.species; ++s) spec.species.push_back("sp" + std::to_string(s));

  for (int v = 0; v < shape.videos; ++v) {
    FixtureVideo video{"v" + std::to_string(v), shape.frames_per_video, shape.frame_stride};
    const std::int64_t duration =
        frame_timestamp(shape.frames_per_video * shape.frame_stride, spec.fps).millis;
    std::int64_t t = 0;
    while (t < duration) {
      const std::int64_t len = rng.uniform_int(duration / 8 + 1, duration / 3 + 1);
      const std::int64_t end = std::min(duration, t + len);
      if (rng.uniform_real() >= shape.substrate_gap_probability) {
        std::vector<std::string> codes;
        const int k = static_cast<int>(rng.uniform_int(1, shape.max_codes_per_combo));
        for (int i = 0; i < k; ++i) {
          codes.push_back(shape.substrate_codes[rng.index(shape.substrate_codes.size())]);
        }
        spec.substrate.push_back({video.video_id, Timestamp{t}, Timestamp{end},
                                  canonical_combo(std::move(codes))});
      }
      t = end;
    }
    spec.videos.push_back(std::move(video));
  }

  for (int c = 0; c < shape.cabof; ++c) {
    const auto& video = spec.videos[rng.index(spec.videos.size())];
    const std::int64_t idx = rng.uniform_int(0, video.frame_count - 1) * video.frame_stride;
    spec.cabof.push_back({video.video_id, frame_timestamp(idx, spec.fps),
                          spec.species[rng.index(spec.species.size())],
                          static_cast<std::int32_t>(rng.uniform_int(1, 4))});
  }

  const std::int32_t max_box =
      std::min({shape.max_box, shape.width, shape.height});
  const std::int32_t min_box = std::min(shape.min_box, max_box);
  for (int b = 0; b < shape.boxes; ++b) {
    PlantedBox pb;
    pb.id = b + 1;
    std::int64_t frame_index = 0;
    if (!spec.cabof.empty() && rng.uniform_real() < 0.7) {
      const auto& c = spec.cabof[rng.index(spec.cabof.size())];
      const auto& video = *std::find_if(spec.videos.begin(), spec.videos.end(),
                                        [&](const auto& v) { return v.video_id == c.video_id; });
      const std::int64_t centre =
          std::llround(static_cast<double>(c.timestamp.millis) * spec.fps / 1000.0) /
          video.frame_stride;
      const std::int64_t k = std::clamp<std::int64_t>(centre + rng.uniform_int(-3, 3), 0,
                                                      video.frame_count - 1);
      pb.video_id = video.video_id;
      frame_index = k * video.frame_stride;
    } else {
      const auto& video = spec.videos[rng.index(spec.videos.size())];
      pb.video_id = video.video_id;
      frame_index = rng.uniform_int(0, video.frame_count - 1) * video.frame_stride;
    }
    pb.frame_index = frame_index;
    pb.rect.w = static_cast<std::int32_t>(rng.uniform_int(min_box, max_box));
    pb.rect.h = static_cast<std::int32_t>(rng.uniform_int(min_box, max_box));
    pb.rect.x = static_cast<std::int32_t>(rng.uniform_int(0, shape.width - pb.rect.w));
    pb.rect.y = static_cast<std::int32_t>(rng.uniform_int(0, shape.height - pb.rect.h));
    pb.species = spec.species[rng.index(spec.species.size())];
    spec.boxes.push_back(std::move(pb));
  }
  return spec;
}

}  // namespace cforge
