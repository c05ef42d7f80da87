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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "collage_forge/collage_engine.hpp"
#include "collage_forge/core_model.hpp"
#include "collage_forge/csv.hpp"
#include "collage_forge/errors.hpp"
#include "collage_forge/ingestion.hpp"

namespace cforge {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// COCO-style container

struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::string video_id;
  std::int64_t frame_index = 0;
  std::optional<std::int64_t> plan_id;
  std::map<std::string, std::string> attributes;  // "substrate" -> canonical combo
  std::optional<std::string> source;              // "original" | "collage" after merging

  friend bool operator==(const CocoImage&, const CocoImage&) = default;
};

struct CocoAnnotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Rect bbox;
  std::int32_t iscrowd = 0;

  friend bool operator==(const CocoAnnotation&, const CocoAnnotation&) = default;
};

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
  std::string supercategory = "species";

  friend bool operator==(const CocoCategory&, const CocoCategory&) = default;
};

struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<CocoCategory> categories;

  const CocoCategory* category_by_name(const std::string& name) const {
    for (const auto& c : categories) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  friend bool operator==(const CocoDataset&, const CocoDataset&) = default;
};

inline json to_json_value(const CocoDataset& ds) {
  json images = json::array();
  for (const auto& im : ds.images) {
    json j = {{"id", im.id},
              {"file_name", im.file_name},
              {"width", im.width},
              {"height", im.height},
              {"video_id", im.video_id},
              {"frame_index", im.frame_index},
              {"attributes", im.attributes}};
    if (im.plan_id) j["plan_id"] = *im.plan_id;
    if (im.source) j["source"] = *im.source;
    images.push_back(std::move(j));
  }
  json anns = json::array();
  for (const auto& a : ds.annotations) {
    anns.push_back({{"id", a.id},
                    {"image_id", a.image_id},
                    {"category_id", a.category_id},
                    {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                    {"area", a.bbox.area()},
                    {"iscrowd", a.iscrowd}});
  }
  json cats = json::array();
  for (const auto& c : ds.categories) {
    cats.push_back({{"id", c.id}, {"name", c.name}, {"supercategory", c.supercategory}});
  }
  return json{{"images", images}, {"annotations", anns}, {"categories", cats}};
}

inline CocoDataset coco_from_json(const json& j) {
  CocoDataset ds;
  try {
    for (const auto& im : j.at("images")) {
      CocoImage out;
      out.id = im.at("id").get<std::int64_t>();
      out.file_name = im.value("file_name", "");
      out.width = im.value("width", 0);
      out.height = im.value("height", 0);
      out.video_id = im.value("video_id", "");
      out.frame_index = im.value("frame_index", std::int64_t{0});
      if (im.contains("plan_id")) out.plan_id = im.at("plan_id").get<std::int64_t>();
      if (im.contains("attributes")) {
        out.attributes = im.at("attributes").get<std::map<std::string, std::string>>();
      }
      if (im.contains("source")) out.source = im.at("source").get<std::string>();
      ds.images.push_back(std::move(out));
    }
    for (const auto& a : j.at("annotations")) {
      CocoAnnotation out;
      out.id = a.at("id").get<std::int64_t>();
      out.image_id = a.at("image_id").get<std::int64_t>();
      out.category_id = a.at("category_id").get<std::int64_t>();
      const auto& b = a.at("bbox");
      if (!b.is_array() || b.size() != 4) {
        throw Error(ErrorKind::kParse, "annotation " + std::to_string(out.id) +
                                           " bbox must have 4 entries");
      }
      out.bbox = Rect{b[0].get<std::int32_t>(), b[1].get<std::int32_t>(),
                      b[2].get<std::int32_t>(), b[3].get<std::int32_t>()};
      out.iscrowd = a.value("iscrowd", 0);
      ds.annotations.push_back(out);
    }
    for (const auto& c : j.at("categories")) {
      ds.categories.push_back({c.at("id").get<std::int64_t>(), c.at("name").get<std::string>(),
                               c.value("supercategory", "species")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed annotation file: ") + e.what());
  }
  return ds;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline void write_coco(const std::filesystem::path& path, const CocoDataset& ds) {
  write_text_file(path, to_json_value(ds).dump(1) + "\n");
}

inline CocoDataset read_coco(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return coco_from_json(j);
}

/// Categories named by species, sorted by name, ids 1..K.
inline std::vector<CocoCategory> categories_for(const std::set<std::string>& species) {
  std::vector<CocoCategory> out;
  std::int64_t id = 1;
  for (const auto& s : species) out.push_back({id++, s, "species"});
  return out;
}

/// The annotated training frames (every frame carrying at least one box) as
/// a COCO container.
inline CocoDataset original_coco(const Dataset& ds) {
  std::set<std::string> species;
  for (const auto& b : ds.boxes) species.insert(b.species);
  CocoDataset out;
  out.categories = categories_for(species);
  std::map<std::string, std::int64_t> cat_id;
  for (const auto& c : out.categories) cat_id[c.name] = c.id;

  std::map<std::pair<std::string, std::int64_t>, std::vector<const BoxLabel*>> by_frame;
  for (const auto& b : ds.boxes) by_frame[{b.frame.video_id, b.frame.frame_index}].push_back(&b);
  std::int64_t image_id = 0;
  std::int64_t ann_id = 0;
  for (const auto& f : ds.frames) {
    const auto it = by_frame.find({f.ref.video_id, f.ref.frame_index});
    if (it == by_frame.end()) continue;
    CocoImage im;
    im.id = ++image_id;
    im.file_name = ds.image_file(f).string();
    im.width = f.width;
    im.height = f.height;
    im.video_id = f.ref.video_id;
    im.frame_index = f.ref.frame_index;
    im.attributes["substrate"] = f.substrate.canonical();
    out.images.push_back(std::move(im));
    for (const auto* b : it->second) {
      out.annotations.push_back({++ann_id, image_id, cat_id[b->species], b->rect, 0});
    }
  }
  return out;
}

/// Concatenates the original and collage containers. Image and annotation ids
/// are re-keyed to 1..N in (original, collage) order; categories are unified
/// by species name.
inline CocoDataset merge_manifests(const CocoDataset& original, const CocoDataset& collage) {
  std::map<std::string, std::string> super;
  for (const auto* ds : {&original, &collage}) {
    for (const auto& c : ds->categories) {
      auto [it, fresh] = super.emplace(c.name, c.supercategory);
      if (!fresh && it->second != c.supercategory) {
        throw Error(ErrorKind::kSpeciesMismatch,
                    "category '" + c.name + "' has supercategory '" + it->second +
                        "' and '" + c.supercategory + "'");
      }
    }
  }
  CocoDataset out;
  std::map<std::string, std::int64_t> new_cat;
  std::int64_t cid = 0;
  for (const auto& [name, sc] : super) {
    out.categories.push_back({++cid, name, sc});
    new_cat[name] = cid;
  }

  std::int64_t image_id = 0;
  std::int64_t ann_id = 0;
  auto append = [&](const CocoDataset& ds, const char* source) {
    std::map<std::int64_t, std::string> cat_name;
    for (const auto& c : ds.categories) cat_name[c.id] = c.name;
    std::map<std::int64_t, std::int64_t> image_map;
    for (const auto& im : ds.images) {
      CocoImage copy = im;
      copy.id = ++image_id;
      copy.source = source;
      if (!image_map.emplace(im.id, copy.id).second) {
        throw Error(ErrorKind::kParse, "duplicate image id " + std::to_string(im.id));
      }
      out.images.push_back(std::move(copy));
    }
    for (const auto& a : ds.annotations) {
      const auto im = image_map.find(a.image_id);
      const auto cat = cat_name.find(a.category_id);
      if (im == image_map.end() || cat == cat_name.end()) {
        throw Error(ErrorKind::kParse,
                    "annotation " + std::to_string(a.id) + " has dangling image or category");
      }
      CocoAnnotation copy = a;
      copy.id = ++ann_id;
      copy.image_id = im->second;
      copy.category_id = new_cat.at(cat->second);
      out.annotations.push_back(copy);
    }
  };
  append(original, "original");
  append(collage, "collage");
  return out;
}

// ---------------------------------------------------------------------------
// Provenance sidecar

inline const csv::Row kProvenanceHeader = {"annotation_id", "plan_id",     "source_box_id",
                                           "source_video",  "source_frame", "paint_order",
                                           "visible_px",    "total_px"};

struct ProvenanceRecord {
  std::int64_t annotation_id = 0;
  std::int64_t plan_id = 0;
  std::int64_t source_box_id = 0;
  std::string source_video;
  std::int64_t source_frame = 0;
  std::int32_t paint_order = 0;
  std::int64_t visible_px = 0;
  std::int64_t total_px = 0;

  double visible_fraction() const {
    return static_cast<double>(visible_px) / static_cast<double>(total_px);
  }
  friend bool operator==(const ProvenanceRecord&, const ProvenanceRecord&) = default;
};

inline void write_provenance(const std::filesystem::path& path,
                             const std::vector<ProvenanceRecord>& records) {
  csv::Writer w(path);
  w.row(kProvenanceHeader);
  for (const auto& r : records) {
    w.row({std::to_string(r.annotation_id), std::to_string(r.plan_id),
           std::to_string(r.source_box_id), r.source_video, std::to_string(r.source_frame),
           std::to_string(r.paint_order), std::to_string(r.visible_px),
           std::to_string(r.total_px)});
  }
  w.close();
}

inline std::vector<ProvenanceRecord> read_provenance(const std::filesystem::path& path) {
  const auto t = csv::read_table(path, kProvenanceHeader);
  std::vector<ProvenanceRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ProvenanceRecord r;
    r.annotation_id = csv::parse_int<std::int64_t>(t, i, 0);
    r.plan_id = csv::parse_int<std::int64_t>(t, i, 1);
    r.source_box_id = csv::parse_int<std::int64_t>(t, i, 2);
    r.source_video = t.rows[i][3];
    r.source_frame = csv::parse_int<std::int64_t>(t, i, 4);
    r.paint_order = csv::parse_int<std::int32_t>(t, i, 5);
    r.visible_px = csv::parse_int<std::int64_t>(t, i, 6);
    r.total_px = csv::parse_int<std::int64_t>(t, i, 7);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest: one JSON object per line, one line per plan.
//
//   plan_id, seed, mode, refill_epoch, source_combo,
//   background {video_id, frame_index, timestamp_ms}, background_substrate,
//   sampled_box_ids [..], placements [{box_id, x, y, w, h, paint_order}],
//   skips [{box_id, reason}]

inline json manifest_line(const PlanRecord& r) {
  json placements = json::array();
  for (const auto& p : r.plan.placements) {
    placements.push_back({{"box_id", p.source_box_id},
                          {"x", p.dest.x},
                          {"y", p.dest.y},
                          {"w", p.dest.w},
                          {"h", p.dest.h},
                          {"paint_order", p.paint_order}});
  }
  json skips = json::array();
  for (const auto& s : r.skips) {
    skips.push_back({{"box_id", s.box_id}, {"reason", to_string(s.reason)}});
  }
  return json{{"plan_id", r.plan.plan_id},
              {"seed", r.plan.seed},
              {"mode", to_string(r.plan.mode)},
              {"refill_epoch", r.refill_epoch},
              {"source_combo", r.source_combo.canonical()},
              {"background",
               {{"video_id", r.plan.background.video_id},
                {"frame_index", r.plan.background.frame_index},
                {"timestamp_ms", r.plan.background.timestamp.millis}}},
              {"background_substrate", r.plan.background_substrate.canonical()},
              {"sampled_box_ids", r.sampled_box_ids},
              {"placements", placements},
              {"skips", skips}};
}

inline PlanRecord plan_record_from_json(const json& j) {
  PlanRecord r;
  try {
    r.plan.plan_id = j.at("plan_id").get<std::int64_t>();
    r.plan.seed = j.at("seed").get<std::uint64_t>();
    r.plan.mode = parse_mode(j.at("mode").get<std::string>());
    r.refill_epoch = j.at("refill_epoch").get<std::int64_t>();
    r.source_combo = combo_from_canonical(j.at("source_combo").get<std::string>());
    const auto& bg = j.at("background");
    r.plan.background.video_id = bg.at("video_id").get<std::string>();
    r.plan.background.frame_index = bg.at("frame_index").get<std::int64_t>();
    r.plan.background.timestamp = Timestamp{bg.at("timestamp_ms").get<std::int64_t>()};
    r.plan.background_substrate =
        combo_from_canonical(j.at("background_substrate").get<std::string>());
    r.sampled_box_ids = j.at("sampled_box_ids").get<std::vector<std::int64_t>>();
    for (const auto& p : j.at("placements")) {
      r.plan.placements.push_back(
          {p.at("box_id").get<std::int64_t>(),
           Rect{p.at("x").get<std::int32_t>(), p.at("y").get<std::int32_t>(),
                p.at("w").get<std::int32_t>(), p.at("h").get<std::int32_t>()},
           p.at("paint_order").get<std::int32_t>()});
    }
    for (const auto& s : j.at("skips")) {
      r.skips.push_back({s.at("box_id").get<std::int64_t>(),
                         s.at("reason").get<std::string>() == "too_large"
                             ? SkipReason::kTooLarge
                             : SkipReason::kOccluded});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed run manifest record: ") + e.what());
  }
  return r;
}

inline void write_run_manifest(const std::filesystem::path& path,
                               const std::vector<PlanRecord>& records) {
  std::string text;
  for (const auto& r : records) text += manifest_line(r).dump() + "\n";
  write_text_file(path, text);
}

inline std::vector<PlanRecord> read_run_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<PlanRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    out.push_back(plan_record_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output layout and writer

struct OutputLayout {
  std::filesystem::path out_dir;
  std::filesystem::path images_dir;
  std::filesystem::path annotation_path;
  std::filesystem::path provenance_path;
  std::filesystem::path merged_manifest_path;
  std::filesystem::path run_manifest_path;
  std::filesystem::path meta_path;

  static OutputLayout in(const std::filesystem::path& dir) {
    return OutputLayout{dir,
                        dir / "images",
                        dir / "annotations.json",
                        dir / "provenance.csv",
                        dir / "merged.json",
                        dir / "run_manifest.jsonl",
                        dir / "run.meta"};
  }

  void prepare() const {
    const std::set<std::filesystem::path> distinct{annotation_path, provenance_path,
                                                   merged_manifest_path, run_manifest_path,
                                                   meta_path};
    if (distinct.size() != 5) {
      throw Error(ErrorKind::kInvalidArgument, "output paths must be distinct");
    }
    std::error_code ec;
    std::filesystem::create_directories(images_dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + images_dir.string());
  }

  std::filesystem::path image_path(std::int64_t plan_id) const {
    return images_dir / collage_file_name(plan_id);
  }

  static std::string collage_file_name(std::int64_t plan_id) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "collage_%06lld.png", static_cast<long long>(plan_id));
    return buf;
  }
};

struct WriteSummary {
  std::size_t images = 0;
  std::size_t annotations = 0;
  std::size_t provenance_records = 0;
};

/// Everything needed to describe one rendered collage without its pixels.
struct CollageOutput {
  const PlanRecord* record = nullptr;
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<CollageAnnotation> annotations;
};

/// Builds the collage COCO container and provenance records. Images get ids
/// 1..N in plan order, annotations 1..M in (plan, paint order) order.
inline std::pair<CocoDataset, std::vector<ProvenanceRecord>> collage_coco(
    const std::vector<CollageOutput>& outputs, const BoxLookup& boxes,
    const std::set<std::string>& extra_species = {}) {
  std::set<std::int64_t> plan_ids;
  std::set<std::string> species = extra_species;
  for (const auto& o : outputs) {
    if (!plan_ids.insert(o.record->plan.plan_id).second) {
      throw Error(ErrorKind::kDuplicatePlanId,
                  "plan id " + std::to_string(o.record->plan.plan_id) + " appears twice");
    }
    for (const auto& a : o.annotations) species.insert(a.species);
  }
  CocoDataset coco;
  coco.categories = categories_for(species);
  std::map<std::string, std::int64_t> cat_id;
  for (const auto& c : coco.categories) cat_id[c.name] = c.id;

  std::vector<ProvenanceRecord> prov;
  std::int64_t image_id = 0;
  std::int64_t ann_id = 0;
  for (const auto& o : outputs) {
    const auto& plan = o.record->plan;
    CocoImage im;
    im.id = ++image_id;
    im.file_name = "images/" + OutputLayout::collage_file_name(plan.plan_id);
    im.width = o.width;
    im.height = o.height;
    im.video_id = "collage";
    im.frame_index = plan.plan_id;
    im.plan_id = plan.plan_id;
    im.attributes["substrate"] = plan.background_substrate.canonical();
    coco.images.push_back(std::move(im));
    for (const auto& a : o.annotations) {
      coco.annotations.push_back({++ann_id, image_id, cat_id.at(a.species), a.rect, 0});
      const BoxLabel& src = boxes.at(a.source_box_id);
      prov.push_back({ann_id, plan.plan_id, a.source_box_id, src.frame.video_id,
                      src.frame.frame_index, a.paint_order, a.visible_px, a.total_px});
    }
  }
  return {std::move(coco), std::move(prov)};
}

/// Writes annotations, provenance, run manifest and (when `original` is given)
/// the merged original+collage manifest. Images are written separately while
/// rendering.
inline WriteSummary write_dataset(const std::vector<CollageOutput>& outputs,
                                  const BoxLookup& boxes, const OutputLayout& layout,
                                  const CocoDataset* original = nullptr) {
  std::set<std::string> species;
  if (original) {
    for (const auto& c : original->categories) species.insert(c.name);
  }
  auto [coco, prov] = collage_coco(outputs, boxes, species);
  write_coco(layout.annotation_path, coco);
  write_provenance(layout.provenance_path, prov);
  std::vector<PlanRecord> records;
  records.reserve(outputs.size());
  for (const auto& o : outputs) records.push_back(*o.record);
  write_run_manifest(layout.run_manifest_path, records);
  if (original) write_coco(layout.merged_manifest_path, merge_manifests(*original, coco));
  return WriteSummary{coco.images.size(), coco.annotations.size(), prov.size()};
}

}  // namespace cforge
