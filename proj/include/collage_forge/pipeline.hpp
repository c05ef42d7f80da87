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
#include <mutex>
#include <string>
#include <vector>

#include "collage_forge/background_mining.hpp"
#include "collage_forge/collage_engine.hpp"
#include "collage_forge/context_index.hpp"
#include "collage_forge/dataset_io.hpp"
#include "collage_forge/ingestion.hpp"

namespace cforge {

inline constexpr const char* kVersion = "0.3.0";

struct SynthesisRun {
  std::size_t n_frames = 0;
  std::size_t n_backgrounds = 0;
  PlanningResult planning;
  WriteSummary written;
  std::size_t skipped_boxes = 0;
};

/// Mines backgrounds, indexes them, plans and renders the collages, and
/// writes the full output layout. Output bytes depend only on the dataset and
/// the configs, never on `workers`.
inline SynthesisRun synthesize_dataset(const Dataset& ds, const MiningConfig& mining,
                                       const SynthesisConfig& cfg, const OutputLayout& layout,
                                       unsigned workers = 1, std::size_t cache_frames = 32) {
  cfg.validate();
  SynthesisRun run;
  run.n_frames = ds.frames.size();
  const auto backgrounds = mine_backgrounds(ds.frames, ds.cabof, mining, &Frame::ref);
  run.n_backgrounds = backgrounds.size();
  const ContextIndex index = build_index(backgrounds, ds.boxes, ds.substrate);
  run.planning = plan_collages(index, cfg);
  for (const auto& r : run.planning.records) run.skipped_boxes += r.skips.size();

  layout.prepare();
  const auto plans = run.planning.plans();
  const BoxLookup boxes = make_box_lookup(ds.boxes);
  const FrameStore store(ds, cache_frames);

  std::vector<CollageOutput> outputs(plans.size());
  render_all(plans, boxes, store, workers, [&](std::size_t i, RenderedCollage&& rc) {
    write_png(layout.image_path(plans[i].plan_id), rc.image);
    outputs[i].record = &run.planning.records[i];
    outputs[i].width = rc.image.width();
    outputs[i].height = rc.image.height();
    outputs[i].annotations = std::move(rc.annotations);
  });

  const CocoDataset original = original_coco(ds);
  run.written = write_dataset(outputs, boxes, layout, &original);
  return run;
}

inline json run_meta(const DatasetRoot& root, const MiningConfig& mining,
                     const SynthesisConfig& cfg, unsigned workers, const SynthesisRun& run) {
  return json{{"tool", "collage_forge"},
              {"version", kVersion},
              {"master_seed", cfg.master_seed},
              {"dataset",
               {{"frames_manifest", root.frames_manifest.string()},
                {"frames_dir", root.frames_dir.string()},
                {"boxes", root.boxes_path.string()},
                {"cabof", root.cabof_path.string()},
                {"substrate", root.substrate_path.string()},
                {"fps", root.fps}}},
              {"mining", {{"buffer_ms", mining.buffer_ms}}},
              {"synthesis",
               {{"mode", to_string(cfg.mode)},
                {"max_boxes", cfg.max_boxes},
                {"min_collages", cfg.min_collages},
                {"tau", cfg.tau},
                {"max_place_attempts", cfg.max_place_attempts}}},
              {"workers", workers},
              {"result",
               {{"frames", run.n_frames},
                {"backgrounds", run.n_backgrounds},
                {"collages", run.planning.records.size()},
                {"annotations", run.written.annotations},
                {"skipped_boxes", run.skipped_boxes},
                {"discarded_draws", run.planning.discarded_draws},
                {"refills", run.planning.refills}}}};
}

}  // namespace cforge
