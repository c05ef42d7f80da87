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

// Command-line front end: fixture, mine, stats, synthesize, evaluate, merge.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "collage_forge/collage_forge.hpp"

namespace {

using namespace cforge;

struct DatasetFlags {
  std::string root;
  double fps = 30.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--root", root, "dataset directory (frames.csv, boxes.csv, cabof.csv, "
                                    "substrate.csv, frames/)")
        ->required();
    cmd->add_option("--fps", fps, "frame rate used to check frame timestamps")
        ->check(CLI::PositiveNumber);
  }

  DatasetRoot resolve() const { return DatasetRoot::at(root, fps); }
};

MiningConfig mining_config(double buffer_seconds) {
  if (!(buffer_seconds >= 0.0) || !std::isfinite(buffer_seconds)) {
    throw Error(ErrorKind::kInvalidArgument, "--buffer-seconds must be >= 0");
  }
  return MiningConfig{std::llround(buffer_seconds * 1000.0)};
}

std::uint64_t default_seed() {
  const char* env = std::getenv("COLLAGE_FORGE_SEED");
  if (!env || !*env) return 0;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno || *end != '\0' || env[0] == '-') {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("COLLAGE_FORGE_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

std::string fmt3(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collage_forge: context matched collage synthesis and detection metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // fixture
  auto* fixture = app.add_subcommand("fixture", "write a deterministic synthetic dataset");
  std::string fixture_out;
  std::optional<std::uint64_t> fixture_seed;
  FixtureShape shape;
  bool hd_shape = false;
  fixture->add_option("--out", fixture_out, "output directory")->required();
  fixture->add_option("--seed", fixture_seed, "fixture seed");
  fixture->add_flag("--hd", hd_shape,
                    "1920x1080 frames, 4 videos x 300 frames, 10 species, 400 boxes");
  fixture->add_option("--videos", shape.videos)->check(CLI::PositiveNumber);
  fixture->add_option("--frames-per-video", shape.frames_per_video)->check(CLI::PositiveNumber);
  fixture->add_option("--frame-stride", shape.frame_stride)->check(CLI::PositiveNumber);
  fixture->add_option("--width", shape.width)->check(CLI::PositiveNumber);
  fixture->add_option("--height", shape.height)->check(CLI::PositiveNumber);
  fixture->add_option("--species", shape.species)->check(CLI::PositiveNumber);
  fixture->add_option("--boxes", shape.boxes)->check(CLI::NonNegativeNumber);
  fixture->add_option("--cabof", shape.cabof)->check(CLI::NonNegativeNumber);
  fixture->add_option("--min-box", shape.min_box)->check(CLI::PositiveNumber);
  fixture->add_option("--max-box", shape.max_box)->check(CLI::PositiveNumber);

  // mine
  auto* mine = app.add_subcommand("mine", "write the background frame set as a frames manifest");
  DatasetFlags mine_ds;
  mine_ds.add(mine);
  double mine_buffer = 10.0;
  std::string mine_out;
  mine->add_option("--buffer-seconds", mine_buffer, "half-width of the window removed around "
                                                    "each CABOF label")
      ->capture_default_str();
  mine->add_option("--out", mine_out, "output frames manifest")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "per-combo background and box counts (CSV)");
  DatasetFlags stats_ds;
  stats_ds.add(stats);
  double stats_buffer = 10.0;
  stats->add_option("--buffer-seconds", stats_buffer)->capture_default_str();

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "generate collages and write the dataset");
  DatasetFlags synth_ds;
  synth_ds.add(synth);
  std::string synth_out;
  std::string mode_name = "matched";
  SynthesisConfig cfg;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  double synth_buffer = 10.0;
  std::size_t cache_frames = 32;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--mode", mode_name, "matched | random")
      ->check(CLI::IsMember({"matched", "random"}))
      ->capture_default_str();
  synth->add_option("--min-collages", cfg.min_collages)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--max-boxes", cfg.max_boxes)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--tau", cfg.tau, "visible-fraction threshold in [0, 1)")
      ->capture_default_str();
  synth->add_option("--attempts", cfg.max_place_attempts, "redraws per box before skipping")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--seed", seed, "master seed (default: $COLLAGE_FORGE_SEED or 0)");
  synth->add_option("--workers", workers, "rendering threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--buffer-seconds", synth_buffer)->capture_default_str();
  synth->add_option("--cache-frames", cache_frames, "decoded frames kept in memory")
      ->check(CLI::PositiveNumber);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score detections against COCO-style ground truth");
  std::string ann_path, det_path, report_path;
  bool full_suite = false;
  eval->add_option("--annotations", ann_path)->required();
  eval->add_option("--detections", det_path)->required();
  eval->add_flag("--full-suite", full_suite, "print AP50, AP75, AP, AP_S, AP_M, AP_L");
  eval->add_option("--json", report_path, "also write the report as JSON");

  // merge
  auto* merge = app.add_subcommand("merge", "merge original and collage annotation files");
  std::string merge_a, merge_b, merge_out;
  merge->add_option("--original", merge_a)->required();
  merge->add_option("--collage", merge_b)->required();
  merge->add_option("--out", merge_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*fixture) {
      if (hd_shape) {
        FixtureShape d;
        d.videos = 4;
        d.frames_per_video = 300;
        d.frame_stride = 30;
        d.width = 1920;
        d.height = 1080;
        d.species = 10;
        d.boxes = 400;
        d.cabof = 40;
        d.min_box = 24;
        d.max_box = 240;
        shape = d;
      }
      const auto spec = random_fixture_spec(fixture_seed.value_or(default_seed()), shape);
      const auto root = make_fixture(spec, fixture_out);
      std::cout << "fixture " << root.frames_manifest.parent_path().string()
                << " frames=" << shape.videos * shape.frames_per_video
                << " boxes=" << spec.boxes.size() << " cabof=" << spec.cabof.size() << "\n";
      return 0;
    }

    if (*mine) {
      const auto mcfg = mining_config(mine_buffer);
      const auto ds = load_dataset(mine_ds.resolve());
      const auto bgs = mine_backgrounds(ds.frames, ds.cabof, mcfg, &Frame::ref);
      write_frames_manifest(mine_out, bgs);
      const double ratio =
          ds.frames.empty() ? 0.0
                            : 1.0 - static_cast<double>(bgs.size()) / static_cast<double>(ds.frames.size());
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", ratio);
      std::cout << "frames=" << ds.frames.size() << " backgrounds=" << bgs.size()
                << " removed_ratio=" << buf << "\n";
      return 0;
    }

    if (*stats) {
      const auto mcfg = mining_config(stats_buffer);
      const auto ds = load_dataset(stats_ds.resolve());
      const auto bgs = mine_backgrounds(ds.frames, ds.cabof, mcfg, &Frame::ref);
      write_combo_stats(std::cout, combo_stats(build_index(bgs, ds.boxes, ds.substrate)));
      return 0;
    }

    if (*synth) {
      cfg.mode = parse_mode(mode_name);
      cfg.master_seed = seed ? *seed : default_seed();
      cfg.validate();
      const auto mcfg = mining_config(synth_buffer);
      const auto root = synth_ds.resolve();
      const auto ds = load_dataset(root);
      const auto layout = OutputLayout::in(synth_out);
      const auto run = synthesize_dataset(ds, mcfg, cfg, layout, workers, cache_frames);
      write_text_file(layout.meta_path, run_meta(root, mcfg, cfg, workers, run).dump(2) + "\n");
      std::cout << "collages=" << run.planning.records.size()
                << " annotations=" << run.written.annotations
                << " backgrounds=" << run.n_backgrounds << " skipped_boxes=" << run.skipped_boxes
                << " discarded_draws=" << run.planning.discarded_draws
                << " refills=" << run.planning.refills
                << " unmatched_combos=" << run.planning.unmatched_combos.size() << "\n";
      return 0;
    }

    if (*eval) {
      const auto coco = read_coco(ann_path);
      const auto dets = read_detections(det_path);
      check_vocabulary(coco, dets);
      const auto gts = ground_truth_from_coco(coco);
      const auto r = evaluate(gts, dets);
      std::cout << "mAP@0.5 " << fmt3(r.map) << "\n";
      if (full_suite) {
        std::cout << "AP50 " << fmt3(r.ap50) << "\n"
                  << "AP75 " << fmt3(r.ap75) << "\n"
                  << "AP " << fmt3(r.ap50_95) << "\n"
                  << "AP_S " << fmt3(r.ap_small) << "\n"
                  << "AP_M " << fmt3(r.ap_medium) << "\n"
                  << "AP_L " << fmt3(r.ap_large) << "\n";
        for (const auto& [species, ap] : r.per_class_ap) {
          std::cout << "AP50[" << species << "] " << fmt3(ap) << "\n";
        }
      }
      if (!report_path.empty()) {
        json per_class = json::object();
        for (const auto& [species, ap] : r.per_class_ap) per_class[species] = opt_json(ap);
        const json report = {{"mAP@0.5", opt_json(r.map)},   {"AP50", opt_json(r.ap50)},
                             {"AP75", opt_json(r.ap75)},     {"AP", opt_json(r.ap50_95)},
                             {"AP_S", opt_json(r.ap_small)}, {"AP_M", opt_json(r.ap_medium)},
                             {"AP_L", opt_json(r.ap_large)}, {"per_class_AP50", per_class}};
        write_text_file(report_path, report.dump(2) + "\n");
      }
      return 0;
    }

    if (*merge) {
      const auto merged = merge_manifests(read_coco(merge_a), read_coco(merge_b));
      write_coco(merge_out, merged);
      std::cout << "images=" << merged.images.size()
                << " annotations=" << merged.annotations.size() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
