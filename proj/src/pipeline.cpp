#include "cpl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "cpl/error.hpp"
#include "cpl/eval.hpp"
#include "cpl/io.hpp"
#include "cpl/log.hpp"
#include "cpl/rng.hpp"

namespace cpl {

using nlohmann::json;

namespace {

std::string ctx(const char* where, const char* key) {
  return std::string(where) + "." + key;
}

void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw Error(ErrorKind::config,
                std::string(where) + ": expected a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error(ErrorKind::config, std::string(where) + ": unknown key '" +
                                         it.key() + "'");
    }
  }
}

double num_or(const json& j, const char* where, const char* key, double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) {
    throw Error(ErrorKind::config, ctx(where, key) + " must be a number");
  }
  return it->get<double>();
}

int int_or(const json& j, const char* where, const char* key, int dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number_integer()) {
    throw Error(ErrorKind::config, ctx(where, key) + " must be an integer");
  }
  return it->get<int>();
}

std::uint64_t u64_or(const json& j, const char* where, const char* key,
                     std::uint64_t dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number_integer() ||
      (it->is_number_integer() && !it->is_number_unsigned() &&
       it->get<std::int64_t>() < 0)) {
    throw Error(ErrorKind::config,
                ctx(where, key) + " must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

bool bool_or(const json& j, const char* where, const char* key, bool dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_boolean()) {
    throw Error(ErrorKind::config, ctx(where, key) + " must be a boolean");
  }
  return it->get<bool>();
}

Interval interval_or(const json& j, const char* where, const char* key,
                     Interval dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
      !(*it)[1].is_number()) {
    throw Error(ErrorKind::config,
                ctx(where, key) + " must be a [lo, hi] number pair");
  }
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

SizeRange size_range_or(const json& j, const char* where, const char* key,
                        SizeRange dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  std::string nested = ctx(where, key);
  check_keys(*it, nested.c_str(), {"l", "w", "h"});
  SizeRange out = dflt;
  out.l = interval_or(*it, nested.c_str(), "l", dflt.l);
  out.w = interval_or(*it, nested.c_str(), "w", dflt.w);
  out.h = interval_or(*it, nested.c_str(), "h", dflt.h);
  return out;
}

std::vector<double> numbers_or(const json& j, const char* where,
                               const char* key, std::vector<double> dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_array()) {
    throw Error(ErrorKind::config, ctx(where, key) + " must be an array");
  }
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) {
      throw Error(ErrorKind::config,
                  ctx(where, key) + " entries must be numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

SynthConfig parse_synth(const json& j, SynthConfig cfg) {
  const char* W = "synth";
  check_keys(j, W,
             {"num_frames", "frame_dt", "ego_speed", "vehicles", "pedestrians",
              "cyclists", "vehicle_size", "pedestrian_size", "cyclist_size",
              "vehicle_speed", "pedestrian_speed", "cyclist_speed",
              "moving_fraction", "point_density_at_10m",
              "ground_density_at_10m", "range_max", "placement_min",
              "placement_max", "ground_radius", "ground_inner",
              "ground_slope_deg", "sensor_height", "noise_sigma",
              "occlusion"});
  cfg.num_frames = int_or(j, W, "num_frames", cfg.num_frames);
  cfg.frame_dt = num_or(j, W, "frame_dt", cfg.frame_dt);
  cfg.ego_speed = num_or(j, W, "ego_speed", cfg.ego_speed);
  cfg.vehicles = int_or(j, W, "vehicles", cfg.vehicles);
  cfg.pedestrians = int_or(j, W, "pedestrians", cfg.pedestrians);
  cfg.cyclists = int_or(j, W, "cyclists", cfg.cyclists);
  cfg.vehicle_size = size_range_or(j, W, "vehicle_size", cfg.vehicle_size);
  cfg.pedestrian_size =
      size_range_or(j, W, "pedestrian_size", cfg.pedestrian_size);
  cfg.cyclist_size = size_range_or(j, W, "cyclist_size", cfg.cyclist_size);
  cfg.vehicle_speed = interval_or(j, W, "vehicle_speed", cfg.vehicle_speed);
  cfg.pedestrian_speed =
      interval_or(j, W, "pedestrian_speed", cfg.pedestrian_speed);
  cfg.cyclist_speed = interval_or(j, W, "cyclist_speed", cfg.cyclist_speed);
  cfg.moving_fraction = num_or(j, W, "moving_fraction", cfg.moving_fraction);
  cfg.point_density_at_10m =
      num_or(j, W, "point_density_at_10m", cfg.point_density_at_10m);
  cfg.ground_density_at_10m =
      num_or(j, W, "ground_density_at_10m", cfg.ground_density_at_10m);
  cfg.range_max = num_or(j, W, "range_max", cfg.range_max);
  cfg.placement_min = num_or(j, W, "placement_min", cfg.placement_min);
  cfg.placement_max = num_or(j, W, "placement_max", cfg.placement_max);
  cfg.ground_radius = num_or(j, W, "ground_radius", cfg.ground_radius);
  cfg.ground_inner = num_or(j, W, "ground_inner", cfg.ground_inner);
  cfg.ground_slope_deg = num_or(j, W, "ground_slope_deg", cfg.ground_slope_deg);
  cfg.sensor_height = num_or(j, W, "sensor_height", cfg.sensor_height);
  cfg.noise_sigma = num_or(j, W, "noise_sigma", cfg.noise_sigma);
  cfg.occlusion = bool_or(j, W, "occlusion", cfg.occlusion);
  return cfg;
}

MfcConfig parse_mfc(const json& j, MfcConfig cfg) {
  const char* W = "mfc";
  check_keys(j, W,
             {"n", "ppscore_radius", "ppscore_threshold", "ground_tile",
              "ground_inlier_dist", "ground_ransac_iters", "ground_ransac_seed",
              "ground_normal_z_min", "dbscan_eps", "dbscan_min_pts",
              "min_cluster_points", "yaw_step_deg", "min_extent",
              "track_iou_min", "track_coast_frames", "track_iou_mode"});
  cfg.n = int_or(j, W, "n", cfg.n);
  cfg.ppscore_radius = num_or(j, W, "ppscore_radius", cfg.ppscore_radius);
  cfg.ppscore_threshold =
      num_or(j, W, "ppscore_threshold", cfg.ppscore_threshold);
  cfg.ground_tile = num_or(j, W, "ground_tile", cfg.ground_tile);
  cfg.ground_inlier_dist =
      num_or(j, W, "ground_inlier_dist", cfg.ground_inlier_dist);
  cfg.ground_ransac_iters =
      int_or(j, W, "ground_ransac_iters", cfg.ground_ransac_iters);
  cfg.ground_ransac_seed =
      u64_or(j, W, "ground_ransac_seed", cfg.ground_ransac_seed);
  cfg.ground_normal_z_min =
      num_or(j, W, "ground_normal_z_min", cfg.ground_normal_z_min);
  cfg.dbscan_eps = num_or(j, W, "dbscan_eps", cfg.dbscan_eps);
  cfg.dbscan_min_pts = int_or(j, W, "dbscan_min_pts", cfg.dbscan_min_pts);
  cfg.min_cluster_points =
      int_or(j, W, "min_cluster_points", cfg.min_cluster_points);
  cfg.yaw_step_deg = num_or(j, W, "yaw_step_deg", cfg.yaw_step_deg);
  cfg.min_extent = num_or(j, W, "min_extent", cfg.min_extent);
  cfg.track_iou_min = num_or(j, W, "track_iou_min", cfg.track_iou_min);
  cfg.track_coast_frames =
      int_or(j, W, "track_coast_frames", cfg.track_coast_frames);
  if (auto it = j.find("track_iou_mode"); it != j.end()) {
    if (!it->is_string() ||
        (it->get<std::string>() != "bev" && it->get<std::string>() != "volume")) {
      throw Error(ErrorKind::config,
                  "mfc.track_iou_mode must be \"bev\" or \"volume\"");
    }
    cfg.track_iou_mode =
        it->get<std::string>() == "bev" ? IouMode::bev : IouMode::volume;
  }
  return cfg;
}

CssConfig parse_css(const json& j, CssConfig cfg) {
  const char* W = "css";
  check_keys(j, W, {"range_max", "mlo_resolutions", "weights",
                    "kl_truncation", "templates"});
  cfg.range_max = num_or(j, W, "range_max", cfg.range_max);
  if (auto it = j.find("mlo_resolutions"); it != j.end()) {
    if (!it->is_array()) {
      throw Error(ErrorKind::config, "css.mlo_resolutions must be an array");
    }
    cfg.mlo_resolutions.clear();
    for (const auto& v : *it) {
      if (!v.is_number_integer()) {
        throw Error(ErrorKind::config,
                    "css.mlo_resolutions entries must be integers");
      }
      cfg.mlo_resolutions.push_back(v.get<int>());
    }
  }
  if (auto it = j.find("weights"); it != j.end()) {
    std::vector<double> w = numbers_or(j, W, "weights", {});
    if (w.size() != 3) {
      throw Error(ErrorKind::config, "css.weights must have 3 entries");
    }
    cfg.weights = {w[0], w[1], w[2]};
  }
  if (auto it = j.find("templates"); it != j.end()) {
    if (!it->is_object()) {
      throw Error(ErrorKind::config, "css.templates must be an object");
    }
    cfg.templates.clear();
    for (auto t = it->begin(); t != it->end(); ++t) {
      ClassId cls = class_from_string(t.key());
      if (!t.value().is_array() || t.value().size() != 3) {
        throw Error(ErrorKind::config,
                    "css.templates entries must be [l, w, h] triples");
      }
      TemplateBox tpl{t.value()[0].get<double>(), t.value()[1].get<double>(),
                      t.value()[2].get<double>()};
      cfg.templates[cls] = tpl;
    }
  }
  cfg.kl_truncation = num_or(j, W, "kl_truncation", cfg.kl_truncation);
  return cfg;
}

CProtoConfig parse_cproto(const json& j, CProtoConfig cfg) {
  const char* W = "cproto";
  check_keys(j, W, {"eta", "trim_margin", "mover_min_step"});
  cfg.eta = num_or(j, W, "eta", cfg.eta);
  cfg.trim_margin = num_or(j, W, "trim_margin", cfg.trim_margin);
  cfg.mover_min_step = num_or(j, W, "mover_min_step", cfg.mover_min_step);
  return cfg;
}

CbrConfig parse_cbr(const json& j, CbrConfig cfg) {
  const char* W = "cbr";
  check_keys(j, W, {"bins_per_meter", "min_points_for_relocalization",
                    "class_restricted", "yaw_step_deg"});
  cfg.bins_per_meter = int_or(j, W, "bins_per_meter", cfg.bins_per_meter);
  cfg.min_points_for_relocalization = int_or(
      j, W, "min_points_for_relocalization", cfg.min_points_for_relocalization);
  cfg.class_restricted = bool_or(j, W, "class_restricted", cfg.class_restricted);
  cfg.yaw_step_deg = num_or(j, W, "yaw_step_deg", cfg.yaw_step_deg);
  return cfg;
}

CstConfig parse_cst(const json& j, CstConfig cfg) {
  const char* W = "cst";
  check_keys(j, W, {"s_low", "s_high"});
  cfg.s_low = num_or(j, W, "s_low", cfg.s_low);
  cfg.s_high = num_or(j, W, "s_high", cfg.s_high);
  return cfg;
}

json interval_to_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

json size_range_to_json(const SizeRange& sr) {
  return json{{"l", interval_to_json(sr.l)},
              {"w", interval_to_json(sr.w)},
              {"h", interval_to_json(sr.h)}};
}

std::string threshold_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", t);
  return buf;
}

void stage_log(const char* stage, json fields) {
  fields["stage"] = stage;
  log::info(fields.dump());
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void validate_pipeline_config(const PipelineConfig& cfg) {
  if (cfg.num_sequences < 1) {
    throw Error(ErrorKind::config, "pipeline: sequences must be >= 1");
  }
  if (cfg.jobs < 0) {
    throw Error(ErrorKind::config, "pipeline: jobs must be >= 0");
  }
  if (cfg.eval_iou.empty()) {
    throw Error(ErrorKind::config, "pipeline: need at least one IoU threshold");
  }
  for (double t : cfg.eval_iou) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorKind::config,
                  "pipeline: IoU thresholds must be in [0, 1]");
    }
  }
  validate_synth_config(cfg.synth);
  validate_mfc_config(cfg.mfc);
  validate_css_config(cfg.css);
  validate_cproto_config(cfg.cproto);
  validate_cbr_config(cfg.cbr);
  validate_cst_config(cfg.cst);
}

PipelineConfig parse_pipeline_config(const json& j) {
  check_keys(j, "config", {"seed", "sequences", "jobs", "eval_iou", "synth",
                           "mfc", "css", "cproto", "cbr", "cst"});
  PipelineConfig cfg;
  cfg.seed = u64_or(j, "config", "seed", cfg.seed);
  cfg.num_sequences = int_or(j, "config", "sequences", cfg.num_sequences);
  cfg.jobs = int_or(j, "config", "jobs", cfg.jobs);
  cfg.eval_iou = numbers_or(j, "config", "eval_iou", cfg.eval_iou);
  if (auto it = j.find("synth"); it != j.end()) cfg.synth = parse_synth(*it, cfg.synth);
  if (auto it = j.find("mfc"); it != j.end()) cfg.mfc = parse_mfc(*it, cfg.mfc);
  if (auto it = j.find("css"); it != j.end()) cfg.css = parse_css(*it, cfg.css);
  if (auto it = j.find("cproto"); it != j.end()) {
    cfg.cproto = parse_cproto(*it, cfg.cproto);
  }
  if (auto it = j.find("cbr"); it != j.end()) cfg.cbr = parse_cbr(*it, cfg.cbr);
  if (auto it = j.find("cst"); it != j.end()) cfg.cst = parse_cst(*it, cfg.cst);
  validate_pipeline_config(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_json_file(path));
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
  json synth{
      {"num_frames", cfg.synth.num_frames},
      {"frame_dt", cfg.synth.frame_dt},
      {"ego_speed", cfg.synth.ego_speed},
      {"vehicles", cfg.synth.vehicles},
      {"pedestrians", cfg.synth.pedestrians},
      {"cyclists", cfg.synth.cyclists},
      {"vehicle_size", size_range_to_json(cfg.synth.vehicle_size)},
      {"pedestrian_size", size_range_to_json(cfg.synth.pedestrian_size)},
      {"cyclist_size", size_range_to_json(cfg.synth.cyclist_size)},
      {"vehicle_speed", interval_to_json(cfg.synth.vehicle_speed)},
      {"pedestrian_speed", interval_to_json(cfg.synth.pedestrian_speed)},
      {"cyclist_speed", interval_to_json(cfg.synth.cyclist_speed)},
      {"moving_fraction", cfg.synth.moving_fraction},
      {"point_density_at_10m", cfg.synth.point_density_at_10m},
      {"ground_density_at_10m", cfg.synth.ground_density_at_10m},
      {"range_max", cfg.synth.range_max},
      {"placement_min", cfg.synth.placement_min},
      {"placement_max", cfg.synth.placement_max},
      {"ground_radius", cfg.synth.ground_radius},
      {"ground_inner", cfg.synth.ground_inner},
      {"ground_slope_deg", cfg.synth.ground_slope_deg},
      {"sensor_height", cfg.synth.sensor_height},
      {"noise_sigma", cfg.synth.noise_sigma},
      {"occlusion", cfg.synth.occlusion},
  };
  json mfc{
      {"n", cfg.mfc.n},
      {"ppscore_radius", cfg.mfc.ppscore_radius},
      {"ppscore_threshold", cfg.mfc.ppscore_threshold},
      {"ground_tile", cfg.mfc.ground_tile},
      {"ground_inlier_dist", cfg.mfc.ground_inlier_dist},
      {"ground_ransac_iters", cfg.mfc.ground_ransac_iters},
      {"ground_ransac_seed", cfg.mfc.ground_ransac_seed},
      {"ground_normal_z_min", cfg.mfc.ground_normal_z_min},
      {"dbscan_eps", cfg.mfc.dbscan_eps},
      {"dbscan_min_pts", cfg.mfc.dbscan_min_pts},
      {"min_cluster_points", cfg.mfc.min_cluster_points},
      {"yaw_step_deg", cfg.mfc.yaw_step_deg},
      {"min_extent", cfg.mfc.min_extent},
      {"track_iou_min", cfg.mfc.track_iou_min},
      {"track_coast_frames", cfg.mfc.track_coast_frames},
      {"track_iou_mode",
       cfg.mfc.track_iou_mode == IouMode::bev ? "bev" : "volume"},
  };
  json templates = json::object();
  for (const auto& [cls, tpl] : cfg.css.templates) {
    templates[to_string(cls)] = json::array({tpl.l, tpl.w, tpl.h});
  }
  json css{
      {"range_max", cfg.css.range_max},
      {"mlo_resolutions", cfg.css.mlo_resolutions},
      {"weights",
       json::array({cfg.css.weights[0], cfg.css.weights[1], cfg.css.weights[2]})},
      {"kl_truncation", cfg.css.kl_truncation},
      {"templates", templates},
  };
  return json{
      {"seed", cfg.seed},
      {"sequences", cfg.num_sequences},
      {"jobs", cfg.jobs},
      {"eval_iou", cfg.eval_iou},
      {"synth", synth},
      {"mfc", mfc},
      {"css", css},
      {"cproto",
       {{"eta", cfg.cproto.eta},
        {"trim_margin", cfg.cproto.trim_margin},
        {"mover_min_step", cfg.cproto.mover_min_step}}},
      {"cbr",
       {{"bins_per_meter", cfg.cbr.bins_per_meter},
        {"min_points_for_relocalization",
         cfg.cbr.min_points_for_relocalization},
        {"class_restricted", cfg.cbr.class_restricted},
        {"yaw_step_deg", cfg.cbr.yaw_step_deg}}},
      {"cst", {{"s_low", cfg.cst.s_low}, {"s_high", cfg.cst.s_high}}},
  };
}

std::uint64_t sequence_seed(std::uint64_t base_seed, int sequence_index) {
  return Rng::substream(base_seed,
                        0x5E90000ULL + static_cast<std::uint64_t>(sequence_index))
      .next_u64();
}

std::vector<Pose> ego_poses_by_frame(const Sequence& seq) {
  int max_index = 0;
  for (const Frame& f : seq.frames) {
    if (f.index < 0) {
      throw Error(ErrorKind::validity, "pipeline: negative frame index");
    }
    max_index = std::max(max_index, f.index);
  }
  std::vector<Pose> poses(static_cast<std::size_t>(max_index) + 1);
  for (const Frame& f : seq.frames) {
    poses[static_cast<std::size_t>(f.index)] = f.pose;
  }
  return poses;
}

SequenceRun run_sequence(const PipelineConfig& cfg, int sequence_index) {
  SequenceRun run;
  run.index = sequence_index;

  auto t0 = std::chrono::steady_clock::now();
  SynthConfig synth_cfg = cfg.synth;
  synth_cfg.seed = sequence_seed(cfg.seed, sequence_index);
  auto [seq, gt] = generate_scene(synth_cfg);
  char name[32];
  std::snprintf(name, sizeof(name), "seq_%03d", sequence_index);
  seq.id = name;
  run.seq = std::move(seq);
  run.gt = std::move(gt);
  run.gt_labels = ground_truth_labels(run.seq, run.gt);
  run.times.synth_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  run.mfc = generate_initial_labels(run.seq, cfg.mfc);
  run.times.mfc_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  run.scored = run.mfc.labels;
  score_labels(run.scored, run.mfc.clusters, cfg.css, &run.components);
  run.times.css_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<Pose> poses = ego_poses_by_frame(run.seq);
  run.protos = build_cproto_set(run.scored, run.mfc.clusters, poses,
                                cfg.cproto, &run.proto_stats);
  run.times.cproto_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  run.refined = refine_labels(run.scored, run.mfc.clusters, run.protos,
                              cfg.cbr, &run.cbr_stats);
  run.times.cbr_ms = ms_since(t0);
  return run;
}

json compute_metrics(const std::vector<SequenceRun>& runs,
                     const PipelineConfig& cfg) {
  // Frame indices are offset per sequence so cross-sequence labels never mix.
  constexpr int kFrameStride = 1000000;
  std::vector<Label> initial, refined, gts;
  std::vector<double> css_scores, distance_scores;
  std::size_t frames = 0, points = 0, tracks_skipped = 0, prototypes = 0;
  std::size_t passed_through = 0, reloc_skipped = 0;
  for (const SequenceRun& run : runs) {
    int off = run.index * kFrameStride;
    frames += run.seq.frames.size();
    for (const Frame& f : run.seq.frames) points += f.points.size();
    tracks_skipped += run.proto_stats.tracks_skipped;
    prototypes += run.protos.size();
    passed_through += run.cbr_stats.passed_through;
    reloc_skipped += run.cbr_stats.relocalization_skipped;
    for (Label lab : run.gt_labels) {
      lab.frame_index += off;
      gts.push_back(lab);
    }
    for (std::size_t i = 0; i < run.scored.size(); ++i) {
      Label lab = run.scored[i];
      lab.frame_index += off;
      initial.push_back(lab);
      css_scores.push_back(lab.css.value_or(0.0));
      distance_scores.push_back(run.components[i].distance);
    }
    for (Label lab : run.refined) {
      lab.frame_index += off;
      refined.push_back(lab);
    }
  }

  auto eval_set = [&](const std::vector<Label>& preds) {
    json out;
    const std::pair<const char*, IouMode> modes[] = {
        {"bev", IouMode::bev}, {"volume", IouMode::volume}};
    for (const auto& [mode_name, mode] : modes) {
      json per = json::object();
      for (double t : cfg.eval_iou) {
        MatchResult m = match_greedy(preds, gts, t, mode);
        auto [recall, precision] = recall_precision(m, preds.size(), gts.size());
        json cell{{"recall", recall},
                  {"precision", precision},
                  {"matches", m.pairs.size()}};
        if (!m.pairs.empty()) {
          ErrorStats es = error_stats(m, preds, gts);
          cell["size_mae"] = es.size_mae;
          cell["position_mae"] = es.position_mae;
          cell["angle_mae"] = es.angle_mae;
        } else {
          cell["size_mae"] = nullptr;
          cell["position_mae"] = nullptr;
          cell["angle_mae"] = nullptr;
        }
        per[threshold_key(t)] = cell;
      }
      out[mode_name] = per;
    }
    return out;
  };

  // Best same-frame BEV overlap per initial label, for score diagnostics.
  std::map<int, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    gt_by_frame[gts[gi].frame_index].push_back(gi);
  }
  std::vector<double> best_iou(initial.size(), 0.0);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    auto it = gt_by_frame.find(initial[i].frame_index);
    if (it == gt_by_frame.end()) continue;
    for (std::size_t gi : it->second) {
      best_iou[i] =
          std::max(best_iou[i], bev_iou(initial[i].box, gts[gi].box));
    }
  }
  json ap = json::object();
  for (double t : cfg.eval_iou) {
    ap[threshold_key(t)] =
        json{{"css", average_precision(initial, css_scores, gts, t,
                                       IouMode::bev)},
             {"distance", average_precision(initial, distance_scores, gts, t,
                                            IouMode::bev)}};
  }
  json scoring{
      {"spearman_css_iou", spearman(css_scores, best_iou)},
      {"spearman_distance_iou", spearman(distance_scores, best_iou)},
      {"ap_bev", ap},
  };

  return json{
      {"counts",
       {{"sequences", runs.size()},
        {"frames", frames},
        {"points", points},
        {"gt_boxes", gts.size()},
        {"initial_labels", initial.size()},
        {"refined_labels", refined.size()},
        {"prototypes", prototypes},
        {"proto_tracks_skipped", tracks_skipped},
        {"cbr_passed_through", passed_through},
        {"cbr_relocalization_skipped", reloc_skipped}}},
      {"initial", eval_set(initial)},
      {"refined", eval_set(refined)},
      {"scoring", scoring},
  };
}

json run_pipeline(const PipelineConfig& cfg,
                  const std::filesystem::path& out_dir,
                  const RunOptions& opts) {
  validate_pipeline_config(cfg);
  auto t_start = std::chrono::steady_clock::now();

  std::vector<SequenceRun> runs(static_cast<std::size_t>(cfg.num_sequences));
  std::vector<std::exception_ptr> errors(runs.size());
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(hw);
  jobs = std::min(jobs, cfg.num_sequences);
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      int k = next.fetch_add(1);
      if (k >= cfg.num_sequences) break;
      try {
        runs[static_cast<std::size_t>(k)] = run_sequence(cfg, k);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error(e.kind(), "sequence " + std::to_string(k) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::validity,
                  "sequence " + std::to_string(k) + ": " + e.what());
    }
  }

  for (const SequenceRun& run : runs) {
    stage_log("sequence",
              {{"sequence", run.index},
               {"gt_boxes", run.gt_labels.size()},
               {"initial_labels", run.scored.size()},
               {"prototypes", run.protos.size()},
               {"refined_labels", run.refined.size()},
               {"synth_ms", run.times.synth_ms},
               {"mfc_ms", run.times.mfc_ms},
               {"css_ms", run.times.css_ms},
               {"cproto_ms", run.times.cproto_ms},
               {"cbr_ms", run.times.cbr_ms}});
  }

  if (opts.write_artifacts) {
    std::filesystem::create_directories(out_dir);
    write_json_file(pipeline_config_to_json(cfg), out_dir / "config.json");
    for (const SequenceRun& run : runs) {
      std::filesystem::path dir = out_dir / run.seq.id;
      std::filesystem::create_directories(dir);
      write_sequence(run.seq, dir / "sequence.json");
      write_labels(run.gt_labels, dir / "gt_labels.jsonl");
      write_labels(run.mfc.labels, dir / "initial_labels.jsonl");
      write_label_clouds(run.mfc.clusters, dir / "clusters");
      write_labels(run.scored, dir / "scored_labels.jsonl");
      if (opts.dump_components) {
        json comps = json::array();
        for (const CssComponents& c : run.components) {
          comps.push_back(json{{"distance", c.distance},
                               {"mlo", c.mlo},
                               {"ss", c.ss},
                               {"css", c.css}});
        }
        write_json_file(comps, dir / "components.json");
      }
      write_cprotos(run.protos, dir / "cprotos");
      write_labels(run.refined, dir / "refined_labels.jsonl");
    }
  }

  json metrics = compute_metrics(runs, cfg);
  if (opts.write_artifacts) {
    write_json_file(metrics, out_dir / "metrics.json");
  }
  stage_log("pipeline", {{"sequences", cfg.num_sequences},
                         {"jobs", jobs},
                         {"total_ms", ms_since(t_start)}});
  return metrics;
}

}  // namespace cpl
