#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <vector>

#include "cpl/cbr.hpp"
#include "cpl/cproto.hpp"
#include "cpl/css.hpp"
#include "cpl/cst.hpp"
#include "cpl/mfc.hpp"
#include "cpl/synth.hpp"

namespace cpl {

struct PipelineConfig {
  std::uint64_t seed = 1;
  int num_sequences = 1;
  int jobs = 0;  // 0 = all hardware threads
  std::vector<double> eval_iou = {0.3, 0.5, 0.7};
  SynthConfig synth;
  MfcConfig mfc;
  CssConfig css;
  CProtoConfig cproto;
  CbrConfig cbr;
  CstConfig cst;
};

void validate_pipeline_config(const PipelineConfig& cfg);

// Strict JSON parsing: unknown keys anywhere are config errors; absent keys
// keep their defaults. pipeline_config_to_json regenerates the full document.
PipelineConfig parse_pipeline_config(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

// Scene seed for one sequence of a run.
std::uint64_t sequence_seed(std::uint64_t base_seed, int sequence_index);

struct StageTimes {
  double synth_ms = 0.0;
  double mfc_ms = 0.0;
  double css_ms = 0.0;
  double cproto_ms = 0.0;
  double cbr_ms = 0.0;
};

// One sequence taken through every stage in memory.
struct SequenceRun {
  int index = 0;
  Sequence seq;
  GroundTruth gt;
  std::vector<Label> gt_labels;
  MfcResult mfc;
  std::vector<Label> scored;  // initial labels with css filled in
  std::vector<CssComponents> components;
  std::vector<CProto> protos;
  CProtoStats proto_stats;
  std::vector<Label> refined;
  CbrStats cbr_stats;
  StageTimes times;
};

SequenceRun run_sequence(const PipelineConfig& cfg, int sequence_index);

// Ego poses indexed by frame index (frames need not start at 0).
std::vector<Pose> ego_poses_by_frame(const Sequence& seq);

// Metrics aggregated across sequences: per-threshold recall/precision/MAEs
// for initial and refined labels (BEV and volume IoU), plus score
// diagnostics (rank correlations and average precision).
nlohmann::json compute_metrics(const std::vector<SequenceRun>& runs,
                               const PipelineConfig& cfg);

struct RunOptions {
  bool write_artifacts = true;
  bool dump_components = false;  // per-label score components JSON
};

// Runs cfg.num_sequences sequences (up to cfg.jobs in parallel), writes the
// artifact tree under out_dir, and returns the metrics report.
nlohmann::json run_pipeline(const PipelineConfig& cfg,
                            const std::filesystem::path& out_dir,
                            const RunOptions& opts = {});

}  // namespace cpl
