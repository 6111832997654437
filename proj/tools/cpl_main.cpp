// Command-line front end: synth -> label -> score -> proto -> refine -> eval,
// plus `run` for the whole pipeline and `losses` for the training math.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "cpl/cbr.hpp"
#include "cpl/cproto.hpp"
#include "cpl/css.hpp"
#include "cpl/cst.hpp"
#include "cpl/error.hpp"
#include "cpl/eval.hpp"
#include "cpl/io.hpp"
#include "cpl/mfc.hpp"
#include "cpl/pipeline.hpp"
#include "cpl/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = -1;
  int frames = 0;
  std::string iou_list;
};

void add_common(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "pipeline config JSON");
  cmd->add_option("--seed", flags->seed, "override the global seed")
      ->each([flags](const std::string&) { flags->seed_set = true; });
  cmd->add_option("--jobs", flags->jobs, "max parallel sequences (0 = auto)");
  cmd->add_option("--frames", flags->frames,
                  "override the number of synthesized frames");
  cmd->add_option("--iou", flags->iou_list,
                  "comma-separated IoU thresholds, e.g. 0.3,0.5,0.7");
}

std::vector<double> parse_iou_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok = text.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw cpl::Error(cpl::ErrorKind::config,
                       "--iou: '" + tok + "' is not a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) {
    throw cpl::Error(cpl::ErrorKind::config, "--iou: empty threshold list");
  }
  return out;
}

cpl::PipelineConfig resolve_config(const CommonFlags& flags) {
  cpl::PipelineConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = cpl::load_pipeline_config(flags.config_path);
  }
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.jobs >= 0) cfg.jobs = flags.jobs;
  if (flags.frames > 0) cfg.synth.num_frames = flags.frames;
  if (!flags.iou_list.empty()) cfg.eval_iou = parse_iou_list(flags.iou_list);
  cpl::validate_pipeline_config(cfg);
  return cfg;
}

cpl::Box3D box_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 7) {
    throw cpl::Error(cpl::ErrorKind::parse,
                     std::string(what) + " must be [x,y,z,l,w,h,alpha]");
  }
  cpl::Box3D b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
               j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
               j[6].get<double>()};
  cpl::validate_box(b);
  return b;
}

std::vector<cpl::ProposalPair> pairs_from_json(const json& doc,
                                               const cpl::CstConfig& cst) {
  if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array()) {
    throw cpl::Error(cpl::ErrorKind::parse,
                     "proposal file must be {\"pairs\": [...]}");
  }
  std::vector<cpl::ProposalPair> out;
  for (const json& pj : doc["pairs"]) {
    cpl::ProposalPair p;
    p.det_box = box_from_json(pj.at("det_box"), "det_box");
    p.proto_box = box_from_json(pj.at("proto_box"), "proto_box");
    if (pj.contains("det_feature")) {
      p.det_feature = pj["det_feature"].get<std::vector<double>>();
    }
    if (pj.contains("proto_feature")) {
      p.proto_feature = pj["proto_feature"].get<std::vector<double>>();
    }
    if (pj.contains("weight")) {
      p.weight = pj["weight"].get<double>();
    } else if (pj.contains("score")) {
      p.weight = cpl::css_weight(pj["score"].get<double>(), cst);
    }
    if (pj.contains("loss_pro")) p.loss_pro = pj["loss_pro"].get<double>();
    if (pj.contains("loss_det")) p.loss_det = pj["loss_det"].get<double>();
    out.push_back(std::move(p));
  }
  return out;
}

// Shared by `synth` and `run` so stage-wise reruns reproduce the same scenes.
void write_scene(const cpl::PipelineConfig& cfg, int index, const fs::path& out) {
  cpl::SynthConfig synth_cfg = cfg.synth;
  synth_cfg.seed = cpl::sequence_seed(cfg.seed, index);
  auto [seq, gt] = cpl::generate_scene(synth_cfg);
  char name[32];
  std::snprintf(name, sizeof(name), "seq_%03d", index);
  seq.id = name;
  fs::path dir = out / name;
  fs::create_directories(dir);
  cpl::write_sequence(seq, dir / "sequence.json");
  cpl::write_labels(cpl::ground_truth_labels(seq, gt), dir / "gt_labels.jsonl");
}

json eval_report(const std::vector<cpl::Label>& preds,
                 const std::vector<cpl::Label>& gts,
                 const std::vector<double>& thresholds) {
  json out;
  const std::pair<const char*, cpl::IouMode> modes[] = {
      {"bev", cpl::IouMode::bev}, {"volume", cpl::IouMode::volume}};
  for (const auto& [mode_name, mode] : modes) {
    json per = json::object();
    for (double t : thresholds) {
      cpl::MatchResult m = cpl::match_greedy(preds, gts, t, mode);
      auto [recall, precision] =
          cpl::recall_precision(m, preds.size(), gts.size());
      char key[32];
      std::snprintf(key, sizeof(key), "%.2f", t);
      json cell{{"recall", recall},
                {"precision", precision},
                {"matches", m.pairs.size()}};
      if (!m.pairs.empty()) {
        cpl::ErrorStats es = cpl::error_stats(m, preds, gts);
        cell["size_mae"] = es.size_mae;
        cell["position_mae"] = es.position_mae;
        cell["angle_mae"] = es.angle_mae;
      } else {
        cell["size_mae"] = nullptr;
        cell["position_mae"] = nullptr;
        cell["angle_mae"] = nullptr;
      }
      per[key] = cell;
    }
    out[mode_name] = per;
  }
  std::vector<double> scores(preds.size(), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    scores[i] = preds[i].css.value_or(0.0);
  }
  json ap = json::object();
  for (double t : thresholds) {
    char key[32];
    std::snprintf(key, sizeof(key), "%.2f", t);
    ap[key] = cpl::average_precision(preds, scores, gts, t, cpl::IouMode::bev);
  }
  out["ap_bev"] = ap;
  return out;
}

std::string eval_csv(const json& report, const std::vector<double>& thresholds) {
  std::string csv = "mode,iou,recall,precision,matches\n";
  for (const char* mode : {"bev", "volume"}) {
    for (double t : thresholds) {
      char key[32];
      std::snprintf(key, sizeof(key), "%.2f", t);
      const json& cell = report[mode][key];
      char line[160];
      std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f,%llu\n", mode, key,
                    cell["recall"].get<double>(),
                    cell["precision"].get<double>(),
                    static_cast<unsigned long long>(
                        cell["matches"].get<std::size_t>()));
      csv += line;
    }
  }
  return csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised 3D pseudo-label pipeline on synthetic LiDAR"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string in_path, out_path, labels_path, clusters_path, protos_path;
  std::string pred_path, gt_path, pairs_path, csv_path, seq_path;
  bool dump_components = false;
  bool report = false;

  CLI::App* c_synth = app.add_subcommand("synth", "generate synthetic scenes");
  add_common(c_synth, &flags);
  c_synth->add_option("--out", out_path, "output directory")->required();

  CLI::App* c_label = app.add_subcommand("label", "initial labels for one sequence");
  add_common(c_label, &flags);
  c_label->add_option("--in", in_path, "sequence manifest JSON")->required();
  c_label->add_option("--out", out_path, "labels JSONL")->required();
  c_label->add_option("--clusters", clusters_path, "cluster directory to write");

  CLI::App* c_score = app.add_subcommand("score", "attach css scores to labels");
  add_common(c_score, &flags);
  c_score->add_option("--labels", labels_path, "labels JSONL")->required();
  c_score->add_option("--clusters", clusters_path, "cluster directory")->required();
  c_score->add_option("--out", out_path, "scored labels JSONL")->required();
  c_score->add_flag("--dump-components", dump_components,
                    "also write per-label score components");

  CLI::App* c_proto = app.add_subcommand("proto", "build per-track prototypes");
  add_common(c_proto, &flags);
  c_proto->add_option("--labels", labels_path, "scored labels JSONL")->required();
  c_proto->add_option("--clusters", clusters_path, "cluster directory")->required();
  c_proto->add_option("--sequence", seq_path, "sequence manifest (ego poses)")
      ->required();
  c_proto->add_option("--out", out_path, "prototype directory")->required();

  CLI::App* c_refine = app.add_subcommand("refine", "resize + relocalize labels");
  add_common(c_refine, &flags);
  c_refine->add_option("--labels", labels_path, "scored labels JSONL")->required();
  c_refine->add_option("--clusters", clusters_path, "cluster directory")->required();
  c_refine->add_option("--protos", protos_path, "prototype directory")->required();
  c_refine->add_option("--out", out_path, "refined labels JSONL")->required();

  CLI::App* c_eval = app.add_subcommand("eval", "score labels against ground truth");
  add_common(c_eval, &flags);
  c_eval->add_option("--pred", pred_path, "predicted labels JSONL")->required();
  c_eval->add_option("--gt", gt_path, "ground-truth labels JSONL")->required();
  c_eval->add_option("--out", out_path, "metrics JSON path");
  c_eval->add_option("--csv", csv_path, "per-threshold CSV path");
  c_eval->add_flag("--report", report, "print metrics JSON to stdout");

  CLI::App* c_losses = app.add_subcommand("losses", "training-loss regression values");
  add_common(c_losses, &flags);
  c_losses->add_option("--pairs", pairs_path, "proposal pairs JSON")->required();

  CLI::App* c_run = app.add_subcommand("run", "full pipeline + metrics");
  add_common(c_run, &flags);
  c_run->add_option("--out", out_path, "output directory")->required();
  c_run->add_flag("--dump-components", dump_components,
                  "write per-label score components per sequence");
  c_run->add_flag("--report", report, "print metrics JSON to stdout");

  CLI11_PARSE(app, argc, argv);
  CLI::App* cmd = app.get_subcommands().front();
  const std::string stage = cmd->get_name();

  try {
    cpl::PipelineConfig cfg = resolve_config(flags);

    if (cmd == c_synth) {
      for (int k = 0; k < cfg.num_sequences; ++k) {
        write_scene(cfg, k, out_path);
      }
    } else if (cmd == c_label) {
      cpl::Sequence seq = cpl::read_sequence(in_path);
      cpl::MfcResult result = cpl::generate_initial_labels(seq, cfg.mfc);
      cpl::write_labels(result.labels, out_path);
      if (!clusters_path.empty()) {
        cpl::write_label_clouds(result.clusters, clusters_path);
      }
    } else if (cmd == c_score) {
      std::vector<cpl::Label> labels = cpl::read_labels(labels_path);
      std::vector<cpl::PointCloud> clouds = cpl::read_label_clouds(clusters_path);
      std::vector<cpl::CssComponents> components;
      cpl::score_labels(labels, clouds, cfg.css, &components);
      cpl::write_labels(labels, out_path);
      if (dump_components) {
        json comps = json::array();
        for (const cpl::CssComponents& c : components) {
          comps.push_back(json{{"distance", c.distance},
                               {"mlo", c.mlo},
                               {"ss", c.ss},
                               {"css", c.css}});
        }
        cpl::write_json_file(comps, out_path + ".components.json");
      }
    } else if (cmd == c_proto) {
      std::vector<cpl::Label> labels = cpl::read_labels(labels_path);
      std::vector<cpl::PointCloud> clouds = cpl::read_label_clouds(clusters_path);
      cpl::Sequence seq = cpl::read_sequence(seq_path);
      std::vector<cpl::CProto> protos = cpl::build_cproto_set(
          labels, clouds, cpl::ego_poses_by_frame(seq), cfg.cproto);
      cpl::write_cprotos(protos, out_path);
    } else if (cmd == c_refine) {
      std::vector<cpl::Label> labels = cpl::read_labels(labels_path);
      std::vector<cpl::PointCloud> clouds = cpl::read_label_clouds(clusters_path);
      std::vector<cpl::CProto> protos = cpl::read_cprotos(protos_path);
      std::vector<cpl::Label> refined =
          cpl::refine_labels(labels, clouds, protos, cfg.cbr);
      cpl::write_labels(refined, out_path);
    } else if (cmd == c_eval) {
      std::vector<cpl::Label> preds = cpl::read_labels(pred_path);
      std::vector<cpl::Label> gts = cpl::read_labels(gt_path);
      json metrics = eval_report(preds, gts, cfg.eval_iou);
      if (!out_path.empty()) cpl::write_json_file(metrics, out_path);
      if (!csv_path.empty()) {
        cpl::write_text_file(eval_csv(metrics, cfg.eval_iou), csv_path);
      }
      if (report || (out_path.empty() && csv_path.empty())) {
        std::printf("%s\n", metrics.dump(2).c_str());
      }
    } else if (cmd == c_losses) {
      std::vector<cpl::ProposalPair> pairs =
          pairs_from_json(cpl::read_json_file(pairs_path), cfg.cst);
      json out{{"detection", cpl::weighted_detection_loss(pairs)},
               {"feature", cpl::feature_contrast_loss(pairs)},
               {"box", cpl::box_contrast_loss(pairs)}};
      std::printf("%s\n", out.dump(2).c_str());
    } else if (cmd == c_run) {
      cpl::RunOptions opts;
      opts.dump_components = dump_components;
      json metrics = cpl::run_pipeline(cfg, out_path, opts);
      if (report) std::printf("%s\n", metrics.dump(2).c_str());
    }
  } catch (const cpl::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", stage.c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[%s]: %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}
