// Copyright 2026 The Amodal Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "app.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "amodal/dataset.hpp"
#include "amodal/error.hpp"
#include "amodal/evaluation.hpp"
#include "amodal/orcnn/corpus.hpp"
#include "amodal/orcnn/train.hpp"
#include "amodal/stats.hpp"
#include "amodal/synthesis.hpp"
#include "json.hpp"
#include "json_config.hpp"

#ifndef AMODAL_VERSION
#define AMODAL_VERSION "0.0.0"
#endif

namespace amodal::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int default_threads() {
  const char* env = std::getenv("AMODAL_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  return (end != env && *end == '\0' && v > 0 && v <= 1024) ? static_cast<int>(v) : 1;
}

namespace {

struct GlobalArgs {
  std::string out_dir = ".";
  int threads = 1;
};

struct ValidateArgs {
  std::string dataset;
  std::string format = "native";
  bool strict_depth = false;
  std::uint64_t visible_slack = 0;
};

struct EvalArgs {
  std::string gt;
  std::string dets;
  std::string format = "native";
  std::string metric = "av";
  bool occluded_only = false;
  bool class_agnostic = false;
  int max_dets = 100;
  double iv_threshold = 0.5;
  std::string output;
  std::string pr_csv;
};

struct SynthArgs {
  std::string mode;
  std::string input;
  std::string format = "native";
  std::string modal;
  std::string modal_format = "native";
  std::string output;
  std::string manifest;
  std::uint64_t seed = 0;
  int n_images = 100;
  int donors = 1;
  std::string placement = "uniform_inside";
  double min_visible = 0.0;
  int max_attempts = 50;
  bool include_boundary = false;
  double iou_threshold = 0.75;
  bool keep_stuff = false;
  bool keep_crowd = false;
};

struct StatsArgs {
  std::vector<std::string> datasets;
  std::string format = "native";
  bool json = false;
};

struct ToyArgs {
  std::string variant = "full";
  std::uint64_t seed = 0;
  int steps = 500;
  int batch_size = 1;
  double base_lr = 0.0025;
  int corpus_size = 200;
  std::uint64_t corpus_seed = 0;
  int heldout_size = 100;
  bool grad_check = false;
  int grad_configs = 20;
  std::string log;
  std::string checkpoint;
};

DatasetFormat format_or_throw(const std::string& name) {
  const auto f = parse_dataset_format(name);
  if (!f) throw Error(ErrorCode::kConfigError, "unknown dataset format '" + name + "'");
  return *f;
}

fs::path output_path(const GlobalArgs& g, const std::string& explicit_path, const char* default_name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(g.out_dir) / default_name;
}

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
}

void print_violations(std::ostream& out, const std::vector<Violation>& violations, const char* prefix) {
  for (const auto& v : violations) {
    out << prefix;
    if (v.annotation_id >= 0) out << "annotation " << v.annotation_id << " ";
    if (v.image_id >= 0) out << "(image " << v.image_id << ") ";
    out << v.message << '\n';
  }
}

std::string percent_cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  LoadOptions options;
  options.visible_slack_pixels = a.visible_slack;
  LoadReport report;
  Dataset ds;
  try {
    ds = load_dataset(a.dataset, format_or_throw(a.format), options, &report);
  } catch (const ValidationError& e) {
    print_violations(out, e.violations(), "violation: ");
    out << "FAIL: " << e.violations().size() << " violation(s)\n";
    return kExitFailure;
  }
  ValidateOptions vo;
  vo.strict_depth_order = a.strict_depth;
  const ValidationReport check = check_dataset(ds, vo);
  print_violations(out, report.warnings, "warning: ");
  print_violations(out, check.warnings, "warning: ");
  if (report.repaired_visible > 0) out << "repaired visible masks: " << report.repaired_visible << '\n';
  if (report.clipped_polygons > 0) out << "clipped polygons: " << report.clipped_polygons << '\n';
  if (!check.ok()) {
    print_violations(out, check.violations, "violation: ");
    out << "FAIL: " << check.violations.size() << " violation(s)\n";
    return kExitFailure;
  }
  out << "OK: " << ds.images.size() << " images, " << ds.annotation_count() << " annotations\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, const GlobalArgs& g, std::ostream& out) {
  const Dataset gt = load_dataset(a.gt, format_or_throw(a.format));
  const std::vector<Detection> dets = load_detections(a.dets, gt);
  std::vector<Metric> metrics;
  if (a.metric == "all") {
    metrics = {Metric::kAmodal, Metric::kVisible, Metric::kAmodalVisible,
               Metric::kAmodalInvisibleVisible, Metric::kInvisible};
  } else {
    const auto m = parse_metric(a.metric);
    if (!m) throw Error(ErrorCode::kConfigError, "unknown metric '" + a.metric + "'");
    metrics = {*m};
  }

  std::vector<EvalResult> results;
  for (const Metric m : metrics) {
    EvalConfig cfg;
    cfg.metric = m;
    cfg.occluded_only = a.occluded_only;
    cfg.class_agnostic = a.class_agnostic;
    cfg.max_detections_per_image = a.max_dets;
    cfg.iv_threshold = a.iv_threshold;
    cfg.check();
    results.push_back(evaluate(gt, dets, cfg, g.threads));
  }

  out << "metric    AP      AR\n";
  bool undefined = false;
  for (const auto& r : results) {
    std::string name = "AP_" + std::string(metric_name(r.metric));
    name.resize(std::max<std::size_t>(name.size(), 8), ' ');
    std::string ap = percent_cell(r.mean_ap);
    ap.resize(std::max<std::size_t>(ap.size(), 6), ' ');
    out << name << "  " << ap << "  " << percent_cell(r.mean_ar) << '\n';
    undefined = undefined || !r.mean_ap;
  }
  const EvalResult& first = results.front();
  if (first.occluded_only) out << "ignored ground truths: " << first.ignored_ground_truths << '\n';
  if (first.fallback_visible > 0) {
    out << "note: " << first.fallback_visible
        << " detection(s) without a visible mask evaluated with their amodal mask\n";
  }
  if (first.fallback_invisible > 0) {
    out << "note: " << first.fallback_invisible
        << " detection(s) without an invisible mask evaluated with their amodal mask\n";
  }

  std::string text;
  if (results.size() == 1) {
    text = eval_result_json(first);
  } else {
    text = "[\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      std::string one = eval_result_json(results[i]);
      one.pop_back();
      text += one + (i + 1 < results.size() ? ",\n" : "\n");
    }
    text += "]\n";
  }
  const fs::path json_path = output_path(g, a.output, "eval_result.json");
  ensure_parent(json_path);
  write_text_file(json_path, text);

  if (!a.pr_csv.empty()) {
    std::ostringstream csv;
    csv << "metric,category_id,iou_threshold,recall,precision\n";
    csv.precision(17);
    for (const auto& r : results) {
      for (const auto& c : r.categories) {
        for (std::size_t t = 0; t < c.precision_curves.size(); ++t) {
          for (int i = 0; i < kRecallSamples; ++i) {
            csv << metric_name(r.metric) << ',' << c.category_id << ',' << r.thresholds[t] << ','
                << i / 100.0 << ',' << c.precision_curves[t][static_cast<std::size_t>(i)] << '\n';
          }
        }
      }
    }
    ensure_parent(a.pr_csv);
    write_text_file(a.pr_csv, csv.str());
  }
  if (undefined) {
    out << "AP undefined: no ground truth to evaluate\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, const GlobalArgs& g, std::ostream& out) {
  const Dataset input = load_dataset(a.input, format_or_throw(a.format));
  const fs::path dataset_path = output_path(g, a.output, "dataset.json");
  ensure_parent(dataset_path);
  if (a.mode == "pad") {
    const Dataset padded = pad_dataset_for_amodal(input);
    std::size_t grown = 0;
    for (const auto& image : padded.images) grown += image.padding && !image.padding->is_zero() ? 1 : 0;
    save_dataset(padded, dataset_path);
    out << "padded " << grown << " of " << padded.images.size() << " images\n";
    return kExitOk;
  }
  if (a.mode == "merge-cls") {
    if (a.modal.empty()) throw Error(ErrorCode::kConfigError, "merge-cls needs --modal");
    const Dataset modal = load_dataset(a.modal, format_or_throw(a.modal_format));
    MergeConfig cfg;
    cfg.iou_threshold = a.iou_threshold;
    cfg.drop_stuff = !a.keep_stuff;
    cfg.drop_crowd = !a.keep_crowd;
    const Dataset merged = merge_categories(input, modal, cfg);
    save_dataset(merged, dataset_path);
    out << "kept " << merged.annotation_count() << " of " << input.annotation_count() << " annotations\n";
    return kExitOk;
  }
  if (a.mode == "paste-aug" || a.mode == "modal-aug") {
    AugmentConfig cfg;
    cfg.rng_seed = a.seed;
    cfg.donors_per_image = a.donors;
    const auto placement = parse_placement(a.placement);
    if (!placement) throw Error(ErrorCode::kConfigError, "unknown placement '" + a.placement + "'");
    cfg.placement = *placement;
    cfg.exclude_boundary_objects = !a.include_boundary;
    cfg.min_remaining_visible_fraction = a.min_visible;
    cfg.max_placement_attempts = a.max_attempts;
    const SynthesisResult r =
        build_augmented(input, cfg, a.n_images, a.mode == "modal-aug", g.threads);
    save_dataset(r.dataset, dataset_path);
    const fs::path manifest = output_path(g, a.manifest, "composites.json");
    ensure_parent(manifest);
    write_text_file(manifest, composites_json(r.composites));
    out << "synthesized " << r.dataset.images.size() << " images, " << r.dataset.annotation_count()
        << " annotations, " << r.composites.size() << " pastes\n";
    return kExitOk;
  }
  throw Error(ErrorCode::kConfigError, "unknown synth mode '" + a.mode + "'");
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, SplitStats>> columns;
  for (const auto& path : a.datasets) {
    const Dataset ds = load_dataset(path, format_or_throw(a.format));
    std::string name = ds.split_name.empty() ? fs::path(path).stem().string() : ds.split_name;
    columns.emplace_back(std::move(name), compute_stats(ds));
  }
  if (!a.json) {
    out << stats_table(columns);
    return kExitOk;
  }
  if (columns.size() == 1) {
    out << stats_json(columns.front().second);
    return kExitOk;
  }
  ordered_json j = ordered_json::object();
  for (const auto& [name, s] : columns) j[name] = ordered_json::parse(stats_json(s));
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_toy_train(const ToyArgs& a, const GlobalArgs& g, std::ostream& out) {
  using namespace orcnn;
  const auto variant = parse_variant(a.variant);
  if (!variant) throw Error(ErrorCode::kConfigError, "unknown variant '" + a.variant + "'");
  if (a.grad_check) {
    GradCheckConfig gc;
    gc.configs = a.grad_configs;
    gc.seed = a.seed;
    const GradCheckReport r = gradient_check(gc);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "gradient check: %d configs (%d redrawn), %zu comparisons, max relative error %.3e (%s, %s)\n",
                  r.configs_checked, r.configs_redrawn, r.comparisons, r.max_relative_error,
                  r.worst_parameter.c_str(), std::string(term_name(r.worst_term)).c_str());
    out << buf;
    return r.max_relative_error < 1e-6 ? kExitOk : kExitFailure;
  }

  CorpusConfig corpus_cfg;
  corpus_cfg.size = a.corpus_size;
  corpus_cfg.seed = a.corpus_seed;
  const std::vector<RoiSample> corpus = make_corpus(corpus_cfg);
  TrainConfig cfg = TrainConfig::toy(a.steps, a.base_lr);
  cfg.variant = *variant;
  cfg.seed = a.seed;
  cfg.batch_size = a.batch_size;

  std::string log;
  const TrainResult r = train_toy(cfg, corpus, [&](const StepLog& s) { log += step_log_json(s) + "\n"; });
  const fs::path log_path = output_path(g, a.log, "train_log.jsonl");
  const fs::path ckpt_path = output_path(g, a.checkpoint, "checkpoint.json");
  ensure_parent(log_path);
  ensure_parent(ckpt_path);
  write_text_file(log_path, log);
  write_text_file(ckpt_path, checkpoint_json(r.params));

  char buf[256];
  std::snprintf(buf, sizeof buf, "variant %s: mean corpus loss %.6f -> %.6f over %d steps\n",
                std::string(variant_name(*variant)).c_str(), r.initial_corpus_loss.total,
                r.final_corpus_loss.total, a.steps);
  out << buf;
  if (a.heldout_size > 0) {
    CorpusConfig held_cfg = corpus_cfg;
    held_cfg.size = a.heldout_size;
    held_cfg.seed = a.corpus_seed + 1;
    const std::vector<RoiSample> held = make_corpus(held_cfg);
    std::snprintf(buf, sizeof buf, "held-out AP50_IV: %.4f\n", invisible_ap50(r.params, held, *variant));
    out << buf;
  }
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kParseError:
    case ErrorCode::kConfigError:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

ordered_json resolved_options(const CLI::App* app) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = opt->get_items_expected_max() > 1 ? ordered_json(r) : ordered_json(r.back());
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_manifest(const GlobalArgs& g, const CLI::App* sub) {
  ordered_json j;
  j["tool"] = "amodal";
  j["tool_version"] = AMODAL_VERSION;
  j["subcommand"] = sub->get_name();
  j["threads"] = g.threads;
  j["out-dir"] = g.out_dir;
  j[sub->get_name()] = resolved_options(sub);
  const fs::path path = fs::path(g.out_dir) / "run_manifest.json";
  ensure_parent(path);
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Amodal instance segmentation toolkit", "amodal"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.set_version_flag("--version", AMODAL_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  GlobalArgs g;
  g.threads = default_threads();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and run_manifest.json");
  app.add_option("--threads", g.threads, "Worker threads (default: AMODAL_THREADS or 1)")
      ->check(CLI::Range(1, 1024));

  ValidateArgs va;
  CLI::App* validate = app.add_subcommand("validate", "Check a dataset against all invariants");
  validate->add_option("dataset,--dataset", va.dataset, "Dataset file")->required();
  validate->add_option("--format", va.format, "native, cocoa or d2s_amodal");
  validate->add_flag("--strict-depth", va.strict_depth, "Treat depth-order conflicts as violations");
  validate->add_option("--visible-slack", va.visible_slack,
                       "Repair visible masks leaking outside amodal by up to N pixels");

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate detections against ground truth");
  eval->add_option("gt,--gt", ea.gt, "Ground-truth dataset")->required();
  eval->add_option("dets,--dets", ea.dets, "Detections JSON")->required();
  eval->add_option("--format", ea.format, "Ground-truth format");
  eval->add_option("--metric", ea.metric, "a, v, av, aivv, iv or all");
  eval->add_flag("--occluded-only", ea.occluded_only, "Evaluate occluded ground truth only");
  eval->add_flag("--class-agnostic", ea.class_agnostic, "Ignore categories when matching");
  eval->add_option("--max-dets", ea.max_dets, "Detections kept per image")->check(CLI::PositiveNumber);
  eval->add_option("--iv-threshold", ea.iv_threshold, "IoU threshold of the iv metric");
  eval->add_option("--output", ea.output, "Result JSON (default: <out-dir>/eval_result.json)");
  eval->add_option("--pr-csv", ea.pr_csv, "Write interpolated precision-recall curves as CSV");

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand("synth", "Dataset synthesis and preparation");
  synth->add_option("mode,--mode", sa.mode, "paste-aug, modal-aug, merge-cls or pad")
      ->required()
      ->check(CLI::IsMember({"paste-aug", "modal-aug", "merge-cls", "pad"}));
  synth->add_option("--input", sa.input, "Source dataset")->required();
  synth->add_option("--format", sa.format, "Source format");
  synth->add_option("--modal", sa.modal, "Modal dataset providing categories (merge-cls)");
  synth->add_option("--modal-format", sa.modal_format, "Format of --modal");
  synth->add_option("--output", sa.output, "Output dataset (default: <out-dir>/dataset.json)");
  synth->add_option("--manifest", sa.manifest, "Compositing manifest (default: <out-dir>/composites.json)");
  synth->add_option("--seed", sa.seed, "RNG seed");
  synth->add_option("--n-images", sa.n_images, "Images to synthesize")->check(CLI::NonNegativeNumber);
  synth->add_option("--donors", sa.donors, "Objects pasted per image")->check(CLI::PositiveNumber);
  synth->add_option("--placement", sa.placement, "uniform_inside or uniform_any");
  synth->add_option("--min-visible", sa.min_visible,
                    "Drop objects left with a smaller visible fraction");
  synth->add_option("--max-attempts", sa.max_attempts, "Placement attempts per donor");
  synth->add_flag("--include-boundary", sa.include_boundary,
                  "Allow donors touching their source image border");
  synth->add_option("--iou-threshold", sa.iou_threshold, "Minimum visible IoU for merge-cls");
  synth->add_flag("--keep-stuff", sa.keep_stuff, "Keep stuff annotations in merge-cls");
  synth->add_flag("--keep-crowd", sa.keep_crowd, "Keep crowd annotations in merge-cls");

  StatsArgs st;
  CLI::App* stats = app.add_subcommand("stats", "Occlusion statistics per split");
  stats->add_option("datasets,--datasets", st.datasets, "Dataset files, one column each")->required();
  stats->add_option("--format", st.format, "Dataset format");
  stats->add_flag("--json", st.json, "Print exact ratios as JSON");

  ToyArgs ta;
  CLI::App* toy = app.add_subcommand("toy-train", "Train the micro occlusion head model on synthetic shapes");
  toy->add_option("--variant", ta.variant, "full, no-liv, no-lv or independent");
  toy->add_option("--seed", ta.seed, "Initialization and sample-order seed");
  toy->add_option("--steps", ta.steps, "Training steps")->check(CLI::NonNegativeNumber);
  toy->add_option("--batch-size", ta.batch_size, "Samples per step")->check(CLI::PositiveNumber);
  toy->add_option("--base-lr", ta.base_lr, "Base learning rate");
  toy->add_option("--corpus-size", ta.corpus_size, "Training samples");
  toy->add_option("--corpus-seed", ta.corpus_seed, "Corpus seed; the held-out set uses seed + 1");
  toy->add_option("--heldout-size", ta.heldout_size, "Held-out samples for AP50_IV (0 to skip)");
  toy->add_flag("--grad-check", ta.grad_check, "Run the finite-difference gradient suite and exit");
  toy->add_option("--grad-configs", ta.grad_configs, "Random configurations for --grad-check");
  toy->add_option("--log", ta.log, "Training log (default: <out-dir>/train_log.jsonl)");
  toy->add_option("--checkpoint", ta.checkpoint, "Checkpoint (default: <out-dir>/checkpoint.json)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  int code = kExitOk;
  try {
    if (sub == validate) code = cmd_validate(va, out);
    else if (sub == eval) code = cmd_eval(ea, g, out);
    else if (sub == synth) code = cmd_synth(sa, g, out);
    else if (sub == stats) code = cmd_stats(st, out);
    else code = cmd_toy_train(ta, g, out);
    write_manifest(g, sub);
  } catch (const ValidationError& e) {
    print_violations(err, e.violations(), "violation: ");
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return code;
}

}  // namespace amodal::cli
