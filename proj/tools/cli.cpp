#include "cli.hpp"

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fsjump/annotation.hpp"
#include "fsjump/baseline.hpp"
#include "fsjump/error.hpp"
#include "fsjump/io.hpp"
#include "fsjump/metrics.hpp"
#include "fsjump/preprocess.hpp"
#include "fsjump/service.hpp"

namespace fsjump::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_json_path(const fs::path& path) { return path.extension() == ".json"; }

// Brings an annotation to the requested level; element can be projected down
// to set, never the reverse.
SequenceAnnotation at_level(const SequenceAnnotation& annotation, Level level) {
  if (annotation.level == level) return annotation;
  if (level == Level::Set) return project_annotation_to_set(annotation);
  throw InvalidAnnotationError("annotation '" + annotation.sequence_id +
                               "' is set level; element level was requested");
}

// Predictions are either an annotation JSON file or one label per line.
FrameLabels load_predictions(const fs::path& path, Level level) {
  if (is_json_path(path)) {
    return expand_to_frames(at_level(SequenceAnnotation::load(path), level));
  }
  return import_external_predictions(path, default_taxonomy(level));
}

std::vector<double> parse_overlaps(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !(v > 0.0) || v > 100.0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--ks", "expected comma-separated values in (0, 100], got '" + text + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--ks", "no overlap thresholds given");
  return out;
}

std::pair<std::string, int> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) return {text, 8080};
  const std::string port = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument(port);
    return {text.substr(0, colon), p};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--bind", "invalid port in '" + text + "'");
  }
}

struct IngestArgs {
  fs::path in, mapping, out;
  std::string rig = "h36m";
  std::string format;
  std::string sequence_id;
};

int run_ingest(const IngestArgs& a, std::ostream& out) {
  const JointRig rig = resolve_rig(a.rig);
  const MocapRecording rec = load_mocap(a.in);
  const RigMapping mapping = RigMapping::load(a.mapping, rig);
  PoseSequence pose = ingest_fsjump3d(rec, mapping, rig);
  if (!a.sequence_id.empty()) pose.meta.sequence_id = a.sequence_id;
  const PoseFormat format = !a.format.empty() ? parse_pose_format(a.format)
                            : is_json_path(a.out) ? PoseFormat::Json
                                                  : PoseFormat::Binary;
  save_pose_sequence(pose, a.out, format);
  out << "ingested " << pose.frame_count << " frames x " << pose.joint_count()
      << " joints -> " << a.out.string() << "\n";
  return kExitOk;
}

struct PreprocessArgs {
  fs::path in, out;
  bool no_align = false;
  bool no_euler = false;
  bool no_normalize = false;
  bool per_sequence = false;
  bool mask_flags = false;
  double threshold = kDefaultConfidenceThreshold;
  double fps = 0.0;
};

int run_preprocess(const PreprocessArgs& a, std::ostream& out) {
  const PoseSequence pose = load_pose_sequence(a.in);
  PreprocessOptions options;
  options.confidence_threshold = a.threshold;
  options.align = !a.no_align;
  options.align_mode = a.per_sequence ? AlignMode::PerSequence : AlignMode::PerFrame;
  options.normalize = !a.no_normalize;
  options.target_fps = a.fps;
  options.features.include_euler = !a.no_euler;
  options.features.include_conf_mask = a.mask_flags;
  FeatureSequence features = preprocess_sequence(pose, options);
  if (features.sequence_id.empty()) features.sequence_id = a.in.stem().string();
  features.save(a.out);
  out << "features " << features.frame_count << " x " << features.dims << " -> "
      << a.out.string() << "\n";
  return kExitOk;
}

struct ServeArgs {
  fs::path manifest;
  std::string bind = "127.0.0.1:8080";
  std::optional<fs::path> ui_dir;
  std::optional<fs::path> annotation_dir;
  bool readonly = false;
  std::string level = "set";
  std::size_t cache = 8;
};

int run_serve(const ServeArgs& a, std::ostream& out) {
  ServiceOptions options;
  options.manifest = a.manifest;
  options.ui_dir = a.ui_dir;
  options.annotation_dir = a.annotation_dir;
  options.readonly = a.readonly;
  options.default_level = parse_level(a.level);
  options.pose_cache_size = a.cache;
  AnnotationService service(options);
  const auto [host, port] = parse_bind(a.bind);
  const int bound = service.bind(host, port);
  out << "listening on http://" << host << ":" << bound << std::endl;
  service.listen();
  return kExitOk;
}

struct ValidateArgs {
  std::vector<fs::path> files;
  std::string mode = "strict";
  bool json_output = false;
};

int run_validate(const ValidateArgs& a, std::ostream& out) {
  const ValidationMode mode = parse_validation_mode(a.mode);
  bool all_valid = true;
  json report = json::array();
  for (const auto& path : a.files) {
    const auto annotation = SequenceAnnotation::load(path);
    const auto violations = validate(annotation, mode);
    all_valid = all_valid && violations.empty();
    if (a.json_output) {
      json v = json::array();
      for (const auto& item : violations) v.push_back(item.to_json());
      report.push_back({{"file", path.string()}, {"valid", violations.empty()},
                        {"violations", v}});
      continue;
    }
    out << path.string() << ": "
        << (violations.empty() ? "ok" : std::to_string(violations.size()) + " violation(s)")
        << "\n";
    for (const auto& v : violations) {
      out << "  [" << to_string(v.kind) << "] segment " << v.segment_index << ": "
          << v.message << "\n";
    }
  }
  if (a.json_output) out << report.dump(2) << "\n";
  return all_valid ? kExitOk : kExitData;
}

int run_to_coarse(const fs::path& in, const fs::path& out_path, std::ostream& out) {
  const auto coarse = to_coarse(SequenceAnnotation::load(in));
  coarse.save(out_path);
  out << coarse.segments.size() << " jump segments -> " << out_path.string() << "\n";
  return kExitOk;
}

int run_stats(const fs::path& manifest_path, bool json_output, std::ostream& out) {
  const auto manifest = CorpusManifest::load(manifest_path);
  std::vector<SequenceAnnotation> annotations;
  std::map<std::string, std::size_t> frames;
  for (const auto& entry : manifest.entries) {
    if (!entry.annotation_file) continue;
    annotations.push_back(SequenceAnnotation::load(*entry.annotation_file));
    frames[entry.sequence_id] = load_pose_sequence(entry.pose_file).frame_count;
  }
  const CorpusStats stats = corpus_stats(annotations, frames);
  if (json_output) {
    out << stats.to_json().dump(2) << "\n";
  } else {
    out << stats.to_text();
  }
  return kExitOk;
}

struct SplitArgs {
  fs::path manifest;
  std::vector<std::string> test;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};

int run_split(const SplitArgs& a, std::ostream& out) {
  const auto manifest = CorpusManifest::load(a.manifest, false);
  const Split split = split_by_competition(manifest, a.test, {a.val_fraction, a.seed});
  const json j{{"train", split.train}, {"val", split.val}, {"test", split.test}};
  if (a.out) {
    write_file_atomic(*a.out, j.dump(2) + "\n");
    out << "train " << split.train.size() << ", val " << split.val.size()
        << ", test " << split.test.size() << " -> " << a.out->string() << "\n";
  } else {
    out << j.dump(2) << "\n";
  }
  return kExitOk;
}

struct TrainArgs {
  std::vector<fs::path> features;
  std::vector<fs::path> annotations;
  std::string level = "set";
  std::size_t window = 15;
  TrainConfig config;
  bool no_class_weighting = false;
  fs::path out;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  if (a.features.size() != a.annotations.size()) {
    throw CLI::ValidationError("--annotations",
                               "needs one annotation file per --features file");
  }
  const Level level = parse_level(a.level);
  const auto& taxonomy = default_taxonomy(level);
  std::vector<FeatureSequence> features;
  std::vector<FrameLabels> labels;
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    features.push_back(FeatureSequence::load(a.features[i]));
    const auto annotation = at_level(SequenceAnnotation::load(a.annotations[i]), level);
    labels.push_back(expand_to_frames(annotation, taxonomy));
  }
  TrainConfig config = a.config;
  config.class_weighting = !a.no_class_weighting;
  const auto model = train(features, labels, taxonomy, a.window, config);
  model.save(a.out);
  out << "trained on " << features.size() << " sequences, final loss "
      << model.loss_history.back() << " -> " << a.out.string() << "\n";
  return kExitOk;
}

struct PredictArgs {
  fs::path model, features, out;
  bool no_smooth = false;
  SmoothOptions smooth;
};

int run_predict(const PredictArgs& a, std::ostream& out) {
  const auto model = LinearSegmenterModel::load(a.model);
  const auto features = FeatureSequence::load(a.features);
  FrameLabels labels = predict_frames(model, features).labels;
  if (!a.no_smooth) labels = smooth_labels(labels, a.smooth);
  if (is_json_path(a.out)) {
    annotation_from_frames(labels, model.taxonomy, features.sequence_id).save(a.out);
  } else {
    write_frame_labels(labels, model.taxonomy, a.out);
  }
  out << "predicted " << labels.labels.size() << " frames -> " << a.out.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::vector<fs::path> pred;
  std::vector<fs::path> gt;
  std::string level = "set";
  std::string ks = "10,25,50,75,90";
  std::optional<fs::path> json_out;
  bool macro = false;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.pred.size() != a.gt.size()) {
    throw CLI::ValidationError("--gt", "needs one ground-truth file per --pred file");
  }
  const Level level = parse_level(a.level);
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    EvalPair pair;
    pair.gt = at_level(SequenceAnnotation::load(a.gt[i]), level);
    pair.sequence_id = pair.gt.sequence_id;
    pair.pred = load_predictions(a.pred[i], level);
    pairs.push_back(std::move(pair));
  }
  const EvalReport report = evaluate_corpus(
      pairs, parse_overlaps(a.ks), a.macro ? Aggregation::Macro : Aggregation::Micro);
  out << report.to_table();
  if (a.json_out) write_file_atomic(*a.json_out, report.to_json().dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Figure-skating jump segmentation toolkit", "fsjump"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::function<int()> action;

  IngestArgs ingest;
  auto* c = app.add_subcommand("ingest", "Map an 86-keypoint 60 fps capture onto a joint rig");
  c->add_option("--in", ingest.in, "Capture JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--mapping", ingest.mapping, "Keypoint-to-joint mapping JSON")
      ->required()->check(CLI::ExistingFile);
  c->add_option("--out", ingest.out, "Pose file (.json or binary)")->required();
  c->add_option("--rig", ingest.rig, "Target rig name or rig JSON")->capture_default_str();
  c->add_option("--format", ingest.format, "json or binary (default: by extension)");
  c->add_option("--sequence-id", ingest.sequence_id, "Override the sequence id");
  c->callback([&] { action = [&] { return run_ingest(ingest, out); }; });

  PreprocessArgs pre;
  c = app.add_subcommand("preprocess", "Mask, center, normalize and align poses into features");
  c->add_option("--in", pre.in, "Pose file")->required()->check(CLI::ExistingFile);
  c->add_option("--out", pre.out, "Feature JSON")->required();
  c->add_flag("--no-align", pre.no_align, "Skip facing alignment");
  c->add_flag("--no-euler", pre.no_euler, "Omit the yaw/pitch/roll channels");
  c->add_flag("--no-normalize", pre.no_normalize, "Keep the original scale");
  c->add_flag("--per-sequence-align", pre.per_sequence,
              "One rotation per sequence (circular mean of the facing angles)");
  c->add_flag("--mask-features", pre.mask_flags, "Append per-joint validity flags");
  c->add_option("--conf-threshold", pre.threshold, "Mask joints below this confidence")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c->add_option("--fps", pre.fps, "Resample to this rate first")->check(CLI::PositiveNumber);
  c->callback([&] { action = [&] { return run_preprocess(pre, out); }; });

  ServeArgs serve;
  c = app.add_subcommand("annotate-serve", "Run the HTTP annotation service");
  c->add_option("--manifest", serve.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  c->add_option("--bind", serve.bind, "host:port (port 0 picks a free port)")->capture_default_str();
  c->add_option("--ui-dir", serve.ui_dir, "Static files served at /")->check(CLI::ExistingDirectory);
  c->add_option("--annotation-dir", serve.annotation_dir,
                "Where annotations without a manifest path are stored");
  c->add_flag("--readonly", serve.readonly, "Reject annotation writes");
  c->add_option("--level", serve.level, "Level of new annotations")->capture_default_str();
  c->add_option("--cache", serve.cache, "Pose cache size (sequences)")->capture_default_str();
  c->callback([&] { action = [&] { return run_serve(serve, out); }; });

  ValidateArgs val;
  c = app.add_subcommand("validate", "Check annotation files; exit 2 when any is invalid");
  c->add_option("files", val.files, "Annotation JSON files")->required()->check(CLI::ExistingFile);
  c->add_option("--mode", val.mode, "strict or lenient")->capture_default_str()
      ->check(CLI::IsMember({"strict", "lenient"}));
  c->add_flag("--json", val.json_output, "Machine-readable report");
  c->callback([&] { action = [&] { return run_validate(val, out); }; });

  fs::path coarse_in, coarse_out;
  c = app.add_subcommand("to-coarse", "Keep only the jump segments of an annotation");
  c->add_option("--in", coarse_in, "Annotation JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--out", coarse_out, "Coarse annotation JSON")->required();
  c->callback([&] { action = [&] { return run_to_coarse(coarse_in, coarse_out, out); }; });

  fs::path stats_manifest;
  bool stats_json = false;
  c = app.add_subcommand("stats", "Corpus statistics over annotated manifest entries");
  c->add_option("--manifest", stats_manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  c->add_flag("--json", stats_json, "Print JSON instead of text");
  c->callback([&] { action = [&] { return run_stats(stats_manifest, stats_json, out); }; });

  SplitArgs split;
  c = app.add_subcommand("split", "Competition-level train/val/test split");
  c->add_option("--manifest", split.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  c->add_option("--test", split.test, "Test competition ids")->delimiter(',');
  c->add_option("--val-fraction", split.val_fraction)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", split.seed)->capture_default_str();
  c->add_option("--out", split.out, "Write the split JSON here");
  c->callback([&] { action = [&] { return run_split(split, out); }; });

  TrainArgs tr;
  c = app.add_subcommand("train-baseline", "Train the windowed linear segmenter");
  c->add_option("--features", tr.features, "Feature JSON (repeatable)")
      ->required()->check(CLI::ExistingFile);
  c->add_option("--annotations", tr.annotations, "Annotation JSON, paired with --features")
      ->required()->check(CLI::ExistingFile);
  c->add_option("--level", tr.level)->capture_default_str()->check(CLI::IsMember({"set", "element"}));
  c->add_option("--window", tr.window, "Odd window width in frames")->capture_default_str();
  c->add_option("--epochs", tr.config.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--lr", tr.config.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--batch", tr.config.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--l2", tr.config.l2)->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--seed", tr.config.seed)->capture_default_str();
  c->add_flag("--no-class-weighting", tr.no_class_weighting, "Unweighted cross-entropy");
  c->add_option("--out", tr.out, "Model file")->required();
  c->callback([&] { action = [&] { return run_train(tr, out); }; });

  PredictArgs pr;
  c = app.add_subcommand("predict", "Label every frame of a feature sequence");
  c->add_option("--model", pr.model)->required()->check(CLI::ExistingFile);
  c->add_option("--features", pr.features)->required()->check(CLI::ExistingFile);
  c->add_option("--out", pr.out, "Annotation JSON (.json) or one label per line")->required();
  c->add_flag("--no-smooth", pr.no_smooth, "Skip the mode filter and short-run removal");
  c->add_option("--mode-window", pr.smooth.mode_window)->capture_default_str();
  c->add_option("--min-segment", pr.smooth.min_segment)->capture_default_str();
  c->callback([&] { action = [&] { return run_predict(pr, out); }; });

  EvalArgs ev;
  c = app.add_subcommand("eval", "Frame accuracy and segmental F1@k");
  c->add_option("--pred", ev.pred, "Prediction file (repeatable)")->required()->check(CLI::ExistingFile);
  c->add_option("--gt", ev.gt, "Ground-truth annotation, paired with --pred")
      ->required()->check(CLI::ExistingFile);
  c->add_option("--level", ev.level)->capture_default_str()->check(CLI::IsMember({"set", "element"}));
  c->add_option("--ks", ev.ks, "Overlap thresholds in percent")->capture_default_str();
  c->add_option("--json", ev.json_out, "Also write the report as JSON");
  c->add_flag("--macro", ev.macro, "Average per-sequence scores instead of pooling");
  c->callback([&] { action = [&] { return run_eval(ev, out); }; });

  if (args.size() > 1 && !args[1].starts_with("-")) {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->check_name(args[1]);
    if (!known) {
      err << "unknown subcommand '" << args[1] << "'\n" << app.help();
      return kExitUsage;
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace fsjump::cli
