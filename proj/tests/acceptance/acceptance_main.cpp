// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. The end-to-end and service checks drive
// the installed binaries as child processes.

#include <algorithm>
#include <array>
#include <barrier>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "fsjump/annotation.hpp"
#include "fsjump/baseline.hpp"
#include "fsjump/io.hpp"
#include "fsjump/metrics.hpp"
#include "fsjump/preprocess.hpp"
#include "fsjump/synthetic.hpp"
#include "test_support.hpp"

// After Eigen: the resolver header pulled in here defines a `_res` macro.
#include <httplib.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fsjump;
using testing::TempDir;

namespace {

// Collects the outcome of one criterion. `check` records a failed condition
// with its message; `note` adds informational detail to the summary line.
class Criterion {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool failed() const { return failed_; }
  std::string summary() const {
    std::ostringstream s;
    for (std::size_t i = 0; i < notes_.size(); ++i) s << (i ? "; " : "") << notes_[i];
    for (const auto& f : failures_) s << (s.tellp() > 0 ? "; " : "") << "FAILED: " << f;
    return s.str();
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Metric oracle

void metric_oracle(Criterion& c) {
  std::mt19937_64 rng(1001);
  const auto start = std::chrono::steady_clock::now();
  const int instances = 1000;
  int unique = 0, divergent = 0, tied_divergent = 0;
  for (int i = 0; i < instances; ++i) {
    const std::size_t T = testing::uniform_index(rng, 1, 60);
    const std::size_t labels = testing::uniform_index(rng, 1, 4);
    const auto pred = testing::random_segments(rng, T, 8, labels);
    const auto gt = testing::random_segments(rng, T, 8, labels);
    const double k = kDefaultOverlaps[testing::uniform_index(rng, 0, kDefaultOverlaps.size() - 1)];
    const auto greedy = match_segments(pred, gt, k);
    const auto best = testing::exhaustive_max_tp(pred, gt, k);
    const bool agree = greedy.tp == best.tp && greedy.fp == best.fp && greedy.fn == best.fn;
    c.check(greedy.tp <= best.tp, "greedy exceeded the optimum at instance " + std::to_string(i));
    if (best.optimal_count == 1) {
      ++unique;
      c.check(agree, "disagreement on a unique optimum at instance " + std::to_string(i));
    }
    if (!agree) {
      ++divergent;
      tied_divergent += best.optimal_count > 1;
      std::cout << "  divergent instance " << i << ": k=" << k << " greedy tp=" << greedy.tp
                << " optimal tp=" << best.tp << " optima=" << best.optimal_count << "\n";
    }
  }
  const double elapsed = seconds_since(start);
  c.check(divergent * 100 <= instances, "divergent " + std::to_string(divergent) + " > 1%");
  c.check(elapsed < 10.0, "runtime " + fmt(elapsed) + " s >= 10 s");
  c.note(std::to_string(instances) + " instances, " + std::to_string(unique) +
         " with a unique optimum, " + std::to_string(divergent) + " divergent (" +
         std::to_string(tied_divergent) + " among tied optima), " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// Reference arithmetic

void reference_arithmetic(Criterion& c) {
  const std::string ratio = format_percent(382.0 / 4265.0 * 100.0);
  c.check(ratio == "8.96", "action-frame ratio formatted as " + ratio);

  const Segment gt{Label::set_jump(JumpType::Axel), 0, 16};
  const Segment shifted{Label::set_jump(JumpType::Axel), 1, 17};
  const auto f = testing::frame_iou(gt, shifted);
  c.check(f.inter == 15 && f.uni == 17, "frame-count IoU is not 15/17");
  c.check(iou(gt, shifted) == 15.0 / 17.0, "iou() is not exactly 15/17");
  const std::vector<Segment> p{shifted}, g{gt};
  c.check(match_segments(p, g, 75).tp == 1, "one-frame shift fails F1@75");
  c.check(match_segments(p, g, 90).tp == 0, "one-frame shift passes F1@90");

  const auto set = default_taxonomy(Level::Set).action_label_count();
  const auto element = default_taxonomy(Level::Element).action_label_count();
  c.check(set == 13, "set taxonomy has " + std::to_string(set) + " action labels");
  c.check(element == 30, "element taxonomy has " + std::to_string(element) + " action labels");
  c.note("ratio " + ratio + "%, IoU 15/17, action labels " + std::to_string(set) + "/" +
         std::to_string(element));
}

// ---------------------------------------------------------------------------
// Preprocessing invariants

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void preprocessing_invariants(Criterion& c) {
  std::mt19937_64 rng(1003);
  const auto start = std::chrono::steady_clock::now();
  const int sequences = 1000;
  const double one_ulp = std::nextafter(1.0, 2.0) - 1.0;
  double worst_hip = 0, worst_scale = 0, worst_yaw = 0, worst_recon = 0, worst_idem = 0,
         worst_invariance = 0;
  for (int i = 0; i < sequences; ++i) {
    const auto raw = testing::random_pose(rng, testing::uniform_index(rng, 1, 12));
    const auto& rig = *raw.rig;
    const std::size_t l = rig.left_hip_index(), r = rig.right_hip_index();

    const auto centered = center_root(raw);
    for (std::size_t t = 0; t < centered.frame_count; ++t)
      for (int a = 0; a < 3; ++a)
        worst_hip = std::max(
            worst_hip, std::abs((centered.joint(t, l)[a] + centered.joint(t, r)[a]) / 2.0));

    const auto normalized = normalize_maxabs(centered);
    c.check(!normalized.degenerate, "random sequence normalized as degenerate");
    worst_scale = std::max(worst_scale, std::abs(max_abs(normalized.sequence.coords) - 1.0));

    const auto& x = normalized.sequence;
    const auto aligned = align_pose_sequence(x);
    const double scale = max_abs(x.coords);
    for (std::size_t t = 0; t < x.frame_count; ++t) {
      worst_yaw = std::max(worst_yaw, std::abs(facing_angle(aligned.aligned, t)));
      std::vector<double> back(aligned.aligned.frame(t).begin(), aligned.aligned.frame(t).end());
      rotate_about_up(back, rig.up(), aligned.euler[t][0]);
      worst_recon = std::max(worst_recon, max_abs_diff(back, x.frame(t)) / scale);
    }

    const auto twice = align_pose_sequence(aligned.aligned);
    worst_idem = std::max(worst_idem, max_abs_diff(twice.aligned.coords, aligned.aligned.coords));

    const double camera_yaw = testing::uniform(rng, -M_PI, M_PI);
    const auto turned = align_pose_sequence(testing::rotate_about_z(x, camera_yaw));
    worst_invariance = std::max(
        worst_invariance, max_abs_diff(turned.aligned.coords, aligned.aligned.coords) / scale);
  }
  const double elapsed = seconds_since(start);
  c.check(worst_hip <= 1e-12, "hip midpoint " + fmt(worst_hip));
  c.check(worst_scale <= one_ulp, "max-abs off by " + fmt(worst_scale));
  c.check(worst_yaw <= 1e-6, "aligned yaw " + fmt(worst_yaw));
  c.check(worst_recon <= 1e-9, "reconstruction " + fmt(worst_recon));
  c.check(worst_idem <= 1e-9, "second alignment moved points by " + fmt(worst_idem));
  c.check(worst_invariance <= 1e-9, "camera-yaw invariance " + fmt(worst_invariance));
  c.check(elapsed < 30.0, "runtime " + fmt(elapsed) + " s >= 30 s");
  c.note(std::to_string(sequences) + " sequences; hip " + fmt(worst_hip) + ", |maxabs-1| " +
         fmt(worst_scale) + ", yaw " + fmt(worst_yaw) + ", recon " + fmt(worst_recon) +
         ", idempotence " + fmt(worst_idem) + ", yaw invariance " + fmt(worst_invariance) +
         ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// Annotation round trips

void annotation_round_trips(Criterion& c) {
  std::mt19937_64 rng(1004);
  const auto start = std::chrono::steady_clock::now();
  const int annotations = 1000;
  for (int i = 0; i < annotations; ++i) {
    const Level level = i % 2 ? Level::Set : Level::Element;
    const auto mode = i % 3 ? ValidationMode::Strict : ValidationMode::Lenient;
    const auto a = testing::random_valid_annotation(rng, level, mode);
    const std::string tag = " (annotation " + std::to_string(i) + ")";
    c.check(validate(a, mode).empty(), "generator produced an invalid annotation" + tag);

    const auto frames = expand_to_frames(a);
    c.check(segments_from_frames(frames) == a.segments, "expand/segments mismatch" + tag);
    c.check(expand_to_frames(annotation_from_frames(frames, default_taxonomy(level),
                                                    a.sequence_id)) == frames,
            "segments/expand mismatch" + tag);

    const auto coarse = to_coarse(a);
    std::vector<Segment> jumps;
    for (const auto& s : a.segments)
      if (s.label.category == Category::Jump) jumps.push_back(s);
    c.check(coarse.segments == jumps, "to_coarse changed a jump segment" + tag);

    const std::map<std::string, std::size_t> totals{{a.sequence_id, a.total_frames}};
    c.check(corpus_stats({coarse}, totals).action_frame_ratio <=
                corpus_stats({a}, totals).action_frame_ratio,
            "coarse ratio exceeds fine ratio" + tag);
  }
  const double elapsed = seconds_since(start);
  c.check(elapsed < 10.0, "runtime " + fmt(elapsed) + " s >= 10 s");
  c.note(std::to_string(annotations) + " annotations, " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// Baseline trainer

void baseline_trainer(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1005);

  // Gradient check on random problems shaped like the set-level task.
  const std::size_t classes = default_taxonomy(Level::Set).size();
  double worst_rel = 0.0;
  for (int point = 0; point < 10; ++point) {
    const Eigen::Index n = 40, f = 6;
    RowMatrix x(n, f);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = testing::uniform(rng, -2, 2);
    std::vector<LabelId> y;
    for (Eigen::Index i = 0; i < n; ++i)
      y.push_back(static_cast<LabelId>(testing::uniform_index(rng, 0, classes - 1)));
    const auto w = balanced_class_weights(y, classes);
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(classes), f + 1);
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = testing::uniform(rng, -1, 1);
    const double l2 = 1e-2;
    const auto analytic = loss_and_gradient(weights, x, y, w, l2).gradient;
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      Eigen::MatrixXd plus = weights, minus = weights;
      plus(i) += h;
      minus(i) -= h;
      const double fd =
          (loss_and_gradient(plus, x, y, w, l2).loss - loss_and_gradient(minus, x, y, w, l2).loss) /
          (2 * h);
      const double denom = std::max({std::abs(analytic(i)), std::abs(fd), 1e-6});
      worst_rel = std::max(worst_rel, std::abs(analytic(i) - fd) / denom);
    }
  }
  c.check(worst_rel < 1e-4, "gradient relative error " + fmt(worst_rel));

  // Initial loss at zero weights.
  {
    RowMatrix x(50, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = testing::uniform(rng, -2, 2);
    std::vector<LabelId> y;
    for (int i = 0; i < 50; ++i)
      y.push_back(static_cast<LabelId>(testing::uniform_index(rng, 0, classes - 1)));
    const auto w = balanced_class_weights(y, classes);
    const double loss =
        loss_and_gradient(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), 5), x, y, w,
                          1e-4)
            .loss;
    c.check(std::abs(loss - std::log(static_cast<double>(classes))) <= 1e-9,
            "zero-weight loss " + fmt(loss, 17));
  }

  // Held-out quality on the synthetic corpus.
  SyntheticConfig config;
  config.sequences = 24;
  config.competitions = 4;
  config.seed = 2024;
  const auto corpus = generate_synthetic_corpus(config);
  std::vector<FeatureSequence> train_x;
  std::vector<FrameLabels> train_y;
  std::vector<std::pair<FeatureSequence, SequenceAnnotation>> test;
  for (const auto& item : corpus) {
    auto features = preprocess_sequence(item.pose);
    auto gt = project_annotation_to_set(item.annotation);
    if (item.pose.meta.competition_id == "comp3") {
      test.emplace_back(std::move(features), std::move(gt));
    } else {
      train_y.push_back(expand_to_frames(gt));
      train_x.push_back(std::move(features));
    }
  }
  const auto model =
      train(train_x, train_y, default_taxonomy(Level::Set), 15, TrainConfig{});
  std::vector<EvalPair> pairs, all_none;
  for (const auto& [features, gt] : test) {
    pairs.push_back({gt.sequence_id, smooth_labels(predict_frames(model, features).labels), gt});
    all_none.push_back({gt.sequence_id,
                        FrameLabels{Level::Set, std::vector<LabelId>(gt.total_frames, kNoneId)},
                        gt});
  }
  const auto report = evaluate_corpus(pairs);
  const auto none_report = evaluate_corpus(all_none);
  const double f1_50 = report.scores[2].f1;
  c.check(f1_50 >= 90.0, "held-out F1@50 " + fmt(f1_50, 4));
  c.check(report.accuracy > none_report.accuracy,
          "accuracy " + fmt(report.accuracy, 4) + " <= all-NONE " + fmt(none_report.accuracy, 4));

  const double elapsed = seconds_since(start);
  c.check(elapsed < 120.0, "runtime " + fmt(elapsed) + " s >= 120 s");
  c.note("gradient rel err " + fmt(worst_rel) + "; held-out (" + std::to_string(test.size()) +
         " seqs) Acc " + fmt(report.accuracy, 4) + " vs all-NONE " +
         fmt(none_report.accuracy, 4) + ", F1@50 " + fmt(f1_50, 4) + ", F1@10..90 " +
         fmt(report.scores[0].f1, 4) + "/" + fmt(report.scores[1].f1, 4) + "/" +
         fmt(report.scores[2].f1, 4) + "/" + fmt(report.scores[3].f1, 4) + "/" +
         fmt(report.scores[4].f1, 4) + "; " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------
// MPJPE

PoseSequence filled(double x, double y, double z, std::size_t frames = 5) {
  auto seq = PoseSequence::zeros(testing::h36m(), 3, 30.0, frames);
  for (std::size_t i = 0; i < seq.coords.size(); i += 3) {
    seq.coords[i] = x;
    seq.coords[i + 1] = y;
    seq.coords[i + 2] = z;
  }
  return seq;
}

void mpjpe_checks(Criterion& c) {
  std::mt19937_64 rng(1006);
  const auto a = testing::random_pose(rng, 8);
  c.check(mpjpe(a, a) == 0.0, "identical inputs give " + fmt(mpjpe(a, a)));

  const double offset = mpjpe(filled(3, 4, 0), filled(0, 0, 0));
  c.check(offset == 5.0, "(3,4,0) offset gives " + fmt(offset, 17));
  auto moved = a;
  for (std::size_t i = 0; i < moved.coords.size(); i += 3) {
    moved.coords[i] += 3.0;
    moved.coords[i + 1] += 4.0;
  }
  const double random_offset = mpjpe(moved, a);
  c.check(std::abs(random_offset - 5.0) <= 1e-9,
          "(3,4,0) offset on a random pose gives " + fmt(random_offset, 17));

  // Corrupt one joint per frame and mask it: the error must stay exactly 5.
  auto pred = filled(3, 4, 0);
  pred.mask = std::vector<bool>(pred.frame_count * 17, true);
  for (std::size_t t = 0; t < pred.frame_count; ++t) {
    const std::size_t j = testing::uniform_index(rng, 0, 16);
    pred.joint(t, j)[2] = 1e7;
    (*pred.mask)[t * 17 + j] = false;
  }
  const double masked = mpjpe(pred, filled(0, 0, 0));
  c.check(masked == 5.0, "masked joints leaked into the error: " + fmt(masked, 17));
  c.note("identical 0, offset " + fmt(offset, 17) + ", masked " + fmt(masked, 17));
}

// ---------------------------------------------------------------------------
// Child processes

struct ProcessResult {
  int exit_code = -1;
  std::string output;
};

// Runs `argv` to completion with stdout and stderr captured together.
ProcessResult run_process(const std::vector<std::string>& argv) {
  int pipe_fds[2];
  if (::pipe(pipe_fds) != 0) return {};
  const pid_t pid = ::fork();
  if (pid == 0) {
    ::dup2(pipe_fds[1], STDOUT_FILENO);
    ::dup2(pipe_fds[1], STDERR_FILENO);
    ::close(pipe_fds[0]);
    ::close(pipe_fds[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    ::_exit(127);
  }
  ::close(pipe_fds[1]);
  ProcessResult result;
  char buffer[4096];
  ssize_t n;
  while ((n = ::read(pipe_fds[0], buffer, sizeof buffer)) > 0) result.output.append(buffer, n);
  ::close(pipe_fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// End-to-end CLI

struct PipelineRun {
  bool ok = false;
  std::string error;
  std::string table;
  std::string report;
};

PipelineRun run_pipeline(const fs::path& dir) {
  PipelineRun run;
  const std::string cli = FSJUMP_CLI_PATH;
  auto step = [&](const std::vector<std::string>& argv) {
    const auto r = run_process(argv);
    if (r.exit_code != 0 && run.error.empty())
      run.error = argv[1] + " exited " + std::to_string(r.exit_code) + ": " + r.output;
    return r;
  };
  step({FSJUMP_SYNTH_PATH, "--out", dir.string(), "--sequences", "8", "--competitions", "4",
        "--min-jumps", "3", "--max-jumps", "4", "--seed", "11"});
  if (!run.error.empty()) return run;

  const auto manifest = CorpusManifest::load(dir / "manifest.json");
  fs::create_directories(dir / "ingested");
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "pred");
  std::vector<std::string> train = {cli, "train-baseline", "--level", "set", "--epochs", "15",
                                    "--seed", "3", "--out", (dir / "model.fslm").string()};
  std::vector<std::string> eval = {cli, "eval", "--level", "set", "--json",
                                   (dir / "report.json").string()};
  for (const auto& entry : manifest.entries) {
    const std::string id = entry.sequence_id;
    const auto pose = dir / "ingested" / (id + ".fsps");
    const auto features = dir / "features" / (id + ".json");
    step({cli, "ingest", "--in", (dir / "mocap" / (id + ".json")).string(), "--mapping",
          (dir / "mapping.json").string(), "--out", pose.string()});
    step({cli, "preprocess", "--in", pose.string(), "--out", features.string()});
    // comp3 is held out for evaluation.
    if (entry.competition_id != "comp3") {
      train.insert(train.end(), {"--features", features.string(), "--annotations",
                                 entry.annotation_file->string()});
    }
  }
  step(train);
  for (const auto& entry : manifest.entries) {
    if (entry.competition_id != "comp3") continue;
    const std::string id = entry.sequence_id;
    const auto pred = dir / "pred" / (id + ".json");
    step({cli, "predict", "--model", (dir / "model.fslm").string(), "--features",
          (dir / "features" / (id + ".json")).string(), "--out", pred.string()});
    eval.insert(eval.end(), {"--pred", pred.string(), "--gt", entry.annotation_file->string()});
  }
  const auto result = step(eval);
  run.ok = run.error.empty();
  run.table = result.output;
  run.report = read_file(dir / "report.json");
  return run;
}

void end_to_end_cli(Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  TempDir first, second;
  const auto a = run_pipeline(first.path());
  c.check(a.ok, "first run: " + a.error);
  if (!a.ok) return;
  const auto b = run_pipeline(second.path());
  c.check(b.ok, "second run: " + b.error);
  if (!b.ok) return;

  const std::string header = a.table.substr(0, a.table.find('\n'));
  std::istringstream columns(header);
  std::vector<std::string> names{std::istream_iterator<std::string>(columns), {}};
  const std::vector<std::string> expected{"Acc", "F1@10", "F1@25", "F1@50", "F1@75", "F1@90"};
  c.check(names == expected, "table header '" + header + "'");

  const auto report = json::parse(a.report);
  std::vector<double> overlaps;
  for (const auto& t : report.at("thresholds")) overlaps.push_back(t.at("k").get<double>());
  c.check(overlaps == kDefaultOverlaps, "report thresholds " + report.at("thresholds").dump());
  c.check(report.contains("accuracy"), "report lacks accuracy");

  c.check(a.report == b.report, "reports differ between runs");
  c.check(a.table == b.table, "tables differ between runs");
  const std::string row = a.table.substr(a.table.find('\n') + 1);
  c.note("row [" + row.substr(0, row.find('\n')) + "], " + std::to_string(a.report.size()) +
         "-byte report identical across runs, " + fmt(seconds_since(start)) + " s");
}

// ---------------------------------------------------------------------------
// Service

class Server {
 public:
  Server(const fs::path& manifest) {
    int pipe_fds[2];
    if (::pipe(pipe_fds) != 0) return;
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(pipe_fds[1], STDOUT_FILENO);
      ::close(pipe_fds[0]);
      ::close(pipe_fds[1]);
      const std::string cli = FSJUMP_CLI_PATH;
      const std::string m = manifest.string();
      ::execl(cli.c_str(), cli.c_str(), "annotate-serve", "--manifest", m.c_str(), "--bind",
              "127.0.0.1:0", static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(pipe_fds[1]);
    std::string line;
    char ch;
    while (::read(pipe_fds[0], &ch, 1) == 1 && ch != '\n') line.push_back(ch);
    ::close(pipe_fds[0]);
    const auto colon = line.rfind(':');
    if (line.rfind("listening on", 0) == 0 && colon != std::string::npos)
      port_ = std::stoi(line.substr(colon + 1));
  }
  ~Server() { kill(); }

  int port() const { return port_; }
  void kill() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

json put_body(const SequenceAnnotation& base, std::uint64_t expected, std::size_t shift) {
  SequenceAnnotation a;
  a.sequence_id = base.sequence_id;
  a.level = Level::Set;
  a.total_frames = base.total_frames;
  a.segments = {{Label::entry(Level::Set, JumpType::Lutz), 10 + shift, 25 + shift},
                {Label::set_jump(JumpType::Lutz), 25 + shift, 41 + shift},
                {Label::landing(Level::Set), 41 + shift, 55 + shift}};
  return {{"expected_version", expected}, {"mode", "strict"}, {"annotation", a.to_json()}};
}

void service_checks(Criterion& c) {
  TempDir dir;
  SyntheticConfig config;
  config.sequences = 2;
  config.competitions = 1;
  config.min_jumps = 1;
  config.max_jumps = 1;
  const auto corpus = generate_synthetic_corpus(config);
  CorpusManifest manifest;
  manifest.base_dir = dir.path();
  for (const auto& item : corpus) {
    const auto id = item.pose.meta.sequence_id;
    save_pose_sequence(item.pose, dir / (id + ".fsps"), PoseFormat::Binary);
    manifest.entries.push_back({id, dir / (id + ".fsps"), std::nullopt, "comp0", ""});
  }
  manifest.save(dir / "manifest.json");
  SequenceAnnotation base;
  base.sequence_id = "seq000";
  base.total_frames = corpus[0].pose.frame_count;
  const std::string path = "/api/sequences/seq000/annotation";

  auto server = std::make_unique<Server>(dir / "manifest.json");
  c.check(server->port() > 0, "server did not report a port");
  if (server->port() <= 0) return;

  // Two clients race on the same expected version in every round.
  const int rounds = 20;
  int good_rounds = 0;
  for (int round = 0; round < rounds; ++round) {
    std::array<int, 2> status{};
    std::barrier sync(2);
    std::vector<std::thread> clients;
    for (int k = 0; k < 2; ++k) {
      clients.emplace_back([&, k] {
        httplib::Client client("127.0.0.1", server->port());
        const auto body = put_body(base, static_cast<std::uint64_t>(round), k + round % 3);
        sync.arrive_and_wait();
        const auto res = client.Put(path, body.dump(), "application/json");
        status[k] = res ? res->status : -1;
      });
    }
    for (auto& t : clients) t.join();
    std::sort(status.begin(), status.end());
    const bool ok = status[0] == 200 && status[1] == 409;
    good_rounds += ok;
    c.check(ok, "round " + std::to_string(round) + " statuses " + std::to_string(status[0]) +
                    "," + std::to_string(status[1]));
  }

  httplib::Client client("127.0.0.1", server->port());
  auto before = client.Get(path);
  c.check(before && before->status == 200, "GET before restart failed");
  if (!before) return;
  const auto committed = json::parse(before->body);

  server->kill();
  server = std::make_unique<Server>(dir / "manifest.json");
  c.check(server->port() > 0, "restarted server did not report a port");
  if (server->port() <= 0) return;
  httplib::Client again("127.0.0.1", server->port());
  auto after = again.Get(path);
  c.check(after && after->status == 200, "GET after restart failed");
  if (!after) return;
  const auto restored = json::parse(after->body);
  c.check(restored.at("version") == committed.at("version"),
          "version " + restored.at("version").dump() + " after restart, expected " +
              committed.at("version").dump());
  c.check(restored.at("segments") == committed.at("segments"), "segments changed on restart");
  c.check(restored.at("version") == rounds, "version is not the number of rounds");
  c.note(std::to_string(good_rounds) + "/" + std::to_string(rounds) +
         " rounds with one 200 and one 409; version " + restored.at("version").dump() +
         " retained after SIGKILL and restart; no UI directory configured");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria = {
      {"metric-oracle", metric_oracle},
      {"reference-arithmetic", reference_arithmetic},
      {"preprocessing-invariants", preprocessing_invariants},
      {"annotation-round-trips", annotation_round_trips},
      {"baseline-trainer", baseline_trainer},
      {"mpjpe", mpjpe_checks},
      {"end-to-end-cli", end_to_end_cli},
      {"service", service_checks},
  };
  int failed = 0;
  for (const auto& [name, body] : criteria) {
    Criterion c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    failed += c.failed();
    std::cout << (c.failed() ? "FAIL " : "PASS ") << name << ": " << c.summary() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
