#include "fsjump/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>

#include "fsjump/error.hpp"
#include "fsjump/io.hpp"

namespace fsjump {

namespace {

constexpr char kModelMagic[4] = {'F', 'S', 'L', 'M'};
constexpr std::uint16_t kModelVersion = 1;

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void put_uint(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}
  std::uint64_t uint(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += bytes;
    return v;
  }
  double f64() {
    const std::uint64_t bits = uint(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw ParseError("truncated model file at offset " + std::to_string(pos_));
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

Eigen::MatrixXd with_bias(const RowMatrix& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

}  // namespace

RowMatrix window_features(const FeatureSequence& features, std::size_t window) {
  if (window < 1 || window % 2 == 0)
    throw RangeError("window size must be odd and >= 1, got " +
                     std::to_string(window));
  const std::size_t T = features.frame_count;
  const std::size_t D = features.dims;
  if (T == 0) throw DimensionError("cannot window an empty feature sequence");
  const long half = static_cast<long>(window / 2);
  RowMatrix out(static_cast<Eigen::Index>(T),
                static_cast<Eigen::Index>(window * D));
  for (std::size_t t = 0; t < T; ++t) {
    double* dst = out.row(static_cast<Eigen::Index>(t)).data();
    for (long o = -half; o <= half; ++o) {
      const long src = std::clamp(static_cast<long>(t) + o, 0L,
                                  static_cast<long>(T) - 1);
      const auto r = features.row(static_cast<std::size_t>(src));
      std::copy(r.begin(), r.end(), dst + (o + half) * static_cast<long>(D));
    }
  }
  return out;
}

Standardizer Standardizer::fit(const RowMatrix& x) {
  if (x.rows() == 0) throw DimensionError("cannot standardize zero rows");
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) s.mean += x.row(i).transpose();
  s.mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    var += (x.row(i).transpose() - s.mean).array().square().matrix();
  var /= n;
  s.stddev = var.array().sqrt();
  for (Eigen::Index d = 0; d < s.stddev.size(); ++d)
    if (!(s.stddev[d] >= kEpsilon)) s.stddev[d] = 1.0;
  return s;
}

Standardizer Standardizer::identity(std::size_t dims) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims)),
          Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dims))};
}

void Standardizer::apply(RowMatrix& x) const {
  if (x.cols() != mean.size())
    throw DimensionError("standardizer width " + std::to_string(mean.size()) +
                         " != input width " + std::to_string(x.cols()));
  x.rowwise() -= mean.transpose();
  x.array().rowwise() /= stddev.transpose().array();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs},
          {"batch_size", batch_size},       {"l2", l2},
          {"seed", seed},                   {"class_weighting", class_weighting}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.l2 = j.at("l2").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.class_weighting = j.at("class_weighting").get<bool>();
  return c;
}

std::vector<double> balanced_class_weights(std::span<const LabelId> labels,
                                           std::size_t class_count) {
  std::vector<std::size_t> counts(class_count, 0);
  for (LabelId y : labels) {
    if (y >= class_count) throw RangeError("label id outside taxonomy");
    ++counts[y];
  }
  std::vector<double> w(class_count, 0.0);
  const double T = static_cast<double>(labels.size());
  for (std::size_t c = 0; c < class_count; ++c)
    if (counts[c] > 0)
      w[c] = T / (static_cast<double>(class_count) *
                  static_cast<double>(counts[c]));
  return w;
}

LossAndGradient loss_and_gradient(const Eigen::MatrixXd& weights,
                                  const RowMatrix& x,
                                  std::span<const LabelId> labels,
                                  std::span<const double> class_weights,
                                  double l2) {
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  const Eigen::Index c = weights.rows();
  if (weights.cols() != f + 1)
    throw DimensionError("weight matrix width does not match features");
  if (static_cast<std::size_t>(n) != labels.size())
    throw DimensionError("label count does not match rows");

  const Eigen::MatrixXd xb = with_bias(x);
  Eigen::MatrixXd scores = xb * weights.transpose();  // n x c
  Eigen::MatrixXd residual(n, c);
  double weighted = 0.0, weight_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(i).array() - m).exp().matrix();
    const double z = e.sum();
    const double lse = m + std::log(z);
    const LabelId y = labels[static_cast<std::size_t>(i)];
    const double w = class_weights[y];
    weighted += w * (lse - scores(i, y));
    weight_sum += w;
    residual.row(i) = e / z;
    residual(i, y) -= 1.0;
    residual.row(i) *= w;
  }
  if (weight_sum <= 0.0)
    throw TrainingError("all training rows carry zero class weight");

  LossAndGradient out;
  const auto w_no_bias = weights.leftCols(f);
  out.loss = weighted / weight_sum + 0.5 * l2 * w_no_bias.squaredNorm();
  out.gradient = residual.transpose() * xb / weight_sum;
  out.gradient.leftCols(f) += l2 * w_no_bias;
  return out;
}

LinearSegmenterModel train_windows(const RowMatrix& windows,
                                   std::span<const LabelId> labels,
                                   const LabelTaxonomy& taxonomy,
                                   std::size_t window, std::size_t feature_dims,
                                   const TrainConfig& config) {
  const std::size_t n = labels.size();
  if (static_cast<std::size_t>(windows.rows()) != n)
    throw DimensionError("window rows (" + std::to_string(windows.rows()) +
                         ") and labels (" + std::to_string(n) + ") differ");
  if (static_cast<std::size_t>(windows.cols()) != window * feature_dims)
    throw DimensionError("window width does not equal W * D");
  if (config.batch_size == 0 || config.epochs < 0 ||
      !(config.learning_rate > 0.0) || config.l2 < 0.0)
    throw RangeError("invalid training configuration");
  const std::size_t C = taxonomy.size();
  for (LabelId y : labels)
    if (y >= C) throw RangeError("label id outside taxonomy");
  if (std::set<LabelId>(labels.begin(), labels.end()).size() < 2)
    throw TrainingError("training labels must contain at least two classes");

  // Canonical row order: lexicographic on (features, label).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double* ra = windows.row(static_cast<Eigen::Index>(a)).data();
    const double* rb = windows.row(static_cast<Eigen::Index>(b)).data();
    const auto w = static_cast<std::size_t>(windows.cols());
    if (std::lexicographical_compare(ra, ra + w, rb, rb + w)) return true;
    if (std::lexicographical_compare(rb, rb + w, ra, ra + w)) return false;
    return labels[a] < labels[b];
  });
  RowMatrix x(windows.rows(), windows.cols());
  std::vector<LabelId> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        windows.row(static_cast<Eigen::Index>(order[i]));
    y[i] = labels[order[i]];
  }

  LinearSegmenterModel model;
  model.level = taxonomy.level();
  model.taxonomy = taxonomy;
  model.window = window;
  model.feature_dims = feature_dims;
  model.config = config;
  model.standardizer = Standardizer::fit(x);
  model.standardizer.apply(x);
  model.class_weights = config.class_weighting
                            ? balanced_class_weights(y, C)
                            : std::vector<double>(C, 1.0);
  const Eigen::Index F = x.cols();
  model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), F + 1);

  auto full = loss_and_gradient(model.weights, x, y, model.class_weights,
                                config.l2);
  model.loss_history.push_back(full.loss);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double lr = config.learning_rate;
  RowMatrix batch;
  std::vector<LabelId> batch_labels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Eigen::MatrixXd before = model.weights;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      batch.resize(static_cast<Eigen::Index>(len), F);
      batch_labels.resize(len);
      for (std::size_t b = 0; b < len; ++b) {
        batch.row(static_cast<Eigen::Index>(b)) =
            x.row(static_cast<Eigen::Index>(perm[start + b]));
        batch_labels[b] = y[perm[start + b]];
      }
      bool has_weight = false;
      for (LabelId l : batch_labels) has_weight |= model.class_weights[l] > 0.0;
      if (!has_weight) continue;
      const auto step = loss_and_gradient(model.weights, batch, batch_labels,
                                          model.class_weights, config.l2);
      model.weights -= lr * step.gradient;
    }
    const double loss =
        loss_and_gradient(model.weights, x, y, model.class_weights, config.l2)
            .loss;
    if (!std::isfinite(loss) || !model.weights.allFinite())
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                          " (learning rate " + std::to_string(lr) +
                          ", previous loss " +
                          std::to_string(model.loss_history.back()) + ")");
    if (loss > model.loss_history.back()) {
      model.weights = before;
      lr *= 0.5;
      model.loss_history.push_back(model.loss_history.back());
      if (lr < 1e-12) break;
    } else {
      model.loss_history.push_back(loss);
    }
  }
  return model;
}

LinearSegmenterModel train(const std::vector<FeatureSequence>& sequences,
                           const std::vector<FrameLabels>& labels,
                           const LabelTaxonomy& taxonomy, std::size_t window,
                           const TrainConfig& config) {
  if (sequences.size() != labels.size())
    throw DimensionError("feature and label sequence counts differ");
  if (sequences.empty()) throw TrainingError("no training sequences");
  const std::size_t D = sequences.front().dims;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].dims != D)
      throw DimensionError("feature sequences differ in width");
    if (sequences[i].frame_count != labels[i].size())
      throw DimensionError("sequence '" + sequences[i].sequence_id + "' has " +
                           std::to_string(sequences[i].frame_count) +
                           " frames but " + std::to_string(labels[i].size()) +
                           " labels");
    if (labels[i].level != taxonomy.level())
      throw DimensionError("label level differs from taxonomy");
    rows += sequences[i].frame_count;
  }
  RowMatrix all(static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(window * D));
  std::vector<LabelId> y;
  y.reserve(rows);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const RowMatrix w = window_features(sequences[i], window);
    all.middleRows(at, w.rows()) = w;
    at += w.rows();
    y.insert(y.end(), labels[i].labels.begin(), labels[i].labels.end());
  }
  return train_windows(all, y, taxonomy, window, D, config);
}

Prediction predict_frames(const LinearSegmenterModel& model,
                          const RowMatrix& windows) {
  if (static_cast<std::size_t>(windows.cols()) != model.input_width())
    throw DimensionError("input width " + std::to_string(windows.cols()) +
                         " does not match model width " +
                         std::to_string(model.input_width()));
  RowMatrix x = windows;
  model.standardizer.apply(x);
  Prediction p;
  p.scores = with_bias(x) * model.weights.transpose();
  p.labels.level = model.level;
  p.labels.labels.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.scores.cols(); ++c)
      if (p.scores(i, c) > p.scores(i, best)) best = c;
    p.labels.labels[static_cast<std::size_t>(i)] = static_cast<LabelId>(best);
  }
  return p;
}

Prediction predict_frames(const LinearSegmenterModel& model,
                          const FeatureSequence& features) {
  if (features.dims != model.feature_dims)
    throw DimensionError("feature width " + std::to_string(features.dims) +
                         " does not match model (" +
                         std::to_string(model.feature_dims) + ")");
  return predict_frames(model, window_features(features, model.window));
}

FrameLabels smooth_labels(const FrameLabels& frames,
                          const SmoothOptions& options) {
  if (options.mode_window < 1 || options.min_segment < 1)
    throw RangeError("smoothing parameters must be >= 1");
  const auto& in = frames.labels;
  const std::size_t T = in.size();
  FrameLabels out{frames.level, std::vector<LabelId>(T)};
  if (T == 0) return out;

  // Pass 1: sliding mode. Ties prefer the centre frame's label, then the
  // lowest id.
  const std::size_t half = options.mode_window / 2;
  std::vector<std::size_t> counts;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(T - 1, t + half);
    counts.assign(*std::max_element(in.begin() + lo, in.begin() + hi + 1) + 1,
                  0);
    for (std::size_t i = lo; i <= hi; ++i) ++counts[in[i]];
    LabelId best = in[t];
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] > counts[best]) best = static_cast<LabelId>(c);
    out.labels[t] = best;
  }

  // Pass 2: repeatedly absorb the shortest too-short run into its longer
  // neighbour (ties go to the preceding run).
  struct Run {
    LabelId label;
    std::size_t length;
  };
  std::vector<Run> runs;
  for (LabelId l : out.labels) {
    if (!runs.empty() && runs.back().label == l)
      ++runs.back().length;
    else
      runs.push_back({l, 1});
  }
  while (runs.size() > 1) {
    std::size_t shortest = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (runs[i].length < options.min_segment &&
          (shortest == runs.size() || runs[i].length < runs[shortest].length))
        shortest = i;
    if (shortest == runs.size()) break;
    std::size_t target;
    if (shortest == 0)
      target = 1;
    else if (shortest + 1 == runs.size())
      target = shortest - 1;
    else
      target = runs[shortest + 1].length > runs[shortest - 1].length
                   ? shortest + 1
                   : shortest - 1;
    runs[target].length += runs[shortest].length;
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
    // Merge neighbours that now carry the same label.
    std::vector<Run> merged;
    for (const auto& r : runs) {
      if (!merged.empty() && merged.back().label == r.label)
        merged.back().length += r.length;
      else
        merged.push_back(r);
    }
    runs = std::move(merged);
  }
  std::size_t t = 0;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.length; ++i) out.labels[t++] = r.label;
  return out;
}

void LinearSegmenterModel::save(const std::filesystem::path& path) const {
  nlohmann::json header = {
      {"format", "fsjump-linear-segmenter"},
      {"level", to_string(level)},
      {"taxonomy", taxonomy.to_json()},
      {"window", window},
      {"feature_dims", feature_dims},
      {"classes", weights.rows()},
      {"weight_cols", weights.cols()},
      {"config", config.to_json()},
      {"class_weights", class_weights},
      {"loss_history", loss_history}};
  const std::string h = header.dump();
  std::string out(kModelMagic, 4);
  put_uint(out, kModelVersion, 2);
  put_uint(out, h.size(), 4);
  out += h;
  for (Eigen::Index r = 0; r < weights.rows(); ++r)
    for (Eigen::Index c = 0; c < weights.cols(); ++c) put_f64(out, weights(r, c));
  for (Eigen::Index d = 0; d < standardizer.mean.size(); ++d)
    put_f64(out, standardizer.mean[d]);
  for (Eigen::Index d = 0; d < standardizer.stddev.size(); ++d)
    put_f64(out, standardizer.stddev[d]);
  write_file_atomic(path, out);
}

LinearSegmenterModel LinearSegmenterModel::load(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  const std::string data{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  Reader r(data);
  if (r.str(4) != std::string(kModelMagic, 4))
    throw ParseError("'" + path.string() + "' is not a model file");
  if (r.uint(2) != kModelVersion)
    throw ParseError("unsupported model file version");
  const auto header_len = static_cast<std::size_t>(r.uint(4));
  LinearSegmenterModel m;
  try {
    const auto header = nlohmann::json::parse(r.str(header_len));
    m.level = parse_level(header.at("level").get<std::string>());
    m.taxonomy = LabelTaxonomy::from_json(header.at("taxonomy"));
    m.window = header.at("window").get<std::size_t>();
    m.feature_dims = header.at("feature_dims").get<std::size_t>();
    m.config = TrainConfig::from_json(header.at("config"));
    m.class_weights = header.at("class_weights").get<std::vector<double>>();
    m.loss_history = header.at("loss_history").get<std::vector<double>>();
    const auto rows = header.at("classes").get<Eigen::Index>();
    const auto cols = header.at("weight_cols").get<Eigen::Index>();
    if (static_cast<std::size_t>(rows) != m.taxonomy.size() ||
        static_cast<std::size_t>(cols) != m.input_width() + 1)
      throw DimensionError("model header shapes are inconsistent");
    m.weights.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m.weights(i, j) = r.f64();
    const auto width = static_cast<Eigen::Index>(m.input_width());
    m.standardizer.mean.resize(width);
    m.standardizer.stddev.resize(width);
    for (Eigen::Index d = 0; d < width; ++d) m.standardizer.mean[d] = r.f64();
    for (Eigen::Index d = 0; d < width; ++d) m.standardizer.stddev[d] = r.f64();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model header: " + std::string(e.what()));
  }
  if (!r.done()) throw ParseError("trailing bytes in model file");
  return m;
}

}  // namespace fsjump
