#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fsjump/labels.hpp"
#include "fsjump/preprocess.hpp"

namespace fsjump {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row t concatenates frames t-(W-1)/2 .. t+(W-1)/2, clamping at the edges.
RowMatrix window_features(const FeatureSequence& features, std::size_t window);

struct Standardizer {
  static constexpr double kEpsilon = 1e-8;

  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // dims below kEpsilon are stored as 1

  static Standardizer fit(const RowMatrix& x);
  static Standardizer identity(std::size_t dims);
  void apply(RowMatrix& x) const;
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 40;
  std::size_t batch_size = 256;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool class_weighting = true;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Multinomial logistic regression over windowed frame features.
struct LinearSegmenterModel {
  Level level = Level::Set;
  LabelTaxonomy taxonomy = default_taxonomy(Level::Set);
  std::size_t window = 15;
  std::size_t feature_dims = 0;  // D, per-frame width before windowing
  Eigen::MatrixXd weights;       // C x (W*D + 1), bias in the last column
  Standardizer standardizer;
  std::vector<double> class_weights;
  TrainConfig config;
  std::vector<double> loss_history;  // accepted full-data loss per epoch

  std::size_t input_width() const { return window * feature_dims; }

  // "FSLM", u16 version, u32 header length, JSON header, then weights
  // (row-major), standardizer mean and stddev as float64 little-endian.
  void save(const std::filesystem::path& path) const;
  static LinearSegmenterModel load(const std::filesystem::path& path);
};

// Per-class weights T / (C * count_c); classes absent from `labels` get 0.
std::vector<double> balanced_class_weights(std::span<const LabelId> labels,
                                           std::size_t class_count);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;
};

// Class-weighted mean cross-entropy plus (l2 / 2) * ||W without bias||^2.
// `x` holds standardized rows without the bias column.
LossAndGradient loss_and_gradient(const Eigen::MatrixXd& weights,
                                  const RowMatrix& x,
                                  std::span<const LabelId> labels,
                                  std::span<const double> class_weights,
                                  double l2);

// Sequences are windowed independently and stacked. Rows are put in a
// canonical content order before the seeded shuffle, so the result does not
// depend on the order of the training frames.
LinearSegmenterModel train(const std::vector<FeatureSequence>& sequences,
                           const std::vector<FrameLabels>& labels,
                           const LabelTaxonomy& taxonomy, std::size_t window,
                           const TrainConfig& config);

// Lower-level entry point on already-windowed rows.
LinearSegmenterModel train_windows(const RowMatrix& windows,
                                   std::span<const LabelId> labels,
                                   const LabelTaxonomy& taxonomy,
                                   std::size_t window, std::size_t feature_dims,
                                   const TrainConfig& config);

struct Prediction {
  FrameLabels labels;
  Eigen::MatrixXd scores;  // T x C affine scores
};

// Argmax per frame; ties go to the lower label id.
Prediction predict_frames(const LinearSegmenterModel& model,
                          const RowMatrix& windows);
Prediction predict_frames(const LinearSegmenterModel& model,
                          const FeatureSequence& features);

struct SmoothOptions {
  std::size_t mode_window = 9;
  std::size_t min_segment = 5;
};

// Sliding-mode filter, then absorption of runs shorter than min_segment into
// the longer neighbouring run. Idempotent when
// min_segment >= (mode_window + 1) / 2.
FrameLabels smooth_labels(const FrameLabels& frames,
                          const SmoothOptions& options = {});

}  // namespace fsjump
