#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fsjump/annotation.hpp"
#include "fsjump/io.hpp"
#include "fsjump/pose.hpp"

namespace fsjump {

// Seeded generator of skating programs on the H3.6M rig. Each sequence is
// background stroking interleaved with jump instances (entry, airborne
// rotation, landing); every phase has its own body configuration, entries
// and airborne phases carry a per-jump-type signature, and Gaussian noise is
// added to every coordinate. Annotations are element level.
struct SyntheticConfig {
  std::size_t sequences = 12;
  std::size_t competitions = 4;
  double fps = 30.0;
  std::size_t min_jumps = 3;
  std::size_t max_jumps = 5;
  double combination_probability = 0.15;
  double noise_mm = 10.0;
  std::uint64_t seed = 7;
};

struct SyntheticSequence {
  PoseSequence pose;
  SequenceAnnotation annotation;  // element level
};

SyntheticSequence generate_synthetic_sequence(const SyntheticConfig& config,
                                              std::mt19937_64& rng,
                                              const std::string& sequence_id,
                                              const std::string& competition_id);

// Sequence ids "seq000", ...; competitions "comp0", ... assigned round-robin.
std::vector<SyntheticSequence> generate_synthetic_corpus(
    const SyntheticConfig& config);

// 86-keypoint capture layout used by the synthetic data: keypoints 2j and
// 2j+1 straddle target joint j, the rest are distractor markers.
RigMapping synthetic_keypoint_mapping();
MocapRecording expand_to_keypoints(const PoseSequence& pose,
                                   std::uint64_t seed);

}  // namespace fsjump
