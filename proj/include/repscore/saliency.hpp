#pragma once

#include <filesystem>
#include <string>

#include "repscore/encoder.hpp"
#include "repscore/eval.hpp"

namespace repscore {

struct SaliencyMap {
  Vector values;  // |gradient| scaled to max 1, or all zeros
  Eigen::Index feature_index = 0;
  std::string sample_id;
};

/// d h_k / d x at the sample, with ReLU gates fixed at the evaluation point.
Vector feature_gradient(const EncoderParams& p, const Eigen::Ref<const Vector>& sample, Eigen::Index k);

SaliencyMap normalize_saliency(const Eigen::Ref<const Vector>& raw);

/// Argmax by magnitude of the class's correct-subset mean; lowest index wins ties.
Eigen::Index dominant_feature_index(const Eigen::Ref<const Vector>& profile);
Eigen::Index dominant_feature_index(const ClassProfile& profile);

// 8-bit binary PGM of a square map, pixel = round(255 * v). Throws
// ShapeMismatch when the length is not a perfect square.
void write_saliency_pgm(const SaliencyMap& map, const std::filesystem::path& path);
void write_saliency_csv(const SaliencyMap& map, const std::filesystem::path& path);

// "saliency_s<sample>_f<feature>"
std::string saliency_stem(const SaliencyMap& map);

}  // namespace repscore
