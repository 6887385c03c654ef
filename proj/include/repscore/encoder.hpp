#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "repscore/loss.hpp"
#include "repscore/repstore.hpp"

namespace repscore {

/// Fully connected layer computing x W^T + b for row-major batches.
struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  Eigen::Index in() const noexcept { return weight.cols(); }
  Eigen::Index out() const noexcept { return weight.rows(); }

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.weight == b.weight && a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

struct EncoderShape {
  int input = 64;           // r
  int hidden = 128;         // encoder hidden width; 0 for a single layer
  int representation = 32;  // l
  int head_hidden = 32;     // projection head hidden width; 0 for a linear head
  int projection = 16;      // m

  void validate() const;
  friend bool operator==(const EncoderShape&, const EncoderShape&) = default;
};

/// Base encoder f (every layer followed by ReLU, so representations are
/// non-negative) and projection head g (ReLU between layers, linear output).
struct EncoderParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> head;
  std::uint64_t seed = 0;

  Eigen::Index input_size() const { return encoder.front().in(); }
  Eigen::Index representation_size() const { return encoder.back().out(); }
  Eigen::Index projection_size() const { return head.back().out(); }
  Eigen::Index parameter_count() const;

  // Layer shapes compose and every value is finite.
  void validate() const;

  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    return a.encoder == b.encoder && a.head == b.head && a.seed == b.seed;
  }
};

/// He-normal weights, zero biases; deterministic in seed.
EncoderParams init_encoder(const EncoderShape& shape, std::uint64_t seed);

// Same layer shapes, all zeros.
EncoderParams zeros_like(const EncoderParams& p);

// Parameters in a fixed order: encoder layers then head layers, each as
// weight (column-major) followed by bias.
Vector flatten(const EncoderParams& p);
void unflatten(const Eigen::Ref<const Vector>& flat, EncoderParams& p);

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer, encoder then head
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix h;                    // representations
  Matrix z;                    // projections
};

ForwardCache forward(const EncoderParams& p, const Eigen::Ref<const Matrix>& x);

struct Encoded {
  Matrix h;
  Matrix z;
};

/// Representations and projections for a batch of inputs (rows).
Encoded encode(const EncoderParams& p, const Eigen::Ref<const Matrix>& x);

/// Backpropagates dz (w.r.t. projections) plus dh (direct gradient w.r.t.
/// representations) into parameter gradients.
EncoderParams backward(const EncoderParams& p, const ForwardCache& cache,
                       const Eigen::Ref<const Matrix>& dz, const Eigen::Ref<const Matrix>& dh);

/// d(h . dh)/dx for a single input row, ReLU gates taken at the input.
Vector input_gradient(const EncoderParams& p, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& dh);

struct ViewBatch {
  Matrix view1;  // B x r
  Matrix view2;  // B x r
};

struct LossGradientResult {
  LossBreakdown breakdown;
  EncoderParams grads;
};

/// Forward both views, evaluate total_loss and backpropagate. Threshold masks
/// are constants of the step (frozen masks may be supplied). Throws
/// NonFiniteGradient when any gradient entry is not finite.
LossGradientResult loss_gradients(const EncoderParams& p, const ViewBatch& batch,
                                  const LossConfig& cfg, double norm_scale = 1.0,
                                  const FrozenMasks* frozen = nullptr, unsigned terms = kAllTerms);

// Writes params.json plus one .repb file per weight and bias.
void save_params(const EncoderParams& p, const std::filesystem::path& dir);
EncoderParams load_params(const std::filesystem::path& dir);

}  // namespace repscore
