// SPDX-License-Identifier: Apache-2.0
//
// MLP -> GRU -> linear classifier over keypoint frames.
//
//   m_t = relu(W1 x_t + b1)
//   z_t = sigmoid(Wz m_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr m_t + Ur h_{t-1} + br)
//   n_t = tanh(Wn m_t + Un (r_t * h_{t-1}) + bn)
//   h_t = (1 - z_t) * n_t + z_t * h_{t-1},   h_0 = 0
//   logits = Wo h_T + bo                      (T = last valid frame)
//
// All arithmetic is double precision. Batches are time-major and padded;
// padded steps leave the hidden state untouched so every sample's result is
// independent of what it was batched with.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace slr {

inline constexpr std::size_t kFrameWidth = 138;

struct Dims {
  std::size_t input = kFrameWidth;
  std::size_t mlp_hidden = 0;
  std::size_t gru_hidden = 0;
  std::size_t num_classes = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Throws Error(dimension) when any dimension is zero.
void validate(const Dims& dims);

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t size() const { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Canonical tensor order, shared by optimizer state and checkpoints.
inline constexpr std::array<std::string_view, 13> kTensorNames = {
    "W1", "b1", "Wz", "Wr", "Wn", "Uz", "Ur", "Un", "bz", "br", "bn", "Wo", "bo"};

/// Shapes of every tensor for the given dims, in kTensorNames order.
std::array<std::vector<std::size_t>, 13> tensor_shapes(const Dims& dims);

struct TensorBundle {
  Dims dims;
  Tensor w1, b1;
  Tensor wz, wr, wn;
  Tensor uz, ur, un;
  Tensor bz, br, bn;
  Tensor wo, bo;

  std::array<Tensor*, 13> tensors();
  std::array<const Tensor*, 13> tensors() const;

  /// Total number of scalars across all tensors.
  std::size_t parameter_count() const;

  friend bool operator==(const TensorBundle& a, const TensorBundle& b) {
    return a.dims == b.dims && a.tensors_equal(b);
  }

 protected:
  void allocate(const Dims& d);
  bool tensors_equal(const TensorBundle& other) const;
};

struct ModelParams : TensorBundle {
  /// Bumped by every optimizer step; forward caches record it.
  std::uint64_t revision = 0;

  /// All-zero parameters with shapes for `dims`.
  static ModelParams zeros(const Dims& dims);
};

struct Gradients : TensorBundle {
  static Gradients zeros_like(const ModelParams& params);
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Tensors are drawn in kTensorNames order from one generator.
ModelParams init_params(const Dims& dims, std::uint64_t seed);

/// Throws Error(non_finite) naming the first tensor with a NaN/Inf.
void check_finite(const TensorBundle& bundle);

std::vector<double> relu(std::span<const double> v);
std::vector<double> softmax(std::span<const double> logits);

/// Time-major padded batch: frames[(t * batch + b) * width + i].
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t max_length = 0;
  std::size_t width = 0;
  std::vector<std::size_t> lengths;
  std::vector<double> frames;
};

/// Packs row-major (length x width) sequences into a zero-padded batch.
SequenceBatch make_batch(std::span<const std::span<const double>> sequences,
                         std::span<const std::size_t> lengths,
                         std::size_t width);

/// Everything backward() needs; also exposes the forward outputs.
struct ForwardCache {
  Dims dims;
  const ModelParams* params = nullptr;
  std::uint64_t revision = 0;

  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> lengths;
  std::vector<double> input;       // steps*batch x input
  std::vector<double> mlp_pre;     // steps*batch x mlp
  std::vector<double> mlp_out;     // steps*batch x mlp
  std::vector<double> update;      // steps*batch x gru
  std::vector<double> reset;       // steps*batch x gru
  std::vector<double> candidate;   // steps*batch x gru
  std::vector<double> gated_prev;  // steps*batch x gru, r_t * h_{t-1}
  std::vector<double> hidden;      // (steps+1)*batch x gru, row block 0 is h_0
  std::vector<double> logits;      // batch x classes
  std::vector<double> probs;       // batch x classes

  std::span<const double> logits_row(std::size_t b) const;
  std::span<const double> probs_row(std::size_t b) const;
  std::span<const double> hidden_row(std::size_t t, std::size_t b) const;
};

ForwardCache forward_batch(const ModelParams& params, const SequenceBatch& batch);

/// Single sequence (row-major valid_length x input).
ForwardCache forward(const ModelParams& params, std::span<const double> frames,
                     std::size_t valid_length);

/// Mean over rows of -log(max(p_true, 1e-12)); targets are one-hot rows.
double cross_entropy_loss(std::span<const double> probs,
                          std::span<const double> one_hot, std::size_t classes);

/// Same loss with class indices instead of one-hot rows.
double cross_entropy_loss(const ForwardCache& cache,
                          std::span<const std::size_t> targets);

/// Gradient of the batch-mean cross-entropy with respect to every tensor.
Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   std::span<const std::size_t> targets);

struct AdamState {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState for_params(const ModelParams& params, double learning_rate = 1e-5);
};

/// Bias-corrected Adam: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state);

}  // namespace slr
