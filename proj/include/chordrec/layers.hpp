// Copyright 2026 The chordrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Forward and backward kernels for the layer types of the auditory model.
// Feature-map tensors are either a single item [C, H, W] or a batch
// [B, C, H, W]; the channel axis is always third from the end.
// Convolutions are cross-correlations (no kernel flip).

#include "chordrec/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chordrec {

enum class Padding { Same, Valid };
enum class Mode { Train, Infer };

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, Padding padding);

template <typename T>
struct Conv2dGrads {
    Tensor<T> input;    ///< empty when not requested
    Tensor<T> kernels;
};

/// Gradients of a scalar loss given dL/d(output).
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& kernels,
                               Padding padding, bool want_input_grad = true);

/// Adds one bias value per channel.
template <typename T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias);

/// Sum of the gradient over everything but the channel axis.
template <typename T>
Tensor<T> channel_sum(const Tensor<T>& grad);

template <typename T>
struct BatchNormRunning {
    Tensor<T> mean;
    Tensor<T> var;
};

template <typename T>
struct BatchNormCache {
    Tensor<T> normalized;    ///< (x - mean) / sqrt(var + eps)
    std::vector<T> inv_std;  ///< per channel
};

struct BatchNormSettings {
    double epsilon = 1e-5;
    /// running = momentum * running + (1 - momentum) * batch
    double momentum = 0.9;
};

/// Normalizes with per-channel batch statistics and updates `running`.
template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& offset,
                          BatchNormRunning<T>& running, BatchNormCache<T>* cache, BatchNormSettings settings = {});

/// Fixed per-channel affine map using the running statistics.
template <typename T>
Tensor<T> batchnorm_infer(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& offset,
                          const BatchNormRunning<T>& running, BatchNormSettings settings = {});

template <typename T>
struct BatchNormGrads {
    Tensor<T> input;
    Tensor<T> scale;
    Tensor<T> offset;
};

/// Backward pass of batchnorm_train.
template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale);

/// Backward pass of batchnorm_infer, where the statistics are constants.
template <typename T>
BatchNormGrads<T> batchnorm_infer_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& scale,
                                           const BatchNormRunning<T>& running, BatchNormSettings settings = {});

template <typename T>
Tensor<T> rectify(const Tensor<T>& x);

/// `output` is the forward result; the gradient passes where output > 0.
template <typename T>
Tensor<T> rectify_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

/// Non-overlapping max pooling; trailing rows/columns that do not fill a pool
/// are dropped. `argmax` (optional) receives the flat input index of each output.
template <typename T>
Tensor<T> maxpool(const Tensor<T>& x, std::size_t pool_h, std::size_t pool_w,
                  std::vector<std::size_t>* argmax = nullptr);

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape);

/// Mask of keep-factors: 0 for dropped units, 1/(1-p) for survivors.
template <typename T>
std::vector<T> dropout_mask(std::size_t size, double p, std::mt19937_64& rng);

/// Train mode multiplies by a freshly drawn mask (stored in `mask` if given);
/// infer mode returns the input unchanged.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, std::mt19937_64& rng, std::vector<T>* mask = nullptr);

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<T>& mask);

/// Mean over all spatial positions: [C,H,W] -> [C], [B,C,H,W] -> [B,C].
template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x);

template <typename T>
Tensor<T> global_average_pool_backward(const Tensor<T>& grad_out, const Shape& input_shape);

/// Softmax over the last axis, with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Jacobian-vector product of softmax given its output.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

constexpr double kLogFloor = 1e-12;

/// Mean categorical cross-entropy over the batch rows (log clamped at kLogFloor).
template <typename T>
double cross_entropy(const Tensor<T>& predictions, const Tensor<T>& targets);

/// Euclidean norm over all given tensors.
template <typename T>
double l2_norm(std::span<const Tensor<T>* const> params);

/// -(1/D) sum_i y_i . log(p_i) + l2 * ||theta||_2
template <typename T>
double cross_entropy_l2_loss(const Tensor<T>& predictions, const Tensor<T>& targets,
                             std::span<const Tensor<T>* const> params, double l2 = 1e-7);

/// d cross_entropy / d logits for softmax outputs: (p - y) / D.
template <typename T>
Tensor<T> cross_entropy_softmax_grad(const Tensor<T>& predictions, const Tensor<T>& targets);

/// Adds the gradient of l2 * ||theta||_2 (theta / ||theta||_2, zero at the origin).
template <typename T>
void add_l2_norm_gradient(std::span<const Tensor<T>* const> params, std::span<Tensor<T>* const> grads, double l2);

template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t num_classes);

}  // namespace chordrec
