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

#include "chordrec/layers.hpp"
#include "chordrec/tensor.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chordrec {

enum class LayerKind { Conv, BatchNorm, Rectify, MaxPool, Dropout, AvgPool, Softmax };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

/// Declarative description of one layer. Only the fields relevant to `kind` are used.
struct LayerSpec {
    LayerKind kind = LayerKind::Rectify;
    std::string name;
    // conv
    std::size_t channels = 0;
    std::size_t kernel_h = 0, kernel_w = 0;
    Padding padding = Padding::Valid;
    bool bias = false;
    // maxpool
    std::size_t pool_h = 1, pool_w = 1;
    // dropout
    double dropout_p = 0.5;

    static LayerSpec conv(std::string name, std::size_t channels, std::size_t kh, std::size_t kw, Padding padding,
                          bool bias = false);
    static LayerSpec batchnorm(std::string name);
    static LayerSpec rectify(std::string name);
    static LayerSpec maxpool(std::string name, std::size_t ph, std::size_t pw);
    static LayerSpec dropout(std::string name, double p = 0.5);
    static LayerSpec avgpool(std::string name);
    static LayerSpec softmax(std::string name);

    bool operator==(const LayerSpec&) const = default;
};

/// A trainable tensor with its gradient buffer.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;
};

template <typename T>
using NamedTensors = std::map<std::string, Tensor<T>>;

struct ShapeTraceEntry {
    std::string layer;
    LayerKind kind;
    Shape output;  ///< per item, without batch axis
};

template <typename T>
class Layer;

/// Sequential stack of layers over batched [B, C, H, W] inputs.
///
/// forward() caches what backward() needs; infer() is const and caches nothing,
/// so a trained network can be shared between threads for inference.
template <typename T>
class Network {
public:
    Network(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed);
    ~Network();
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;

    const Shape& input_shape() const { return input_shape_; }
    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::size_t num_layers() const { return specs_.size(); }
    std::size_t layer_index(const std::string& name) const;

    /// Runs layers [0, end) (all layers by default), caching activations.
    Tensor<T> forward(const Tensor<T>& batch, Mode mode, std::size_t end = SIZE_MAX);

    /// Runs layers [0, end) in inference mode without caching.
    Tensor<T> infer(const Tensor<T>& batch, std::size_t end = SIZE_MAX) const;

    /// Runs layers [begin, end) in inference mode on an intermediate activation.
    Tensor<T> infer_range(const Tensor<T>& activation, std::size_t begin, std::size_t end) const;

    /// Backpropagates `grad` (dL/d output of layer end-1) through layers
    /// [0, end), accumulating parameter gradients. Returns dL/d input, or an
    /// empty tensor when `input_grad` is false.
    Tensor<T> backward(const Tensor<T>& grad, std::size_t end, bool input_grad = true);

    void zero_grad();
    std::vector<ParamRef<T>> parameters();
    std::size_t trainable_parameter_count() const;

    /// When set, dropout layers reuse the mask of the previous forward pass.
    void hold_dropout_masks(bool hold);

    /// Trainable tensors plus batch-norm running statistics, keyed "<layer>.<tensor>".
    NamedTensors<T> state() const;
    void load_state(const NamedTensors<T>& state);

    Tensor<T>& tensor(const std::string& key);
    const Tensor<T>& tensor(const std::string& key) const;

    std::vector<ShapeTraceEntry> shape_trace() const;

private:
    Shape input_shape_;
    std::vector<LayerSpec> specs_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::mt19937_64 rng_;
};

/// Build-time helper: output shape (per item) of a layer given its input shape.
Shape layer_output_shape(const LayerSpec& spec, const Shape& input);

}  // namespace chordrec
