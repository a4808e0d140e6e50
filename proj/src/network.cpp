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


#include "chordrec/network.hpp"

#include "chordrec/errors.hpp"

#include <cmath>
#include <numeric>

namespace chordrec {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Rectify: return "rectify";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::AvgPool: return "avgpool";
        case LayerKind::Softmax: return "softmax";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (auto k : {LayerKind::Conv, LayerKind::BatchNorm, LayerKind::Rectify, LayerKind::MaxPool, LayerKind::Dropout,
                   LayerKind::AvgPool, LayerKind::Softmax})
        if (to_string(k) == s) return k;
    throw DataError("unknown layer kind '" + s + "'");
}

LayerSpec LayerSpec::conv(std::string name, std::size_t channels, std::size_t kh, std::size_t kw, Padding padding,
                          bool bias) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.name = std::move(name);
    s.channels = channels;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.padding = padding;
    s.bias = bias;
    return s;
}

LayerSpec LayerSpec::batchnorm(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::BatchNorm;
    s.name = std::move(name);
    return s;
}

LayerSpec LayerSpec::rectify(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::Rectify;
    s.name = std::move(name);
    return s;
}

LayerSpec LayerSpec::maxpool(std::string name, std::size_t ph, std::size_t pw) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.name = std::move(name);
    s.pool_h = ph;
    s.pool_w = pw;
    return s;
}

LayerSpec LayerSpec::dropout(std::string name, double p) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.name = std::move(name);
    s.dropout_p = p;
    return s;
}

LayerSpec LayerSpec::avgpool(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::AvgPool;
    s.name = std::move(name);
    return s;
}

LayerSpec LayerSpec::softmax(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::Softmax;
    s.name = std::move(name);
    return s;
}

Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
    switch (spec.kind) {
        case LayerKind::Conv: {
            if (in.size() != 3) throw DataError(spec.name + ": conv expects a [C,H,W] input");
            std::size_t h = in[1], w = in[2];
            if (spec.padding == Padding::Valid) {
                if (spec.kernel_h > h || spec.kernel_w > w) throw DataError(spec.name + ": kernel larger than input");
                h = h - spec.kernel_h + 1;
                w = w - spec.kernel_w + 1;
            }
            return {spec.channels, h, w};
        }
        case LayerKind::MaxPool:
            if (in.size() != 3) throw DataError(spec.name + ": maxpool expects a [C,H,W] input");
            return {in[0], in[1] / spec.pool_h, in[2] / spec.pool_w};
        case LayerKind::AvgPool:
            if (in.size() != 3) throw DataError(spec.name + ": avgpool expects a [C,H,W] input");
            return {in[0]};
        default:
            return in;
    }
}

// ---------------------------------------------------------------------------

template <typename T>
class Layer {
public:
    explicit Layer(LayerSpec s) : spec(std::move(s)) {}
    virtual ~Layer() = default;

    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64& rng) = 0;
    virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
    virtual Tensor<T> backward(const Tensor<T>& g, bool input_grad) = 0;

    virtual std::vector<ParamRef<T>> params() { return {}; }
    /// All persistent tensors (trainable and running statistics).
    virtual std::vector<std::pair<std::string, Tensor<T>*>> state() { return {}; }
    virtual void zero_grad() {}
    virtual void hold_mask(bool) {}

    LayerSpec spec;
};

namespace {

template <typename T>
class ConvLayer final : public Layer<T> {
public:
    ConvLayer(LayerSpec s, std::size_t in_channels, std::mt19937_64& rng) : Layer<T>(std::move(s)) {
        const auto& sp = this->spec;
        kernels_ = Tensor<T>(Shape{sp.channels, in_channels, sp.kernel_h, sp.kernel_w});
        grad_kernels_ = Tensor<T>(kernels_.shape());
        const double fan_in = static_cast<double>(in_channels * sp.kernel_h * sp.kernel_w);
        const double fan_out = static_cast<double>(sp.channels * sp.kernel_h * sp.kernel_w);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : kernels_.values()) v = static_cast<T>(dist(rng));
        if (sp.bias) {
            bias_ = Tensor<T>(Shape{sp.channels});
            grad_bias_ = Tensor<T>(Shape{sp.channels});
        }
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvLayer>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode, std::mt19937_64&) override {
        input_ = x;
        return infer(x);
    }

    Tensor<T> infer(const Tensor<T>& x) const override {
        Tensor<T> y = conv2d(x, kernels_, this->spec.padding);
        if (this->spec.bias) add_channel_bias(y, bias_);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g, bool input_grad) override {
        auto grads = conv2d_backward(g, input_, kernels_, this->spec.padding, input_grad);
        for (std::size_t i = 0; i < kernels_.size(); ++i) grad_kernels_[i] += grads.kernels[i];
        if (this->spec.bias) {
            auto gb = channel_sum(g);
            for (std::size_t i = 0; i < gb.size(); ++i) grad_bias_[i] += gb[i];
        }
        return std::move(grads.input);
    }

    std::vector<ParamRef<T>> params() override {
        std::vector<ParamRef<T>> p{{this->spec.name + ".kernels", &kernels_, &grad_kernels_}};
        if (this->spec.bias) p.push_back({this->spec.name + ".bias", &bias_, &grad_bias_});
        return p;
    }

    std::vector<std::pair<std::string, Tensor<T>*>> state() override {
        std::vector<std::pair<std::string, Tensor<T>*>> s{{this->spec.name + ".kernels", &kernels_}};
        if (this->spec.bias) s.emplace_back(this->spec.name + ".bias", &bias_);
        return s;
    }

    void zero_grad() override {
        grad_kernels_.fill(T{0});
        if (this->spec.bias) grad_bias_.fill(T{0});
    }

private:
    Tensor<T> kernels_, grad_kernels_, bias_, grad_bias_;
    Tensor<T> input_;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
public:
    BatchNormLayer(LayerSpec s, std::size_t channels) : Layer<T>(std::move(s)) {
        scale_ = Tensor<T>(Shape{channels}, T{1});
        offset_ = Tensor<T>(Shape{channels}, T{0});
        grad_scale_ = Tensor<T>(Shape{channels});
        grad_offset_ = Tensor<T>(Shape{channels});
        running_.mean = Tensor<T>(Shape{channels}, T{0});
        running_.var = Tensor<T>(Shape{channels}, T{1});
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64&) override {
        last_mode_ = mode;
        if (mode == Mode::Train) return batchnorm_train(x, scale_, offset_, running_, &cache_);
        input_ = x;
        return infer(x);
    }

    Tensor<T> infer(const Tensor<T>& x) const override { return batchnorm_infer(x, scale_, offset_, running_); }

    Tensor<T> backward(const Tensor<T>& g, bool) override {
        auto grads = last_mode_ == Mode::Train ? batchnorm_backward(g, cache_, scale_)
                                               : batchnorm_infer_backward(g, input_, scale_, running_);
        for (std::size_t i = 0; i < scale_.size(); ++i) {
            grad_scale_[i] += grads.scale[i];
            grad_offset_[i] += grads.offset[i];
        }
        return std::move(grads.input);
    }

    std::vector<ParamRef<T>> params() override {
        return {{this->spec.name + ".scale", &scale_, &grad_scale_},
                {this->spec.name + ".offset", &offset_, &grad_offset_}};
    }

    std::vector<std::pair<std::string, Tensor<T>*>> state() override {
        return {{this->spec.name + ".scale", &scale_},
                {this->spec.name + ".offset", &offset_},
                {this->spec.name + ".running_mean", &running_.mean},
                {this->spec.name + ".running_var", &running_.var}};
    }

    void zero_grad() override {
        grad_scale_.fill(T{0});
        grad_offset_.fill(T{0});
    }

private:
    Tensor<T> scale_, offset_, grad_scale_, grad_offset_;
    BatchNormRunning<T> running_;
    BatchNormCache<T> cache_;
    Tensor<T> input_;
    Mode last_mode_ = Mode::Infer;
};

template <typename T>
class RectifyLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<RectifyLayer>(*this); }
    Tensor<T> forward(const Tensor<T>& x, Mode, std::mt19937_64&) override {
        output_ = rectify(x);
        return output_;
    }
    Tensor<T> infer(const Tensor<T>& x) const override { return rectify(x); }
    Tensor<T> backward(const Tensor<T>& g, bool) override { return rectify_backward(g, output_); }

private:
    Tensor<T> output_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPoolLayer>(*this); }
    Tensor<T> forward(const Tensor<T>& x, Mode, std::mt19937_64&) override {
        input_shape_ = x.shape();
        return maxpool(x, this->spec.pool_h, this->spec.pool_w, &argmax_);
    }
    Tensor<T> infer(const Tensor<T>& x) const override { return maxpool(x, this->spec.pool_h, this->spec.pool_w); }
    Tensor<T> backward(const Tensor<T>& g, bool) override { return maxpool_backward(g, argmax_, input_shape_); }

private:
    std::vector<std::size_t> argmax_;
    Shape input_shape_;
};

template <typename T>
class DropoutLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DropoutLayer>(*this); }
    Tensor<T> forward(const Tensor<T>& x, Mode mode, std::mt19937_64& rng) override {
        if (mode == Mode::Infer) {
            mask_.assign(x.size(), T{1});
            return x;
        }
        if (!(hold_ && mask_.size() == x.size())) mask_ = dropout_mask<T>(x.size(), this->spec.dropout_p, rng);
        return apply_mask(x, mask_);
    }
    Tensor<T> infer(const Tensor<T>& x) const override { return x; }
    Tensor<T> backward(const Tensor<T>& g, bool) override { return apply_mask(g, mask_); }
    void hold_mask(bool hold) override { hold_ = hold; }

private:
    std::vector<T> mask_;
    bool hold_ = false;
};

template <typename T>
class AvgPoolLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<AvgPoolLayer>(*this); }
    Tensor<T> forward(const Tensor<T>& x, Mode, std::mt19937_64&) override {
        input_shape_ = x.shape();
        return global_average_pool(x);
    }
    Tensor<T> infer(const Tensor<T>& x) const override { return global_average_pool(x); }
    Tensor<T> backward(const Tensor<T>& g, bool) override { return global_average_pool_backward(g, input_shape_); }

private:
    Shape input_shape_;
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
public:
    using Layer<T>::Layer;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }
    Tensor<T> forward(const Tensor<T>& x, Mode, std::mt19937_64&) override {
        output_ = softmax(x);
        return output_;
    }
    Tensor<T> infer(const Tensor<T>& x) const override { return softmax(x); }
    Tensor<T> backward(const Tensor<T>& g, bool) override { return softmax_backward(g, output_); }

private:
    Tensor<T> output_;
};

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), specs_(std::move(specs)), rng_(seed) {
    if (input_shape_.size() != 3) throw DataError("network input shape must be [C,H,W]");
    Shape shape = input_shape_;
    for (const auto& spec : specs_) {
        switch (spec.kind) {
            case LayerKind::Conv: layers_.push_back(std::make_unique<ConvLayer<T>>(spec, shape.at(0), rng_)); break;
            case LayerKind::BatchNorm: layers_.push_back(std::make_unique<BatchNormLayer<T>>(spec, shape.at(0))); break;
            case LayerKind::Rectify: layers_.push_back(std::make_unique<RectifyLayer<T>>(spec)); break;
            case LayerKind::MaxPool: layers_.push_back(std::make_unique<MaxPoolLayer<T>>(spec)); break;
            case LayerKind::Dropout: layers_.push_back(std::make_unique<DropoutLayer<T>>(spec)); break;
            case LayerKind::AvgPool: layers_.push_back(std::make_unique<AvgPoolLayer<T>>(spec)); break;
            case LayerKind::Softmax: layers_.push_back(std::make_unique<SoftmaxLayer<T>>(spec)); break;
        }
        shape = layer_output_shape(spec, shape);
    }
}

template <typename T>
Network<T>::~Network() = default;

template <typename T>
Network<T>::Network(const Network& other)
    : input_shape_(other.input_shape_), specs_(other.specs_), rng_(other.rng_) {
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

template <typename T>
Network<T>::Network(Network&&) noexcept = default;

template <typename T>
Network<T>& Network<T>::operator=(Network&&) noexcept = default;

template <typename T>
std::size_t Network<T>::layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i;
    throw DataError("no layer named '" + name + "'");
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode, std::size_t end) {
    end = std::min(end, layers_.size());
    if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != input_shape_)
        throw DataError("network expects input [B," + shape_string(input_shape_) + "], got " +
                        shape_string(batch.shape()));
    Tensor<T> x = batch;
    for (std::size_t i = 0; i < end; ++i) x = layers_[i]->forward(x, mode, rng_);
    return x;
}

template <typename T>
Tensor<T> Network<T>::infer(const Tensor<T>& batch, std::size_t end) const {
    if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != input_shape_)
        throw DataError("network expects input [B," + shape_string(input_shape_) + "], got " +
                        shape_string(batch.shape()));
    return infer_range(batch, 0, end);
}

template <typename T>
Tensor<T> Network<T>::infer_range(const Tensor<T>& activation, std::size_t begin, std::size_t end) const {
    end = std::min(end, layers_.size());
    Tensor<T> x = activation;
    for (std::size_t i = begin; i < end; ++i) x = layers_[i]->infer(x);
    return x;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad, std::size_t end, bool input_grad) {
    end = std::min(end, layers_.size());
    Tensor<T> g = grad;
    for (std::size_t i = end; i-- > 0;) g = layers_[i]->backward(g, input_grad || i > 0);
    return g;
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto& l : layers_) l->zero_grad();
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
    std::vector<ParamRef<T>> out;
    for (auto& l : layers_) {
        auto p = l->params();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

template <typename T>
std::size_t Network<T>::trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_)
        for (const auto& p : l->params()) n += p.value->size();
    return n;
}

template <typename T>
void Network<T>::hold_dropout_masks(bool hold) {
    for (auto& l : layers_) l->hold_mask(hold);
}

template <typename T>
NamedTensors<T> Network<T>::state() const {
    NamedTensors<T> out;
    for (const auto& l : layers_)
        for (auto& [name, t] : l->state()) out.emplace(name, *t);
    return out;
}

template <typename T>
void Network<T>::load_state(const NamedTensors<T>& state) {
    for (auto& l : layers_) {
        for (auto& [name, t] : l->state()) {
            auto it = state.find(name);
            if (it == state.end()) throw DataError("missing tensor '" + name + "' in network state");
            if (it->second.shape() != t->shape())
                throw DataError("tensor '" + name + "' has shape " + shape_string(it->second.shape()) + ", expected " +
                                shape_string(t->shape()));
            *t = it->second;
        }
    }
}

template <typename T>
Tensor<T>& Network<T>::tensor(const std::string& key) {
    for (auto& l : layers_)
        for (auto& [name, t] : l->state())
            if (name == key) return *t;
    throw DataError("no tensor named '" + key + "'");
}

template <typename T>
const Tensor<T>& Network<T>::tensor(const std::string& key) const {
    return const_cast<Network*>(this)->tensor(key);
}

template <typename T>
std::vector<ShapeTraceEntry> Network<T>::shape_trace() const {
    std::vector<ShapeTraceEntry> trace;
    Shape shape = input_shape_;
    for (const auto& spec : specs_) {
        shape = layer_output_shape(spec, shape);
        trace.push_back({spec.name, spec.kind, shape});
    }
    return trace;
}

template class Network<float>;
template class Network<double>;

}  // namespace chordrec
