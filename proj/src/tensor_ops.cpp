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


#include "chordrec/errors.hpp"
#include "chordrec/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace chordrec {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
    std::size_t batch = 1;
    bool batched = false;
    std::size_t c_in = 0, h = 0, w = 0;
    std::size_t c_out = 0, kh = 0, kw = 0;
    std::size_t pad_top = 0, pad_left = 0;
    std::size_t out_h = 0, out_w = 0;

    std::size_t patch() const { return c_in * kh * kw; }
    std::size_t out_positions() const { return out_h * out_w; }
    std::size_t in_item() const { return c_in * h * w; }
    std::size_t out_item() const { return c_out * out_h * out_w; }
    Shape out_shape() const {
        return batched ? Shape{batch, c_out, out_h, out_w} : Shape{c_out, out_h, out_w};
    }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& k, Padding padding) {
    if (in.size() != 3 && in.size() != 4) throw DataError("conv2d: input must be [C,H,W] or [B,C,H,W]");
    if (k.size() != 4) throw DataError("conv2d: kernels must be [C_out,C_in,KH,KW]");
    ConvGeometry g;
    g.batched = in.size() == 4;
    const std::size_t off = g.batched ? 1 : 0;
    g.batch = g.batched ? in[0] : 1;
    g.c_in = in[off];
    g.h = in[off + 1];
    g.w = in[off + 2];
    g.c_out = k[0];
    g.kh = k[2];
    g.kw = k[3];
    if (k[1] != g.c_in) {
        throw DataError("conv2d: channel mismatch (input " + std::to_string(g.c_in) + ", kernels " +
                        std::to_string(k[1]) + ")");
    }
    std::size_t ph = 0, pw = 0;
    if (padding == Padding::Same) {
        ph = g.kh - 1;
        pw = g.kw - 1;
        g.pad_top = ph / 2;
        g.pad_left = pw / 2;
    }
    if (g.kh > g.h + ph || g.kw > g.w + pw) throw DataError("conv2d: kernel larger than padded input");
    g.out_h = g.h + ph - g.kh + 1;
    g.out_w = g.w + pw - g.kw + 1;
    return g;
}

// Output columns [lo, hi) of kernel column j read inside the input row.
inline void valid_range(const ConvGeometry& g, std::size_t j, std::size_t& lo, std::size_t& hi) {
    const auto shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
    lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -shift));
    hi = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.w) - shift, 0, static_cast<std::ptrdiff_t>(g.out_w)));
    if (hi < lo) hi = lo;
}

template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* cols) {
    const std::size_t positions = g.out_positions();
    for (std::size_t c = 0; c < g.c_in; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                T* row = cols + ((c * g.kh + i) * g.kw + j) * positions;
                std::size_t lo = 0, hi = 0;
                valid_range(g, j, lo, hi);
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy + i) - static_cast<std::ptrdiff_t>(g.pad_top);
                    T* dst = row + oy * g.out_w;
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) {
                        std::fill(dst, dst + g.out_w, T{0});
                        continue;
                    }
                    const T* src = in + (c * g.h + static_cast<std::size_t>(y)) * g.w;
                    std::fill(dst, dst + lo, T{0});
                    std::copy(src + static_cast<std::ptrdiff_t>(lo) + shift, src + static_cast<std::ptrdiff_t>(hi) + shift,
                              dst + lo);
                    std::fill(dst + hi, dst + g.out_w, T{0});
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* grad_in) {
    const std::size_t positions = g.out_positions();
    for (std::size_t c = 0; c < g.c_in; ++c) {
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                const T* row = cols + ((c * g.kh + i) * g.kw + j) * positions;
                std::size_t lo = 0, hi = 0;
                valid_range(g, j, lo, hi);
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy + i) - static_cast<std::ptrdiff_t>(g.pad_top);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    T* dst = grad_in + (c * g.h + static_cast<std::size_t>(y)) * g.w + shift;
                    const T* src = row + oy * g.out_w;
                    for (std::size_t ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
                }
            }
        }
    }
}

struct ChannelLayout {
    std::size_t outer = 1;     // batch items
    std::size_t channels = 0;
    std::size_t inner = 1;     // spatial positions
};

ChannelLayout channel_layout(const Shape& s) {
    if (s.size() < 1) throw DataError("tensor needs a channel axis");
    ChannelLayout l;
    if (s.size() >= 3) {
        const std::size_t ch = s.size() - 3;
        for (std::size_t i = 0; i < ch; ++i) l.outer *= s[i];
        l.channels = s[ch];
        l.inner = s[ch + 1] * s[ch + 2];
    } else {
        // [B, C] or [C]: positions collapse to one
        for (std::size_t i = 0; i + 1 < s.size(); ++i) l.outer *= s[i];
        l.channels = s.back();
    }
    return l;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, Padding padding) {
    const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), padding);
    Tensor<T> out(g.out_shape());
    RowMat<T> cols(g.patch(), g.out_positions());
    ConstMapMat<T> k(kernels.data(), g.c_out, g.patch());
    for (std::size_t b = 0; b < g.batch; ++b) {
        im2col(input.data() + b * g.in_item(), g, cols.data());
        MapMat<T> o(out.data() + b * g.out_item(), g.c_out, g.out_positions());
        o.noalias() = k * cols;
    }
    return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input, const Tensor<T>& kernels,
                               Padding padding, bool want_input_grad) {
    const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), padding);
    if (grad_out.shape() != g.out_shape())
        throw DataError("conv2d_backward: gradient shape " + shape_string(grad_out.shape()) + " != " +
                        shape_string(g.out_shape()));
    Conv2dGrads<T> grads;
    grads.kernels = Tensor<T>(kernels.shape());
    if (want_input_grad) grads.input = Tensor<T>(input.shape());

    RowMat<T> cols(g.patch(), g.out_positions());
    RowMat<T> grad_cols;
    ConstMapMat<T> k(kernels.data(), g.c_out, g.patch());
    MapMat<T> gk(grads.kernels.data(), g.c_out, g.patch());
    for (std::size_t b = 0; b < g.batch; ++b) {
        ConstMapMat<T> go(grad_out.data() + b * g.out_item(), g.c_out, g.out_positions());
        im2col(input.data() + b * g.in_item(), g, cols.data());
        gk.noalias() += go * cols.transpose();
        if (want_input_grad) {
            grad_cols.noalias() = k.transpose() * go;
            col2im_add(grad_cols.data(), g, grads.input.data() + b * g.in_item());
        }
    }
    return grads;
}

template <typename T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias) {
    const ChannelLayout l = channel_layout(x.shape());
    if (bias.size() != l.channels) throw DataError("bias size does not match channel count");
    T* p = x.data();
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c)
            for (std::size_t i = 0; i < l.inner; ++i) *p++ += bias[c];
}

template <typename T>
Tensor<T> channel_sum(const Tensor<T>& grad) {
    const ChannelLayout l = channel_layout(grad.shape());
    Tensor<T> out(Shape{l.channels});
    const T* p = grad.data();
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c)
            for (std::size_t i = 0; i < l.inner; ++i) out[c] += *p++;
    return out;
}

template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& offset,
                          BatchNormRunning<T>& running, BatchNormCache<T>* cache, BatchNormSettings settings) {
    const ChannelLayout l = channel_layout(x.shape());
    if (scale.size() != l.channels || offset.size() != l.channels)
        throw DataError("batchnorm: one scale/offset pair per feature map required");
    const double n = static_cast<double>(l.outer * l.inner);

    std::vector<double> mean(l.channels, 0.0), var(l.channels, 0.0);
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const T* p = x.data() + (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) mean[c] += p[i];
        }
    for (auto& m : mean) m /= n;
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const T* p = x.data() + (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) {
                const double d = p[i] - mean[c];
                var[c] += d * d;
            }
        }
    for (auto& v : var) v /= n;

    std::vector<T> inv_std(l.channels);
    for (std::size_t c = 0; c < l.channels; ++c)
        inv_std[c] = static_cast<T>(1.0 / std::sqrt(var[c] + settings.epsilon));

    Tensor<T> normalized(x.shape());
    Tensor<T> out(x.shape());
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const std::size_t base = (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) {
                const T xh = static_cast<T>((x[base + i] - mean[c]) * inv_std[c]);
                normalized[base + i] = xh;
                out[base + i] = scale[c] * xh + offset[c];
            }
        }

    if (running.mean.size() != l.channels) running.mean = Tensor<T>(Shape{l.channels}, T{0});
    if (running.var.size() != l.channels) running.var = Tensor<T>(Shape{l.channels}, T{1});
    const double m = settings.momentum;
    for (std::size_t c = 0; c < l.channels; ++c) {
        running.mean[c] = static_cast<T>(m * running.mean[c] + (1.0 - m) * mean[c]);
        running.var[c] = static_cast<T>(m * running.var[c] + (1.0 - m) * var[c]);
    }

    if (cache) {
        cache->normalized = std::move(normalized);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

template <typename T>
Tensor<T> batchnorm_infer(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& offset,
                          const BatchNormRunning<T>& running, BatchNormSettings settings) {
    const ChannelLayout l = channel_layout(x.shape());
    if (scale.size() != l.channels || offset.size() != l.channels || running.mean.size() != l.channels ||
        running.var.size() != l.channels)
        throw DataError("batchnorm: one scale/offset/statistics entry per feature map required");
    std::vector<T> a(l.channels), b(l.channels);
    for (std::size_t c = 0; c < l.channels; ++c) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running.var[c]) + settings.epsilon);
        a[c] = static_cast<T>(scale[c] * inv);
        b[c] = static_cast<T>(offset[c] - scale[c] * running.mean[c] * inv);
    }
    Tensor<T> out(x.shape());
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const std::size_t base = (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) out[base + i] = a[c] * x[base + i] + b[c];
        }
    return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale) {
    const ChannelLayout l = channel_layout(grad_out.shape());
    if (cache.normalized.shape() != grad_out.shape()) throw DataError("batchnorm_backward: shape mismatch");
    const double n = static_cast<double>(l.outer * l.inner);
    BatchNormGrads<T> g;
    g.scale = Tensor<T>(Shape{l.channels});
    g.offset = Tensor<T>(Shape{l.channels});
    g.input = Tensor<T>(grad_out.shape());

    std::vector<double> sum_g(l.channels, 0.0), sum_gx(l.channels, 0.0);
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const std::size_t base = (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) {
                sum_g[c] += grad_out[base + i];
                sum_gx[c] += static_cast<double>(grad_out[base + i]) * cache.normalized[base + i];
            }
        }
    for (std::size_t c = 0; c < l.channels; ++c) {
        g.offset[c] = static_cast<T>(sum_g[c]);
        g.scale[c] = static_cast<T>(sum_gx[c]);
    }
    for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t c = 0; c < l.channels; ++c) {
            const std::size_t base = (o * l.channels + c) * l.inner;
            const double k = static_cast<double>(scale[c]) * cache.inv_std[c] / n;
            for (std::size_t i = 0; i < l.inner; ++i) {
                const double v = n * grad_out[base + i] - sum_g[c] - cache.normalized[base + i] * sum_gx[c];
                g.input[base + i] = static_cast<T>(k * v);
            }
        }
    return g;
}

template <typename T>
BatchNormGrads<T> batchnorm_infer_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& scale,
                                           const BatchNormRunning<T>& running, BatchNormSettings settings) {
    const ChannelLayout l = channel_layout(grad_out.shape());
    BatchNormGrads<T> g;
    g.scale = Tensor<T>(Shape{l.channels});
    g.offset = Tensor<T>(Shape{l.channels});
    g.input = Tensor<T>(grad_out.shape());
    for (std::size_t c = 0; c < l.channels; ++c) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running.var[c]) + settings.epsilon);
        for (std::size_t o = 0; o < l.outer; ++o) {
            const std::size_t base = (o * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) {
                const double go = grad_out[base + i];
                g.offset[c] += static_cast<T>(go);
                g.scale[c] += static_cast<T>(go * (x[base + i] - running.mean[c]) * inv);
                g.input[base + i] = static_cast<T>(go * scale[c] * inv);
            }
        }
    }
    return g;
}

template <typename T>
Tensor<T> rectify(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
    return out;
}

template <typename T>
Tensor<T> rectify_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
    Tensor<T> g(grad_out.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = output[i] > T{0} ? grad_out[i] : T{0};
    return g;
}

template <typename T>
Tensor<T> maxpool(const Tensor<T>& x, std::size_t pool_h, std::size_t pool_w, std::vector<std::size_t>* argmax) {
    if (x.rank() < 3) throw DataError("maxpool: expected [C,H,W] or [B,C,H,W]");
    if (pool_h == 0 || pool_w == 0) throw DataError("maxpool: pool size must be positive");
    Shape s = x.shape();
    const std::size_t r = s.size();
    const std::size_t h = s[r - 2], w = s[r - 1];
    const std::size_t oh = h / pool_h, ow = w / pool_w;
    const std::size_t maps = x.size() / (h * w);
    s[r - 2] = oh;
    s[r - 1] = ow;
    Tensor<T> out(s);
    if (argmax) argmax->assign(out.size(), 0);
    for (std::size_t m = 0; m < maps; ++m)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (m * h + oy * pool_h) * w + ox * pool_w;
                for (std::size_t i = 0; i < pool_h; ++i)
                    for (std::size_t j = 0; j < pool_w; ++j) {
                        const std::size_t idx = (m * h + oy * pool_h + i) * w + ox * pool_w + j;
                        if (x[idx] > x[best]) best = idx;
                    }
                const std::size_t o = (m * oh + oy) * ow + ox;
                out[o] = x[best];
                if (argmax) (*argmax)[o] = best;
            }
    return out;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax, const Shape& input_shape) {
    if (argmax.size() != grad_out.size()) throw DataError("maxpool_backward: argmax size mismatch");
    Tensor<T> g(input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) g[argmax[i]] += grad_out[i];
    return g;
}

template <typename T>
std::vector<T> dropout_mask(std::size_t size, double p, std::mt19937_64& rng) {
    std::vector<T> mask(size);
    std::bernoulli_distribution keep(1.0 - p);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (auto& m : mask) m = keep(rng) ? scale : T{0};
    return mask;
}

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<T>& mask) {
    if (mask.size() != x.size()) throw DataError("dropout: mask size mismatch");
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
    return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, std::mt19937_64& rng, std::vector<T>* mask) {
    if (mode == Mode::Infer || p <= 0.0) {
        if (mask) mask->assign(x.size(), T{1});
        return x;
    }
    auto m = dropout_mask<T>(x.size(), p, rng);
    Tensor<T> out = apply_mask(x, m);
    if (mask) *mask = std::move(m);
    return out;
}

template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x) {
    if (x.rank() < 3) throw DataError("global_average_pool: expected [C,H,W] or [B,C,H,W]");
    const ChannelLayout l = channel_layout(x.shape());
    Shape s(x.shape().begin(), x.shape().end() - 2);
    Tensor<T> out(s);
    for (std::size_t m = 0; m < l.outer * l.channels; ++m) {
        double acc = 0.0;
        const T* p = x.data() + m * l.inner;
        for (std::size_t i = 0; i < l.inner; ++i) acc += p[i];
        out[m] = static_cast<T>(acc / static_cast<double>(l.inner));
    }
    return out;
}

template <typename T>
Tensor<T> global_average_pool_backward(const Tensor<T>& grad_out, const Shape& input_shape) {
    const ChannelLayout l = channel_layout(input_shape);
    if (grad_out.size() != l.outer * l.channels) throw DataError("global_average_pool_backward: shape mismatch");
    Tensor<T> g(input_shape);
    const T inv = static_cast<T>(1.0 / static_cast<double>(l.inner));
    for (std::size_t m = 0; m < l.outer * l.channels; ++m)
        std::fill(g.data() + m * l.inner, g.data() + (m + 1) * l.inner, grad_out[m] * inv);
    return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.empty()) return logits;
    const std::size_t k = logits.shape().back();
    const std::size_t rows = logits.size() / k;
    Tensor<T> out(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = logits.data() + r * k;
        T* o = out.data() + r * k;
        const T mx = *std::max_element(in, in + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double e = std::exp(static_cast<double>(in[j] - mx));
            o[j] = static_cast<T>(e);
            sum += e;
        }
        for (std::size_t j = 0; j < k; ++j) o[j] = static_cast<T>(o[j] / sum);
    }
    return out;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
    const std::size_t k = output.shape().back();
    const std::size_t rows = output.size() / k;
    Tensor<T> g(output.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(grad_out[r * k + j]) * output[r * k + j];
        for (std::size_t j = 0; j < k; ++j)
            g[r * k + j] = static_cast<T>(output[r * k + j] * (grad_out[r * k + j] - dot));
    }
    return g;
}

template <typename T>
double cross_entropy(const Tensor<T>& predictions, const Tensor<T>& targets) {
    if (predictions.shape() != targets.shape()) throw DataError("cross_entropy: shape mismatch");
    const std::size_t k = predictions.shape().back();
    const std::size_t rows = predictions.size() / k;
    double loss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (targets[i] != T{0})
            loss -= targets[i] * std::log(std::max(static_cast<double>(predictions[i]), kLogFloor));
    }
    return loss / static_cast<double>(rows);
}

template <typename T>
double l2_norm(std::span<const Tensor<T>* const> params) {
    double sq = 0.0;
    for (const Tensor<T>* p : params)
        for (T v : p->values()) sq += static_cast<double>(v) * v;
    return std::sqrt(sq);
}

template <typename T>
double cross_entropy_l2_loss(const Tensor<T>& predictions, const Tensor<T>& targets,
                             std::span<const Tensor<T>* const> params, double l2) {
    return cross_entropy(predictions, targets) + l2 * l2_norm(params);
}

template <typename T>
Tensor<T> cross_entropy_softmax_grad(const Tensor<T>& predictions, const Tensor<T>& targets) {
    if (predictions.shape() != targets.shape()) throw DataError("cross_entropy: shape mismatch");
    const std::size_t rows = predictions.size() / predictions.shape().back();
    Tensor<T> g(predictions.shape());
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<T>((predictions[i] - targets[i]) * inv);
    return g;
}

template <typename T>
void add_l2_norm_gradient(std::span<const Tensor<T>* const> params, std::span<Tensor<T>* const> grads, double l2) {
    if (params.size() != grads.size()) throw DataError("add_l2_norm_gradient: size mismatch");
    const double norm = l2_norm(params);
    if (norm == 0.0 || l2 == 0.0) return;
    const double k = l2 / norm;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& g = *grads[t];
        const auto& p = *params[t];
        for (std::size_t i = 0; i < p.size(); ++i) g[i] += static_cast<T>(k * p[i]);
    }
}

template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t num_classes) {
    Tensor<T> out(Shape{labels.size(), num_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw DataError("one_hot: label out of range");
        out[i * num_classes + static_cast<std::size_t>(labels[i])] = T{1};
    }
    return out;
}

#define CHORDREC_INSTANTIATE_LAYERS(T)                                                                        \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, Padding);                                   \
    template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Padding,    \
                                            bool);                                                           \
    template void add_channel_bias(Tensor<T>&, const Tensor<T>&);                                             \
    template Tensor<T> channel_sum(const Tensor<T>&);                                                        \
    template Tensor<T> batchnorm_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                                       BatchNormRunning<T>&, BatchNormCache<T>*, BatchNormSettings);         \
    template Tensor<T> batchnorm_infer(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                                       const BatchNormRunning<T>&, BatchNormSettings);                       \
    template BatchNormGrads<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,                 \
                                                  const Tensor<T>&);                                         \
    template BatchNormGrads<T> batchnorm_infer_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                                        const BatchNormRunning<T>&, BatchNormSettings);      \
    template Tensor<T> rectify(const Tensor<T>&);                                                            \
    template Tensor<T> rectify_backward(const Tensor<T>&, const Tensor<T>&);                                 \
    template Tensor<T> maxpool(const Tensor<T>&, std::size_t, std::size_t, std::vector<std::size_t>*);       \
    template Tensor<T> maxpool_backward(const Tensor<T>&, const std::vector<std::size_t>&, const Shape&);     \
    template std::vector<T> dropout_mask(std::size_t, double, std::mt19937_64&);                              \
    template Tensor<T> dropout(const Tensor<T>&, double, Mode, std::mt19937_64&, std::vector<T>*);           \
    template Tensor<T> apply_mask(const Tensor<T>&, const std::vector<T>&);                                   \
    template Tensor<T> global_average_pool(const Tensor<T>&);                                                 \
    template Tensor<T> global_average_pool_backward(const Tensor<T>&, const Shape&);                          \
    template Tensor<T> softmax(const Tensor<T>&);                                                            \
    template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);                                 \
    template double cross_entropy(const Tensor<T>&, const Tensor<T>&);                                        \
    template double l2_norm(std::span<const Tensor<T>* const>);                                               \
    template double cross_entropy_l2_loss(const Tensor<T>&, const Tensor<T>&,                                 \
                                          std::span<const Tensor<T>* const>, double);                         \
    template Tensor<T> cross_entropy_softmax_grad(const Tensor<T>&, const Tensor<T>&);                        \
    template void add_l2_norm_gradient(std::span<const Tensor<T>* const>, std::span<Tensor<T>* const>, double); \
    template Tensor<T> one_hot(std::span<const int>, std::size_t);

CHORDREC_INSTANTIATE_LAYERS(float)
CHORDREC_INSTANTIATE_LAYERS(double)

#undef CHORDREC_INSTANTIATE_LAYERS

}  // namespace chordrec
