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

#include "chordrec/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chordrec {

struct AdamSettings {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are allocated on the first step
/// and must keep the same layout afterwards.
template <typename T>
class Adam {
public:
    explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

    const AdamSettings& settings() const { return settings_; }
    void set_learning_rate(double lr) { settings_.learning_rate = lr; }
    std::size_t steps() const { return step_; }
    const std::vector<std::vector<T>>& first_moments() const { return m_; }
    const std::vector<std::vector<T>>& second_moments() const { return v_; }

    /// Throws NumericError (without touching any parameter) if a gradient is not finite.
    void step(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads) {
        if (params.size() != grads.size()) throw DataError("adam: parameter/gradient count mismatch");
        for (std::size_t t = 0; t < grads.size(); ++t) {
            if (params[t].size() != grads[t].size()) throw DataError("adam: shape mismatch in tensor " + std::to_string(t));
            for (T g : grads[t])
                if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in tensor " + std::to_string(t));
        }
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.size(), T{0});
                v_.emplace_back(p.size(), T{0});
            }
        } else if (m_.size() != params.size()) {
            throw DataError("adam: parameter layout changed between steps");
        }

        ++step_;
        const double b1 = settings_.beta1, b2 = settings_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
        const double lr = settings_.learning_rate;
        for (std::size_t t = 0; t < params.size(); ++t) {
            auto& m = m_[t];
            auto& v = v_[t];
            for (std::size_t i = 0; i < params[t].size(); ++i) {
                const double g = grads[t][i];
                const double mi = b1 * m[i] + (1.0 - b1) * g;
                const double vi = b2 * v[i] + (1.0 - b2) * g * g;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                params[t][i] -= static_cast<T>(lr * (mi / c1) / (std::sqrt(vi / c2) + settings_.epsilon));
            }
        }
    }

private:
    AdamSettings settings_;
    std::size_t step_ = 0;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
};

}  // namespace chordrec
