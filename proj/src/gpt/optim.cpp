// Copyright 2026 The ShadowGPT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gpt/optim.hpp"

#include <cmath>
#include <numbers>

#include "common.hpp"

namespace shadowgpt::gpt {

template <typename S>
void adamw_step(std::span<S> params, std::span<const S> grad, OptimState<S> &state, double lr,
                const AdamWConfig &config, std::span<const uint8_t> decay_mask) {
    if (grad.size() != params.size() || state.m.size() != params.size() || decay_mask.size() != params.size()) {
        throw ParameterError("optimizer state shape does not match parameters");
    }
    state.step++;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    const S b1 = static_cast<S>(config.beta1);
    const S b2 = static_cast<S>(config.beta2);
    const S step_size = static_cast<S>(lr / bias1);
    const S inv_sqrt_bias2 = static_cast<S>(1.0 / std::sqrt(bias2));
    const S eps = static_cast<S>(config.eps);
    const S decay = static_cast<S>(1.0 - lr * config.weight_decay);
    for (size_t k = 0; k < params.size(); k++) {
        if (decay_mask[k]) {
            params[k] *= decay;
        }
        S g = grad[k];
        state.m[k] = b1 * state.m[k] + (S(1) - b1) * g;
        state.v[k] = b2 * state.v[k] + (S(1) - b2) * g * g;
        params[k] -= step_size * state.m[k] / (std::sqrt(state.v[k]) * inv_sqrt_bias2 + eps);
    }
}

template void adamw_step<double>(std::span<double>, std::span<const double>, OptimState<double> &, double,
                                 const AdamWConfig &, std::span<const uint8_t>);
template void adamw_step<float>(std::span<float>, std::span<const float>, OptimState<float> &, double,
                                const AdamWConfig &, std::span<const uint8_t>);

double CosineWarmRestarts::lr(double epoch) const {
    double start = 0.0;
    double length = period;
    while (epoch >= start + length) {
        start += length;
        length *= mult;
    }
    double t_cur = epoch - start;
    return eta_min + (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * t_cur / length)) / 2.0;
}

}  // namespace shadowgpt::gpt
