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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace shadowgpt::gpt {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

template <typename S>
struct OptimState {
    std::vector<S> m;
    std::vector<S> v;
    uint64_t step = 0;

    static OptimState zeros(size_t n) {
        return {std::vector<S>(n, S(0)), std::vector<S>(n, S(0)), 0};
    }
    bool operator==(const OptimState &) const = default;
};

/// One AdamW update with decoupled weight decay applied where decay_mask is 1.
template <typename S>
void adamw_step(std::span<S> params, std::span<const S> grad, OptimState<S> &state, double lr,
                const AdamWConfig &config, std::span<const uint8_t> decay_mask);

/// Cosine annealing with warm restarts. Time is measured in (fractional)
/// epochs; cycle i lasts period * mult^i epochs and within it
///   lr = eta_min + (eta_max - eta_min) * (1 + cos(pi * t_cur / T_i)) / 2.
struct CosineWarmRestarts {
    double eta_max = 3e-4;
    double eta_min = 1e-6;
    double period = 5.0;
    double mult = 2.0;

    double lr(double epoch) const;
};

}  // namespace shadowgpt::gpt
