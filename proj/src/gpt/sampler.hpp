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

// Autoregressive outcome sampling with teacher-forced basis tokens. Keys and
// values of earlier positions are cached, so one record costs a single pass
// over its 2N + 1 positions.

#include <span>
#include <vector>

#include "gpt/model.hpp"
#include "rng.hpp"
#include "shadow.hpp"

namespace shadowgpt::gpt {

struct SampleBatch {
    /// Row-major (records x N), each +1 or -1.
    std::vector<int8_t> outcomes;
    /// Sum of log p(b_i | ...) along each sampled trajectory.
    std::vector<double> log_prob;
};

/// Samples outcomes for B records. params is B x param_dim, basis_tokens is
/// B x N (token ids 2..4), rngs holds one stream per record; results do not
/// depend on the thread count.
template <typename S>
SampleBatch sample_batch(const ModelParams<S> &params, std::span<const double> g, std::span<const uint8_t> basis_tokens,
                         std::span<Rng> rngs, int threads = 1);

SampleBatch sample_batch(const AnyModel &model, std::span<const double> g, std::span<const uint8_t> basis_tokens,
                         std::span<Rng> rngs, int threads = 1);

shadow::OutcomeString sample_outcomes(const AnyModel &model, std::span<const double> g,
                                      const shadow::PauliBasisString &basis, Rng &rng);

/// Teacher-forced conditionals through the cached decoder, laid out like
/// ForwardCache::logp. Used to cross-check the cache against forward().
template <typename S>
MatR<S> incremental_logp(const ModelParams<S> &params, const BatchView &batch);

}  // namespace shadowgpt::gpt
