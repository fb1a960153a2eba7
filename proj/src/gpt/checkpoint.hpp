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

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpt/model.hpp"
#include "gpt/optim.hpp"
#include "qsim.hpp"

namespace shadowgpt::gpt {

/// Optimizer and loop state needed for a bit-continuous resume.
struct TrainProgress {
    uint64_t step = 0;
    uint32_t epochs_done = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double initial_loss = std::numeric_limits<double>::quiet_NaN();
    uint32_t divergence_streak = 0;
    std::vector<double> m;
    std::vector<double> v;
};

/// Tensors are always stored as 64-bit floats; an f32 model widens losslessly.
struct Checkpoint {
    ModelConfig config;
    qsim::Family family = qsim::Family::TFIM;
    std::vector<double> values;
    std::optional<TrainProgress> progress;
};

std::string encode_checkpoint(const Checkpoint &ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::filesystem::path &path);

template <typename S>
Checkpoint make_checkpoint(const ModelParams<S> &params, qsim::Family family) {
    Checkpoint c;
    c.config = params.config;
    c.family = family;
    c.values.assign(params.values.begin(), params.values.end());
    return c;
}

template <typename S>
ModelParams<S> params_from(const Checkpoint &ckpt) {
    ModelParams<S> p = ModelParams<S>::zeros(ckpt.config);
    for (size_t k = 0; k < p.values.size(); k++) {
        p.values[k] = static_cast<S>(ckpt.values[k]);
    }
    return p;
}

AnyModel model_from(const Checkpoint &ckpt);
Checkpoint checkpoint_of(const AnyModel &model, qsim::Family family);

}  // namespace shadowgpt::gpt
