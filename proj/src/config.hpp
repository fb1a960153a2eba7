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
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "gpt/model.hpp"
#include "gpt/train.hpp"
#include "pipeline.hpp"

namespace shadowgpt::config {

struct DataSection {
    std::vector<dataset::ParamPoint> points;
    size_t shadows_per_point = 10000;
};

/// Everything one run needs. Fields not present in the file keep the
/// family defaults below; unknown keys are rejected.
struct RunConfig {
    qsim::Family family = qsim::Family::TFIM;
    int n_qubits = 10;
    uint64_t seed = 0;
    int threads = 1;
    std::filesystem::path output_dir;
    DataSection data;
    gpt::ModelConfig model;
    gpt::TrainConfig train;
    pipeline::PredictionPlan predict;

    /// Checks every section before any compute starts.
    void validate() const;
    /// Pushes run-level fields (N, seed, threads) into the sections.
    void sync();
};

RunConfig default_config(qsim::Family family);

/// Parses JSON with comments. Throws ParameterError naming the offending key.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path &path);

/// Fully expanded config, every default written out.
std::string run_config_to_json(const RunConfig &config);

}  // namespace shadowgpt::config
