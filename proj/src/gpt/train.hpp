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
#include <vector>

#include "dataset.hpp"
#include "gpt/checkpoint.hpp"
#include "gpt/model.hpp"
#include "gpt/optim.hpp"

namespace shadowgpt::gpt {

struct TrainConfig {
    AdamWConfig adamw;
    CosineWarmRestarts schedule;
    size_t batch_size = 512;
    int epochs = 75;
    double validation_fraction = 0.05;
    uint64_t seed = 0;
    int threads = 1;
    int chunk_records = 32;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    uint64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    /// NaN when the validation split is empty.
    double val_loss = 0.0;
};

struct TrainSummary {
    Checkpoint best;
    Checkpoint last;
    std::vector<EpochStats> epochs;
    double initial_loss = 0.0;
    uint64_t steps = 0;
    size_t train_records = 0;
    size_t validation_records = 0;
};

/// Files written into the output directory of a training run.
inline constexpr const char *kLastCheckpoint = "last.ckpt";
inline constexpr const char *kBestCheckpoint = "best.ckpt";
inline constexpr const char *kTrainLog = "train_log.jsonl";

/// Trains from scratch, or continues from <out_dir>/last.ckpt when resume is
/// set. An empty out_dir keeps everything in memory. The monitored loss is
/// the validation loss (train epoch mean if the split is empty); three
/// consecutive epochs above 10x its initial value abort with NumericError.
TrainSummary train(const dataset::Dataset &data, const ModelConfig &model, const TrainConfig &config,
                   const std::filesystem::path &out_dir = {}, bool resume = false);

/// Learning rate used at global step s: schedule at fractional epoch s / steps_per_epoch.
double step_lr(const CosineWarmRestarts &schedule, uint64_t step, uint64_t steps_per_epoch);

/// Fisher-Yates permutation of [0, n) from the stream (seed, epoch).
std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch);

}  // namespace shadowgpt::gpt
