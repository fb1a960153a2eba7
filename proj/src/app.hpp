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

// The five run stages. Each reads its inputs from and writes its outputs to
// fixed locations under the run's output directory:
//
//   data/    manifest.json, shadows.sgd
//   train/   last.ckpt, best.ckpt, train_log.jsonl
//   eval/    predictions.tsv, evaluation.tsv, kramers_wannier.tsv or triality.tsv, *.svg
//   predict/ point_<g>.tsv
//   oracle/  oracle.tsv

#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace shadowgpt::app {

struct Options {
    bool dry_run = false;
    bool resume = false;
    /// Defaults to train/best.ckpt.
    std::optional<std::filesystem::path> checkpoint;
    /// Single point for predict and oracle.
    std::optional<dataset::ParamPoint> point;
};

/// Each returns a human-readable summary; with dry_run it describes the plan
/// and writes nothing.
std::string gen_data(const config::RunConfig &config, const Options &options);
std::string train(const config::RunConfig &config, const Options &options);
std::string evaluate(const config::RunConfig &config, const Options &options);
std::string predict(const config::RunConfig &config, const Options &options);
std::string oracle(const config::RunConfig &config, const Options &options);

/// Exclusive lock on an output directory, released on destruction.
class DirectoryLock {
   public:
    explicit DirectoryLock(const std::filesystem::path &dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock &) = delete;
    DirectoryLock &operator=(const DirectoryLock &) = delete;

   private:
    std::filesystem::path path_;
};

}  // namespace shadowgpt::app
