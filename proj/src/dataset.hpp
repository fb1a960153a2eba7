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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsim.hpp"
#include "shadow.hpp"

namespace shadowgpt::dataset {

// Token ids are part of the on-disk format (see docs/file_formats.md).
enum Token : uint8_t {
    kPlus = 0,
    kMinus = 1,
    kX = 2,
    kY = 3,
    kZ = 4,
};
constexpr int kVocabSize = 5;
constexpr std::array<std::string_view, kVocabSize> kVocabLabels = {"+1", "-1", "X", "Y", "Z"};

uint8_t basis_token(qsim::Pauli p);
uint8_t outcome_token(int8_t b);
bool is_basis_token(uint8_t t);
bool is_outcome_token(uint8_t t);

/// Interleaved (P_1, b_1, ..., P_N, b_N) token ids plus the parameter vector.
struct TokenizedRecord {
    std::vector<double> params;
    std::vector<uint8_t> tokens;
    bool operator==(const TokenizedRecord &) const = default;
};

TokenizedRecord tokenize(const shadow::ShadowRecord &record);
shadow::ShadowRecord detokenize(const TokenizedRecord &record);
shadow::ShadowRecord detokenize(std::span<const double> params, std::span<const uint8_t> tokens);

using ParamPoint = std::vector<double>;

struct GridPoint {
    ParamPoint params;
    size_t shadows = 0;
};

/// Points {(i, j, k) / denominator : i + j + k = denominator}, i-major order.
std::vector<ParamPoint> simplex_lattice(int denominator);

/// Default cluster-Ising training set: the 21 points of the denominator-5
/// lattice plus one cyclic orbit of three interior points of denominator 15
/// next to the centroid, (4,5,6)/15 and its cyclic shifts.
std::vector<ParamPoint> cluster_training_points();
std::vector<ParamPoint> default_training_points(qsim::Family family);
std::vector<GridPoint> training_grid(qsim::Family family, size_t shadows_per_point = 10000);

/// Flat, fixed-width record storage in (point-major, record-index) order.
struct Dataset {
    qsim::Family family = qsim::Family::TFIM;
    int n_qubits = 0;
    int param_dim = 1;
    std::vector<double> params;
    std::vector<uint8_t> tokens;

    size_t size() const {
        return n_qubits == 0 ? 0 : tokens.size() / (2 * static_cast<size_t>(n_qubits));
    }
    int seq_tokens() const {
        return 2 * n_qubits;
    }
    std::span<const double> params_of(size_t i) const {
        return {params.data() + i * param_dim, static_cast<size_t>(param_dim)};
    }
    std::span<const uint8_t> tokens_of(size_t i) const {
        return {tokens.data() + i * seq_tokens(), static_cast<size_t>(seq_tokens())};
    }
    void append(const TokenizedRecord &record);
    shadow::ShadowRecord shadow(size_t i) const {
        return detokenize(params_of(i), tokens_of(i));
    }
    bool operator==(const Dataset &) const = default;
};

struct DatasetManifest {
    static constexpr uint32_t kFormatVersion = 1;
    qsim::Family family = qsim::Family::TFIM;
    int n_qubits = 0;
    std::vector<ParamPoint> points;
    size_t shadows_per_point = 0;
    uint64_t master_seed = 0;
    uint32_t format_version = kFormatVersion;
    size_t record_count = 0;
    std::string payload_file;
    std::string payload_crc32;
};

/// Solves each grid point once and draws `shadows_per_point` records from its
/// ground space. Record r of point p uses the RNG stream (seed, p, r).
Dataset generate_records(qsim::Family family, int n_qubits, const std::vector<ParamPoint> &points,
                         size_t shadows_per_point, uint64_t master_seed, int threads = 1);

std::string encode_dataset(const Dataset &ds);
Dataset decode_dataset(std::string_view bytes);

/// Writes `<dir>/shadows.sgd` and `<dir>/manifest.json`.
DatasetManifest generate_dataset(qsim::Family family, int n_qubits, const std::vector<ParamPoint> &points,
                                 size_t shadows_per_point, uint64_t master_seed, const std::filesystem::path &dir,
                                 int threads = 1);

std::string manifest_to_json(const DatasetManifest &m);
DatasetManifest manifest_from_json(std::string_view text);
void write_manifest(const DatasetManifest &m, const std::filesystem::path &path);
DatasetManifest read_manifest(const std::filesystem::path &path);

/// Loads the payload named in the manifest, verifying checksum and record count.
Dataset load_dataset(const std::filesystem::path &manifest_path);

/// One record per line: "g=<...> | Z + X - ...".
std::string export_text(const Dataset &ds);

struct Split {
    std::vector<size_t> train;
    std::vector<size_t> validation;
};

/// Deterministic split by hashed record index.
Split split_dataset(size_t count, uint64_t seed, double validation_fraction = 0.05);

}  // namespace shadowgpt::dataset
