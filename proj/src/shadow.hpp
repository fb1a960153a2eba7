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
#include <string>
#include <vector>

#include "qsim.hpp"
#include "rng.hpp"

namespace shadowgpt::shadow {

using qsim::Pauli;

struct PauliBasisString {
    std::vector<Pauli> bases;
    size_t size() const {
        return bases.size();
    }
    bool operator==(const PauliBasisString &) const = default;
};

/// Measurement signs, each +1 or -1.
struct OutcomeString {
    std::vector<int8_t> outcomes;
    size_t size() const {
        return outcomes.size();
    }
    bool operator==(const OutcomeString &) const = default;
};

/// One classical shadow (g, P, b).
struct ShadowRecord {
    std::vector<double> params;
    PauliBasisString basis;
    OutcomeString outcome;

    size_t n_qubits() const {
        return basis.size();
    }
    bool operator==(const ShadowRecord &) const = default;
};

using Ensemble = std::vector<ShadowRecord>;

/// Median-of-means configuration. Groups are contiguous blocks in ensemble
/// order; the M mod n_groups trailing records are left out of the grouping.
struct MoMConfig {
    int n_groups = 10;
};

/// A predicted observable: median-of-means value, naive mean over every
/// record, the per-group values and the standard error of the naive mean.
struct EstimateReport {
    std::string observable;
    std::vector<double> point;
    double value = 0.0;
    double mean = 0.0;
    std::vector<double> group_values;
    double std_error = 0.0;
    size_t shadow_count = 0;
    /// Standard deviation across cyclic placements (0 when not translation averaged).
    double placement_spread = 0.0;
};

PauliBasisString sample_basis(int n_qubits, Rng &rng);

/// Born-rule sample: pick a ground-basis vector uniformly, rotate each qubit
/// so that P_i maps onto Z, draw one computational bitstring.
OutcomeString measure(const qsim::GroundSpace &gs, const PauliBasisString &basis, Rng &rng);

/// Single-snapshot estimate of a Pauli observable: 3^|supp| * prod b_i when
/// every basis matches the observable, 0 otherwise.
double snapshot_pauli_estimate(const ShadowRecord &record, const qsim::PauliString &obs);

/// Median-of-means over per-record values.
EstimateReport estimate_from_values(std::span<const double> values, const MoMConfig &mom);

EstimateReport estimate_pauli(std::span<const ShadowRecord> ensemble, const qsim::PauliString &obs,
                              const MoMConfig &mom);

/// Pauli observable averaged over all N cyclic placements, per record.
EstimateReport estimate_pauli_translation_averaged(std::span<const ShadowRecord> ensemble,
                                                   const qsim::PauliString &obs, const MoMConfig &mom);

/// Each group forms a full energy estimate; the report value is their median.
EstimateReport estimate_energy(std::span<const ShadowRecord> ensemble, const qsim::HamiltonianSpec &spec,
                               const MoMConfig &mom);

/// Single-qubit pair kernel (1 + 9 b b' [P == P']) / 2 on the 6 local
/// snapshot states indexed 2 * pauli + (b == -1).
double pair_kernel_local(int state_a, int state_b);
int local_state(Pauli p, int8_t b);

/// Unbiased U-statistic for Tr(rho_A^2) over distinct ordered record pairs.
double purity_u_statistic(std::span<const ShadowRecord> records, std::span<const int> region);

/// Renyi-2 entropy -log(purity) with the purity clamped to [2^-|A|, 1].
/// Group values and the report value are entropies.
EstimateReport estimate_renyi2(std::span<const ShadowRecord> ensemble, std::span<const int> region,
                               const MoMConfig &mom);

/// Renyi-2 over a contiguous region of `region_size` sites, purity averaged
/// over all N cyclic placements before taking the log.
EstimateReport estimate_renyi2_translation_averaged(std::span<const ShadowRecord> ensemble, int region_size,
                                                    const MoMConfig &mom);

double clamp_purity(double purity, int region_size);

}  // namespace shadowgpt::shadow
