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

#include "shadow.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace shadowgpt::shadow {

PauliBasisString sample_basis(int n_qubits, Rng &rng) {
    PauliBasisString out;
    out.bases.reserve(n_qubits);
    for (int i = 0; i < n_qubits; i++) {
        out.bases.push_back(static_cast<Pauli>(uniform_below(rng, 3)));
    }
    return out;
}

OutcomeString measure(const qsim::GroundSpace &gs, const PauliBasisString &basis, Rng &rng) {
    const int n = gs.n_qubits;
    if (static_cast<int>(basis.size()) != n) {
        throw ParameterError("basis length " + std::to_string(basis.size()) + " does not match ground space N=" +
                             std::to_string(n));
    }
    if (gs.basis.empty()) {
        throw ParameterError("ground space has no basis vectors");
    }
    const qsim::StateVector &chosen = gs.basis[uniform_below(rng, gs.basis.size())];
    qsim::StateVector psi = chosen;
    const int64_t dim = psi.size();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const std::complex<double> minus_i(0.0, -1.0);

    for (int site = 0; site < n; site++) {
        Pauli p = basis.bases[site];
        if (p == Pauli::Z) {
            continue;
        }
        const uint64_t mask = qsim::site_mask(site, n);
        for (int64_t x = 0; x < dim; x++) {
            if (static_cast<uint64_t>(x) & mask) {
                continue;
            }
            int64_t y = static_cast<int64_t>(static_cast<uint64_t>(x) | mask);
            std::complex<double> a0 = psi(x);
            std::complex<double> a1 = psi(y);
            if (p == Pauli::Y) {
                a1 *= minus_i;  // S^dagger, then H
            }
            psi(x) = (a0 + a1) * inv_sqrt2;
            psi(y) = (a0 - a1) * inv_sqrt2;
        }
    }

    double total = psi.squaredNorm();
    double target = uniform01(rng) * total;
    double cumulative = 0.0;
    int64_t pick = dim - 1;
    for (int64_t x = 0; x < dim; x++) {
        cumulative += std::norm(psi(x));
        if (cumulative > target) {
            pick = x;
            break;
        }
    }
    OutcomeString out;
    out.outcomes.resize(n);
    for (int site = 0; site < n; site++) {
        bool bit = (static_cast<uint64_t>(pick) >> qsim::site_bit(site, n)) & 1;
        out.outcomes[site] = bit ? int8_t{-1} : int8_t{+1};
    }
    return out;
}

double snapshot_pauli_estimate(const ShadowRecord &record, const qsim::PauliString &obs) {
    double value = 1.0;
    for (auto [site, p] : obs.support()) {
        if (site >= static_cast<int>(record.n_qubits())) {
            throw ParameterError("observable site " + std::to_string(site) + " out of range for record of N=" +
                                 std::to_string(record.n_qubits()));
        }
        if (record.basis.bases[site] != p) {
            return 0.0;
        }
        value *= 3.0 * record.outcome.outcomes[site];
    }
    return value;
}

namespace {

size_t group_size(size_t count, int n_groups) {
    if (n_groups < 1) {
        throw ParameterError("MoM n_groups must be positive");
    }
    if (count < static_cast<size_t>(n_groups)) {
        throw ParameterError("ensemble of " + std::to_string(count) + " records is smaller than n_groups=" +
                             std::to_string(n_groups));
    }
    return n_groups == 1 ? count : count / n_groups;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) {
        return values[n / 2];
    }
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_stddev(std::span<const double> values, double mean) {
    if (values.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double plain_mean(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

void check_uniform_n(std::span<const ShadowRecord> ensemble) {
    if (ensemble.empty()) {
        throw ParameterError("ensemble must be non-empty");
    }
    size_t n = ensemble.front().n_qubits();
    for (const auto &r : ensemble) {
        if (r.n_qubits() != n || r.outcome.size() != n) {
            throw ParameterError("all records in an ensemble must share the same N");
        }
    }
}

}  // namespace

EstimateReport estimate_from_values(std::span<const double> values, const MoMConfig &mom) {
    if (values.empty()) {
        throw ParameterError("ensemble must be non-empty");
    }
    size_t m = group_size(values.size(), mom.n_groups);
    EstimateReport report;
    report.shadow_count = values.size();
    report.mean = plain_mean(values);
    report.std_error = sample_stddev(values, report.mean) / std::sqrt(static_cast<double>(values.size()));
    for (int g = 0; g < mom.n_groups; g++) {
        report.group_values.push_back(plain_mean(values.subspan(g * m, m)));
    }
    report.value = median(report.group_values);
    return report;
}

EstimateReport estimate_pauli(std::span<const ShadowRecord> ensemble, const qsim::PauliString &obs,
                              const MoMConfig &mom) {
    check_uniform_n(ensemble);
    std::vector<double> values;
    values.reserve(ensemble.size());
    for (const auto &r : ensemble) {
        values.push_back(snapshot_pauli_estimate(r, obs));
    }
    EstimateReport report = estimate_from_values(values, mom);
    report.observable = obs.to_string();
    return report;
}

EstimateReport estimate_pauli_translation_averaged(std::span<const ShadowRecord> ensemble,
                                                   const qsim::PauliString &obs, const MoMConfig &mom) {
    check_uniform_n(ensemble);
    const int n = static_cast<int>(ensemble.front().n_qubits());
    std::vector<qsim::PauliString> placements;
    for (int shift = 0; shift < n; shift++) {
        placements.push_back(obs.shifted(shift, n));
    }
    std::vector<double> values(ensemble.size(), 0.0);
    std::vector<double> placement_sums(n, 0.0);
    for (size_t s = 0; s < ensemble.size(); s++) {
        double acc = 0.0;
        for (int k = 0; k < n; k++) {
            double v = snapshot_pauli_estimate(ensemble[s], placements[k]);
            placement_sums[k] += v;
            acc += v;
        }
        values[s] = acc / n;
    }
    EstimateReport report = estimate_from_values(values, mom);
    report.observable = obs.to_string();
    std::vector<double> placement_means;
    for (double sum : placement_sums) {
        placement_means.push_back(sum / static_cast<double>(ensemble.size()));
    }
    report.placement_spread = sample_stddev(placement_means, plain_mean(placement_means));
    return report;
}

EstimateReport estimate_energy(std::span<const ShadowRecord> ensemble, const qsim::HamiltonianSpec &spec,
                               const MoMConfig &mom) {
    check_uniform_n(ensemble);
    if (static_cast<int>(ensemble.front().n_qubits()) != spec.n_qubits) {
        throw ParameterError("ensemble N does not match the Hamiltonian");
    }
    std::vector<qsim::PauliTerm> terms = qsim::hamiltonian_terms(spec);
    std::vector<double> values;
    values.reserve(ensemble.size());
    for (const auto &r : ensemble) {
        double e = 0.0;
        for (const auto &t : terms) {
            e += t.coefficient * snapshot_pauli_estimate(r, t.op);
        }
        values.push_back(e);
    }
    EstimateReport report = estimate_from_values(values, mom);
    report.observable = "energy";
    return report;
}

int local_state(Pauli p, int8_t b) {
    return 2 * static_cast<int>(p) + (b < 0 ? 1 : 0);
}

double pair_kernel_local(int state_a, int state_b) {
    if (state_a / 2 != state_b / 2) {
        return 0.5;
    }
    return state_a == state_b ? 5.0 : -4.0;
}

double purity_u_statistic(std::span<const ShadowRecord> records, std::span<const int> region) {
    const size_t m = records.size();
    if (m < 2) {
        throw ParameterError("purity estimation needs at least 2 records per group");
    }
    const int k = static_cast<int>(region.size());
    if (k < 1 || k > 6) {
        throw ParameterError("region size must satisfy 1 <= |A| <= 6 (got " + std::to_string(k) + ")");
    }
    const int n = static_cast<int>(records.front().n_qubits());
    for (int site : region) {
        if (site < 0 || site >= n) {
            throw ParameterError("region site " + std::to_string(site) + " out of range for N=" + std::to_string(n));
        }
    }
    size_t dim = 1;
    for (int i = 0; i < k; i++) {
        dim *= 6;
    }

    // Histogram over local snapshot patterns; the pair sum then factorizes into
    // a product kernel contracted mode by mode. All values are exact dyadics.
    std::vector<double> counts(dim, 0.0);
    for (const auto &r : records) {
        size_t idx = 0;
        for (int site : region) {
            idx = idx * 6 + local_state(r.basis.bases[site], r.outcome.outcomes[site]);
        }
        counts[idx] += 1.0;
    }
    double kernel[6][6];
    for (int a = 0; a < 6; a++) {
        for (int b = 0; b < 6; b++) {
            kernel[a][b] = pair_kernel_local(a, b);
        }
    }
    std::vector<double> y = counts;
    std::vector<double> tmp(dim);
    size_t inner = dim;
    for (int mode = 0; mode < k; mode++) {
        inner /= 6;
        size_t outer = dim / (inner * 6);
        for (size_t o = 0; o < outer; o++) {
            for (size_t s = 0; s < 6; s++) {
                for (size_t in = 0; in < inner; in++) {
                    double acc = 0.0;
                    for (size_t t = 0; t < 6; t++) {
                        acc += kernel[s][t] * y[(o * 6 + t) * inner + in];
                    }
                    tmp[(o * 6 + s) * inner + in] = acc;
                }
            }
        }
        std::swap(y, tmp);
    }
    double all_pairs = 0.0;
    for (size_t i = 0; i < dim; i++) {
        all_pairs += counts[i] * y[i];
    }
    double diagonal = static_cast<double>(m) * std::pow(5.0, k);
    return (all_pairs - diagonal) / (static_cast<double>(m) * static_cast<double>(m - 1));
}

double clamp_purity(double purity, int region_size) {
    return std::clamp(purity, std::ldexp(1.0, -region_size), 1.0);
}

namespace {

EstimateReport renyi_from_group_purities(const std::vector<double> &group_purities, double full_purity,
                                         int region_size, size_t count) {
    EstimateReport report;
    report.shadow_count = count;
    for (double p : group_purities) {
        report.group_values.push_back(-std::log(clamp_purity(p, region_size)));
    }
    report.value = -std::log(clamp_purity(median(group_purities), region_size));
    report.mean = -std::log(clamp_purity(full_purity, region_size));
    if (report.group_values.size() > 1) {
        report.std_error = sample_stddev(report.group_values, plain_mean(report.group_values)) /
                           std::sqrt(static_cast<double>(report.group_values.size()));
    }
    return report;
}

}  // namespace

EstimateReport estimate_renyi2(std::span<const ShadowRecord> ensemble, std::span<const int> region,
                               const MoMConfig &mom) {
    check_uniform_n(ensemble);
    size_t m = group_size(ensemble.size(), mom.n_groups);
    std::vector<double> purities;
    for (int g = 0; g < mom.n_groups; g++) {
        purities.push_back(purity_u_statistic(ensemble.subspan(g * m, m), region));
    }
    double full = purity_u_statistic(ensemble, region);
    EstimateReport report = renyi_from_group_purities(purities, full, static_cast<int>(region.size()), ensemble.size());
    report.observable = "renyi2_" + std::to_string(region.size());
    return report;
}

EstimateReport estimate_renyi2_translation_averaged(std::span<const ShadowRecord> ensemble, int region_size,
                                                    const MoMConfig &mom) {
    check_uniform_n(ensemble);
    const int n = static_cast<int>(ensemble.front().n_qubits());
    size_t m = group_size(ensemble.size(), mom.n_groups);
    std::vector<double> purities(mom.n_groups, 0.0);
    double full = 0.0;
    std::vector<double> placement_entropies;
    for (int start = 0; start < n; start++) {
        std::vector<int> region = qsim::cyclic_region(start, region_size, n);
        for (int g = 0; g < mom.n_groups; g++) {
            purities[g] += purity_u_statistic(ensemble.subspan(g * m, m), region) / n;
        }
        double p = purity_u_statistic(ensemble, region);
        full += p / n;
        placement_entropies.push_back(-std::log(clamp_purity(p, region_size)));
    }
    EstimateReport report = renyi_from_group_purities(purities, full, region_size, ensemble.size());
    report.observable = "renyi2_" + std::to_string(region_size);
    report.placement_spread = sample_stddev(placement_entropies, plain_mean(placement_entropies));
    return report;
}

}  // namespace shadowgpt::shadow
