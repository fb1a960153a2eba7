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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "enumeration.hpp"
#include "oracles.hpp"
#include "qsim.hpp"
#include "shadow.hpp"

namespace shadowgpt::shadow {
namespace {

using qsim::GroundSpace;
using qsim::HamiltonianSpec;
using qsim::PauliString;

using oracle::all_paulis;
using oracle::all_regions;
using oracle::enumerate_records;
using oracle::kLabels;
using oracle::make_record;

Ensemble draw(const GroundSpace &gs, size_t count, uint64_t seed) {
    Ensemble out;
    for (size_t r = 0; r < count; r++) {
        Rng rng = make_stream(seed, {r});
        ShadowRecord rec;
        rec.params = {0.0};
        rec.basis = sample_basis(gs.n_qubits, rng);
        rec.outcome = measure(gs, rec.basis, rng);
        out.push_back(std::move(rec));
    }
    return out;
}

TEST(SampleBasisTest, DeterministicPerSeed) {
    Rng a(42);
    Rng b(42);
    for (int k = 0; k < 50; k++) {
        EXPECT_EQ(sample_basis(10, a), sample_basis(10, b));
    }
}

TEST(SampleBasisTest, MarginalsUniform) {
    const int n = 10;
    const int draws = 30000;
    Rng rng(2024);
    std::vector<std::array<int, 3>> counts(n, {0, 0, 0});
    for (int k = 0; k < draws; k++) {
        PauliBasisString p = sample_basis(n, rng);
        ASSERT_EQ(p.size(), static_cast<size_t>(n));
        for (int i = 0; i < n; i++) {
            counts[i][static_cast<int>(p.bases[i])]++;
        }
    }
    const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / draws);
    for (int i = 0; i < n; i++) {
        for (int c = 0; c < 3; c++) {
            EXPECT_NEAR(counts[i][c] / static_cast<double>(draws), 1.0 / 3, 3 * sigma) << "site " << i;
        }
    }
}

TEST(SampleBasisTest, SingleQubitHitsEveryLabel) {
    std::array<bool, 3> seen = {false, false, false};
    for (uint64_t s = 0; s < 64; s++) {
        Rng rng(s);
        seen[static_cast<int>(sample_basis(1, rng).bases[0])] = true;
    }
    EXPECT_TRUE(seen[0] && seen[1] && seen[2]);
}

TEST(MeasureTest, DeterministicOutcomes) {
    GroundSpace zero = GroundSpace::from_pure(qsim::PureState::product_zero(5));
    GroundSpace plus = qsim::solve(HamiltonianSpec::tfim(1.0, 5));
    Rng rng(7);
    PauliBasisString all_z{std::vector<qsim::Pauli>(5, qsim::Pauli::Z)};
    PauliBasisString all_x{std::vector<qsim::Pauli>(5, qsim::Pauli::X)};
    for (int k = 0; k < 200; k++) {
        EXPECT_EQ(measure(zero, all_z, rng).outcomes, std::vector<int8_t>(5, 1));
        EXPECT_EQ(measure(plus, all_x, rng).outcomes, std::vector<int8_t>(5, 1));
    }
}

TEST(MeasureTest, ZeroStateInXBasisIsFair) {
    GroundSpace zero = GroundSpace::from_pure(qsim::PureState::product_zero(1));
    PauliBasisString x{{qsim::Pauli::X}};
    Rng rng(11);
    const int draws = 10000;
    int plus = 0;
    for (int k = 0; k < draws; k++) {
        plus += measure(zero, x, rng).outcomes[0] == 1;
    }
    EXPECT_NEAR(plus / static_cast<double>(draws), 0.5, 3 * std::sqrt(0.25 / draws));
}

TEST(MeasureTest, FrequenciesFollowBornRule) {
    std::mt19937_64 gen(5);
    qsim::PureState psi{oracle::random_pure(2, gen), 2};
    GroundSpace gs = GroundSpace::from_pure(psi);
    oracle::Mat rho = psi.amplitudes * psi.amplitudes.adjoint();
    const int draws = 20000;
    Rng rng(99);
    for (const std::string bases : {"ZZ", "XY", "YX", "XZ", "YY"}) {
        PauliBasisString p;
        for (char c : bases) {
            p.bases.push_back(qsim::parse_pauli(c));
        }
        std::array<int, 4> counts = {0, 0, 0, 0};
        for (int k = 0; k < draws; k++) {
            OutcomeString o = measure(gs, p, rng);
            counts[(o.outcomes[0] < 0 ? 2 : 0) + (o.outcomes[1] < 0 ? 1 : 0)]++;
        }
        for (int idx = 0; idx < 4; idx++) {
            std::vector<int> b = {(idx & 2) ? -1 : 1, (idx & 1) ? -1 : 1};
            double p_exact = oracle::born_probability(rho, bases, b);
            double sigma = std::sqrt(p_exact * (1 - p_exact) / draws);
            EXPECT_NEAR(counts[idx] / static_cast<double>(draws), p_exact, 5 * sigma + 1e-12) << bases << " " << idx;
        }
    }
}

TEST(MeasureTest, RejectsLengthMismatch) {
    GroundSpace zero = GroundSpace::from_pure(qsim::PureState::product_zero(3));
    Rng rng(1);
    EXPECT_THROW(measure(zero, PauliBasisString{{qsim::Pauli::Z}}, rng), ParameterError);
}

TEST(SnapshotTest, SpecExamples) {
    EXPECT_EQ(snapshot_pauli_estimate(make_record("ZZZ", {1, 1, 1}), PauliString::parse("Z0 Z1")), 9.0);
    EXPECT_EQ(snapshot_pauli_estimate(make_record("ZXZ", {1, 1, 1}), PauliString::parse("Z0 Z1")), 0.0);
    EXPECT_EQ(snapshot_pauli_estimate(make_record("ZXZ", {1, -1, 1}), PauliString::parse("Z0 X1 Z2")), -27.0);
    EXPECT_THROW(snapshot_pauli_estimate(make_record("ZZ", {1, 1}), PauliString::parse("Z2")), ParameterError);
}

// Central property: the exact expectation of the single-snapshot estimate
// under the Born-rule record distribution is Tr(rho O).
TEST(UnbiasednessTest, SnapshotEstimatorByEnumeration) {
    std::mt19937_64 gen(17);
    for (int n = 1; n <= 3; n++) {
        for (int trial = 0; trial < 3; trial++) {
            oracle::Mat rho = trial == 0 ? oracle::random_density(n, gen, 1) : oracle::random_density(n, gen);
            auto records = enumerate_records(rho, n);
            double total_weight = 0.0;
            for (const auto &w : records) {
                total_weight += w.weight;
            }
            ASSERT_NEAR(total_weight, 1.0, 1e-14);
            for (const auto &[obs, labels] : all_paulis(n)) {
                double mean = 0.0;
                for (const auto &w : records) {
                    mean += w.weight * snapshot_pauli_estimate(w.record, obs);
                }
                double exact = (rho * oracle::dense_pauli(labels)).trace().real();
                EXPECT_NEAR(mean, exact, 1e-12) << "n=" << n << " obs=" << labels;
            }
        }
    }
}

// The single-qubit pair kernel equals Tr[(1 + 3bP)(1 + 3b'P')] / 4.
TEST(UnbiasednessTest, PairKernelMatchesTraceFormula) {
    for (int a = 0; a < 6; a++) {
        for (int b = 0; b < 6; b++) {
            auto snap = [](int s) {
                oracle::Mat p = oracle::pauli_matrix(kLabels[s / 2]);
                double sign = (s % 2) ? -1.0 : 1.0;
                return oracle::Mat(0.5 * (oracle::Mat::Identity(2, 2) + 3.0 * sign * p));
            };
            double ref = (snap(a) * snap(b)).trace().real();
            EXPECT_DOUBLE_EQ(pair_kernel_local(a, b), ref);
        }
    }
    EXPECT_EQ(local_state(qsim::Pauli::Y, -1), 3);
}

TEST(UnbiasednessTest, RenyiPairKernelByEnumeration) {
    std::mt19937_64 gen(23);
    for (int n = 1; n <= 3; n++) {
        for (int trial = 0; trial < 2; trial++) {
            oracle::Mat rho = trial == 0 ? oracle::random_density(n, gen, 1) : oracle::random_density(n, gen);
            auto records = enumerate_records(rho, n);
            for (const auto &region : all_regions(n)) {
                double expected_kernel = 0.0;
                for (const auto &a : records) {
                    if (a.weight == 0.0) {
                        continue;
                    }
                    for (const auto &b : records) {
                        // A two-record U-statistic is exactly the symmetric pair kernel.
                        std::vector<ShadowRecord> pair = {a.record, b.record};
                        expected_kernel += a.weight * b.weight * purity_u_statistic(pair, region);
                    }
                }
                oracle::Mat ra = oracle::reduced(rho, n, region);
                double purity = (ra * ra).trace().real();
                EXPECT_NEAR(expected_kernel, purity, 1e-12) << "n=" << n << " |A|=" << region.size();
            }
        }
    }
}

TEST(UnbiasednessTest, MaximallyMixedQubitKernel) {
    // Uniform b independent of P: kernel expectation 1/2, entropy log 2.
    double mean = 0.0;
    for (int a = 0; a < 6; a++) {
        for (int b = 0; b < 6; b++) {
            mean += pair_kernel_local(a, b) / 36.0;
        }
    }
    EXPECT_DOUBLE_EQ(mean, 0.5);
    Rng rng(3);
    Ensemble synthetic;
    for (int k = 0; k < 20000; k++) {
        ShadowRecord r;
        r.params = {0.0};
        r.basis = sample_basis(1, rng);
        r.outcome.outcomes = {static_cast<int8_t>(uniform_below(rng, 2) ? 1 : -1)};
        synthetic.push_back(r);
    }
    std::vector<int> region = {0};
    EXPECT_NEAR(estimate_renyi2(synthetic, region, MoMConfig{}).value, std::numbers::ln2, 0.05);
}

TEST(MedianOfMeansTest, SpecExample) {
    Ensemble e = {make_record("ZZ", {1, 1}), make_record("ZX", {1, 1})};
    EstimateReport r = estimate_pauli(e, PauliString::parse("Z0 Z1"), MoMConfig{2});
    EXPECT_EQ(r.group_values, (std::vector<double>{9.0, 0.0}));
    EXPECT_EQ(r.value, 4.5);
    EXPECT_EQ(r.mean, 4.5);
    EXPECT_EQ(r.shadow_count, 2u);
}

TEST(MedianOfMeansTest, SingleGroupIsPlainMean) {
    std::vector<double> v = {1.0, 2.0, 4.0, 8.0, 16.0};
    EstimateReport r = estimate_from_values(v, MoMConfig{1});
    EXPECT_EQ(r.value, 31.0 / 5);
    EXPECT_EQ(r.value, r.mean);
}

TEST(MedianOfMeansTest, BlocksAreContiguousAndRemainderIsDropped) {
    std::vector<double> v;
    for (int i = 0; i < 25; i++) {
        v.push_back(i);
    }
    EstimateReport r = estimate_from_values(v, MoMConfig{10});
    ASSERT_EQ(r.group_values.size(), 10u);
    for (int g = 0; g < 10; g++) {
        EXPECT_EQ(r.group_values[g], 2 * g + 0.5);
    }
    EXPECT_EQ(r.value, 9.5);
    EXPECT_EQ(r.mean, 12.0);
    EXPECT_THROW(estimate_from_values(std::vector<double>{1, 2}, MoMConfig{3}), ParameterError);
    EXPECT_THROW(estimate_from_values(std::vector<double>{}, MoMConfig{1}), ParameterError);
}

TEST(EstimatorTest, ZeroStateConverges) {
    GroundSpace zero = GroundSpace::from_pure(qsim::PureState::product_zero(4));
    Ensemble e = draw(zero, 100000, 1);
    EstimateReport r = estimate_pauli(e, PauliString::parse("Z0"), MoMConfig{});
    EXPECT_NEAR(r.value, 1.0, 5 * r.std_error);
    EXPECT_NEAR(r.mean, 1.0, 5 * r.std_error);
    EXPECT_GE(r.value, *std::min_element(r.group_values.begin(), r.group_values.end()));
    EXPECT_LE(r.value, *std::max_element(r.group_values.begin(), r.group_values.end()));
}

TEST(EstimatorTest, StandardErrorScalesAsInverseRoot) {
    GroundSpace gs = qsim::solve(HamiltonianSpec::tfim(0.5, 6));
    Ensemble big = draw(gs, 100000, 2);
    std::span<const ShadowRecord> small(big.data(), 10000);
    PauliString zz = PauliString::parse("Z0 Z1");
    double ratio = estimate_pauli(small, zz, MoMConfig{}).std_error / estimate_pauli(big, zz, MoMConfig{}).std_error;
    EXPECT_GT(ratio, std::sqrt(10.0) / 1.5);
    EXPECT_LT(ratio, std::sqrt(10.0) * 1.5);
}

TEST(EstimatorTest, EnergyAtTheEndpoints) {
    for (double g : {0.0, 1.0}) {
        HamiltonianSpec spec = HamiltonianSpec::tfim(g, 10);
        GroundSpace gs = qsim::solve(spec);
        Ensemble e = draw(gs, 100000, 10 + static_cast<uint64_t>(g));
        EstimateReport r = estimate_energy(e, spec, MoMConfig{});
        EXPECT_NEAR(r.value, -10.0, 5 * r.std_error) << "g=" << g;
        EXPECT_GT(r.std_error, 0.0);
    }
}

TEST(EstimatorTest, ZeroCoefficientTermsContributeNothing) {
    HamiltonianSpec spec = HamiltonianSpec::tfim(1.0, 4);
    for (const auto &t : qsim::hamiltonian_terms(spec)) {
        if (t.op.weight() == 2) {
            EXPECT_EQ(t.coefficient, 0.0);
        }
    }
    GroundSpace zero = GroundSpace::from_pure(qsim::PureState::product_zero(4));
    Ensemble e = draw(zero, 500, 8);
    std::vector<double> x_only;
    for (const auto &r : e) {
        double v = 0.0;
        for (int i = 0; i < 4; i++) {
            v += -1.0 * snapshot_pauli_estimate(r, PauliString{{i, qsim::Pauli::X}});
        }
        x_only.push_back(v);
    }
    EXPECT_EQ(estimate_energy(e, spec, MoMConfig{}).group_values, estimate_from_values(x_only, MoMConfig{}).group_values);
}

TEST(EstimatorTest, TranslationAveragedMatchesManualAverage) {
    GroundSpace gs = qsim::solve(HamiltonianSpec::tfim(0.4, 5));
    Ensemble e = draw(gs, 2000, 4);
    PauliString zz = PauliString::parse("Z0 Z2");
    EstimateReport avg = estimate_pauli_translation_averaged(e, zz, MoMConfig{});
    double manual = 0.0;
    for (int s = 0; s < 5; s++) {
        manual += estimate_pauli(e, zz.shifted(s, 5), MoMConfig{}).mean / 5;
    }
    EXPECT_NEAR(avg.mean, manual, 1e-12);
    EXPECT_GT(avg.placement_spread, 0.0);
}

TEST(RenyiEstimatorTest, ClampingAndErrors) {
    EXPECT_EQ(clamp_purity(1.04, 3), 1.0);
    EXPECT_EQ(clamp_purity(-0.2, 2), 0.25);
    Ensemble twins = {make_record("Z", {1}), make_record("Z", {1})};
    std::vector<int> region = {0};
    EXPECT_EQ(purity_u_statistic(twins, region), 5.0);
    EstimateReport r = estimate_renyi2(twins, region, MoMConfig{1});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_THROW(estimate_renyi2(twins, region, MoMConfig{2}), ParameterError);
    EXPECT_THROW(purity_u_statistic(twins, std::vector<int>{1}), ParameterError);
}

TEST(RenyiEstimatorTest, UStatisticMatchesPairLoop) {
    GroundSpace gs = qsim::solve(HamiltonianSpec::tfim(0.5, 4));
    Ensemble e = draw(gs, 60, 5);
    std::vector<int> region = {0, 1, 3};
    double sum = 0.0;
    for (size_t a = 0; a < e.size(); a++) {
        for (size_t b = 0; b < e.size(); b++) {
            if (a == b) {
                continue;
            }
            double k = 1.0;
            for (int s : region) {
                k *= pair_kernel_local(local_state(e[a].basis.bases[s], e[a].outcome.outcomes[s]),
                                       local_state(e[b].basis.bases[s], e[b].outcome.outcomes[s]));
            }
            sum += k;
        }
    }
    EXPECT_NEAR(purity_u_statistic(e, region), sum / (60.0 * 59.0), 1e-12);
}

TEST(RenyiEstimatorTest, ConvergesToExactEntropy) {
    GroundSpace gs = qsim::solve(HamiltonianSpec::tfim(0.5, 6));
    Ensemble e = draw(gs, 50000, 6);
    std::vector<int> region = {0, 1, 2};
    EstimateReport r = estimate_renyi2(e, region, MoMConfig{});
    EXPECT_NEAR(r.value, qsim::renyi2_exact(gs, region), 0.1);
    EstimateReport t = estimate_renyi2_translation_averaged(e, 3, MoMConfig{});
    EXPECT_NEAR(t.value, qsim::renyi2_exact(gs, region), 0.1);
    EXPECT_GE(r.value, *std::min_element(r.group_values.begin(), r.group_values.end()));
    EXPECT_LE(r.value, *std::max_element(r.group_values.begin(), r.group_values.end()));
}

TEST(DeterminismTest, ReportsAreBitIdentical) {
    GroundSpace gs = qsim::solve(HamiltonianSpec::tfim(0.3, 5));
    Ensemble a = draw(gs, 3000, 77);
    Ensemble b = draw(gs, 3000, 77);
    ASSERT_EQ(a, b);
    HamiltonianSpec spec = HamiltonianSpec::tfim(0.3, 5);
    EXPECT_EQ(estimate_energy(a, spec, MoMConfig{}).group_values, estimate_energy(b, spec, MoMConfig{}).group_values);
    EXPECT_EQ(estimate_renyi2_translation_averaged(a, 2, MoMConfig{}).value,
              estimate_renyi2_translation_averaged(b, 2, MoMConfig{}).value);
}

}  // namespace
}  // namespace shadowgpt::shadow
