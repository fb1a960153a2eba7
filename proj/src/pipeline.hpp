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

// Model-generated shadows, observable prediction across parameter points and
// comparison with the exact solver.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "gpt/model.hpp"
#include "qsim.hpp"
#include "shadow.hpp"

namespace shadowgpt::pipeline {

using dataset::ParamPoint;

enum class ObservableKind {
    Energy,
    /// <Z_i Z_{i+n}>, translation averaged.
    ZZ,
    /// <X_i X_{i+1} ... X_{i+n-1}>, translation averaged.
    XString,
    /// Renyi-2 entropy of n contiguous sites, translation averaged.
    Renyi2,
};

struct Observable {
    ObservableKind kind = ObservableKind::Energy;
    int n = 0;

    /// "energy", "zz_<n>", "xstring_<n>" or "renyi2_<n>".
    std::string id() const;
    static Observable parse(std::string_view id);
    bool uses_renyi_tier() const {
        return kind == ObservableKind::Renyi2;
    }
    void check(int n_qubits) const;
    bool operator==(const Observable &) const = default;
};

struct PredictionPlan {
    qsim::Family family = qsim::Family::TFIM;
    int n_qubits = 10;
    std::vector<ParamPoint> points;
    /// Shadows per point for energy and correlation functions.
    size_t correlation_shadows = 300000;
    /// Shadows per point for Renyi entropies.
    size_t renyi_shadows = 300000;
    std::vector<Observable> observables;
    shadow::MoMConfig mom;
    uint64_t seed = 0;

    void validate() const;
    /// Shadow count used for one observable.
    size_t shadows_for(const Observable &obs) const {
        return obs.uses_renyi_tier() ? renyi_shadows : correlation_shadows;
    }
};

/// TFIM: 41 points g = 0, 0.025, ..., 1. Cluster: the denominator-10 simplex lattice.
std::vector<ParamPoint> default_evaluation_points(qsim::Family family);
/// TFIM: energy, zz_1..5, xstring_1..5, renyi2_3. Cluster: energy, zz_2, renyi2_3.
std::vector<Observable> default_observables(qsim::Family family);
PredictionPlan default_plan(qsim::Family family, int n_qubits);

/// Canonical text of a plan; its checksum identifies the plan in table headers.
std::string plan_to_json(const PredictionPlan &plan);

/// Produces shadow ensembles at a parameter point. Implementations must be
/// deterministic in (point, count, seed).
class ShadowSource {
   public:
    virtual ~ShadowSource() = default;
    virtual shadow::Ensemble generate(const ParamPoint &g, size_t count, uint64_t seed) const = 0;
    virtual int n_qubits() const = 0;
};

/// Bases from the uniform sampler, outcomes from the trained model.
class ModelSource : public ShadowSource {
   public:
    explicit ModelSource(std::shared_ptr<const gpt::AnyModel> model, int threads = 1)
        : model_(std::move(model)), threads_(threads) {
    }
    shadow::Ensemble generate(const ParamPoint &g, size_t count, uint64_t seed) const override;
    int n_qubits() const override;

   private:
    std::shared_ptr<const gpt::AnyModel> model_;
    int threads_;
};

/// Stand-in for the model that measures the exact ground space; isolates the
/// estimator path from model error.
class ExactSource : public ShadowSource {
   public:
    ExactSource(qsim::Family family, int n_qubits) : family_(family), n_qubits_(n_qubits) {
    }
    shadow::Ensemble generate(const ParamPoint &g, size_t count, uint64_t seed) const override;
    int n_qubits() const override {
        return n_qubits_;
    }

   private:
    qsim::Family family_;
    int n_qubits_;
};

/// Record r draws its basis and outcomes from the stream (seed, r).
shadow::Ensemble generate_model_shadows(const gpt::AnyModel &model, const ParamPoint &g, size_t count, uint64_t seed,
                                        int threads = 1);

/// Seed of the ensemble for one point and shadow count. Depends only on the
/// point itself, so a single-point prediction matches the sweep.
uint64_t point_seed(uint64_t plan_seed, const ParamPoint &g, size_t count);

qsim::HamiltonianSpec spec_at(qsim::Family family, const ParamPoint &g, int n_qubits);

shadow::EstimateReport estimate(std::span<const shadow::ShadowRecord> ensemble, const Observable &obs,
                                const qsim::HamiltonianSpec &spec, const shadow::MoMConfig &mom);

/// One report per (point, observable) in plan order. Points run concurrently;
/// each point draws one ensemble per shadow-count tier.
std::vector<shadow::EstimateReport> predict_observables(const ShadowSource &source, const PredictionPlan &plan,
                                                        int threads = 1);

double exact_value(const qsim::GroundSpace &gs, const Observable &obs);

struct EvaluationRow {
    shadow::EstimateReport report;
    double exact = 0.0;
    double abs_error = 0.0;
    /// abs_error / |exact|; NaN when the exact value is 0.
    double rel_error = 0.0;
};

/// <ZZ>(g) against the X-string at 1 - g; populated for TFIM points whose dual is in the plan.
struct DualityRow {
    double g = 0.0;
    int n = 0;
    double predicted_zz = 0.0;
    double predicted_xstring_dual = 0.0;
    double predicted_gap = 0.0;
    double exact_zz = 0.0;
    double exact_xstring_dual = 0.0;
    double exact_gap = 0.0;
};

/// Exact ground energy at a cluster point and at one permutation of it.
struct TrialityRow {
    ParamPoint point;
    ParamPoint permuted;
    double energy = 0.0;
    double permuted_energy = 0.0;
    double gap = 0.0;
};

struct Evaluation {
    std::vector<EvaluationRow> rows;
    std::vector<DualityRow> duality;
    std::vector<TrialityRow> triality;
};

Evaluation evaluate(const std::vector<shadow::EstimateReport> &reports, const PredictionPlan &plan, int threads = 1);

/// Exact values for every (point, observable) in the plan.
std::vector<EvaluationRow> oracle_rows(const PredictionPlan &plan, int threads = 1);

}  // namespace shadowgpt::pipeline
