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

#include "pipeline.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include <json.hpp>

#include "common.hpp"
#include "gpt/sampler.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace shadowgpt::pipeline {

namespace {

constexpr size_t kGenerationBlock = 4096;
constexpr double kPointMatchTol = 1e-12;

qsim::PauliString zz_string(int n) {
    return qsim::PauliString{{0, qsim::Pauli::Z}, {n, qsim::Pauli::Z}};
}

qsim::PauliString x_string(int n) {
    std::vector<std::pair<int, qsim::Pauli>> support;
    for (int k = 0; k < n; k++) {
        support.emplace_back(k, qsim::Pauli::X);
    }
    return qsim::PauliString(std::move(support));
}

bool same_point(const ParamPoint &a, const ParamPoint &b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (size_t k = 0; k < a.size(); k++) {
        if (std::abs(a[k] - b[k]) > kPointMatchTol) {
            return false;
        }
    }
    return true;
}

std::vector<qsim::GroundSpace> solve_points(qsim::Family family, int n_qubits, const std::vector<ParamPoint> &points,
                                            int threads) {
    std::vector<qsim::GroundSpace> out(points.size());
    parallel_for(points.size(), threads,
                 [&](size_t i) { out[i] = qsim::solve(spec_at(family, points[i], n_qubits)); });
    return out;
}

double relative(double abs_error, double exact) {
    return exact == 0.0 ? std::numeric_limits<double>::quiet_NaN() : abs_error / std::abs(exact);
}

}  // namespace

std::string Observable::id() const {
    switch (kind) {
        case ObservableKind::Energy:
            return "energy";
        case ObservableKind::ZZ:
            return "zz_" + std::to_string(n);
        case ObservableKind::XString:
            return "xstring_" + std::to_string(n);
        case ObservableKind::Renyi2:
            return "renyi2_" + std::to_string(n);
    }
    return "unknown";
}

Observable Observable::parse(std::string_view id) {
    if (id == "energy") {
        return {ObservableKind::Energy, 0};
    }
    auto with_order = [&](std::string_view prefix, ObservableKind kind) -> std::optional<Observable> {
        if (!id.starts_with(prefix)) {
            return std::nullopt;
        }
        std::string_view rest = id.substr(prefix.size());
        int n = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), n);
        if (ec != std::errc() || ptr != rest.data() + rest.size() || n <= 0) {
            throw ParameterError("observable '" + std::string(id) + "' needs a positive integer order");
        }
        return Observable{kind, n};
    };
    if (auto o = with_order("zz_", ObservableKind::ZZ)) {
        return *o;
    }
    if (auto o = with_order("xstring_", ObservableKind::XString)) {
        return *o;
    }
    if (auto o = with_order("renyi2_", ObservableKind::Renyi2)) {
        return *o;
    }
    throw ParameterError("unknown observable '" + std::string(id) +
                         "' (expected energy, zz_<n>, xstring_<n> or renyi2_<n>)");
}

void Observable::check(int n_qubits) const {
    switch (kind) {
        case ObservableKind::Energy:
            return;
        case ObservableKind::ZZ:
            if (n < 1 || n >= n_qubits) {
                throw ParameterError("observable " + id() + " needs 1 <= n < N");
            }
            return;
        case ObservableKind::XString:
            if (n < 1 || n > n_qubits) {
                throw ParameterError("observable " + id() + " needs 1 <= n <= N");
            }
            return;
        case ObservableKind::Renyi2:
            if (n < 1 || n > std::min(6, n_qubits)) {
                throw ParameterError("observable " + id() + " needs 1 <= n <= min(6, N)");
            }
            return;
    }
}

void PredictionPlan::validate() const {
    if (n_qubits < 3 || n_qubits > qsim::kMaxQubits) {
        throw ParameterError("plan n_qubits must lie in [3, " + std::to_string(qsim::kMaxQubits) + "]");
    }
    if (points.empty()) {
        throw ParameterError("plan has no evaluation points");
    }
    for (const auto &p : points) {
        spec_at(family, p, n_qubits).validate();
    }
    if (observables.empty()) {
        throw ParameterError("plan has no observables");
    }
    for (const auto &o : observables) {
        o.check(n_qubits);
    }
    if (mom.n_groups < 1) {
        throw ParameterError("plan mom_groups must be positive");
    }
    for (const auto &o : observables) {
        size_t count = shadows_for(o);
        if (count < static_cast<size_t>(mom.n_groups)) {
            throw ParameterError("plan shadow count " + std::to_string(count) + " for " + o.id() +
                                 " is smaller than mom_groups");
        }
        if (o.uses_renyi_tier() && count < 2 * static_cast<size_t>(mom.n_groups)) {
            throw ParameterError("plan renyi_shadows must give every group at least 2 records");
        }
    }
}

std::vector<ParamPoint> default_evaluation_points(qsim::Family family) {
    if (family == qsim::Family::ClusterIsing) {
        return dataset::simplex_lattice(10);
    }
    std::vector<ParamPoint> out;
    for (int k = 0; k <= 40; k++) {
        out.push_back({k / 40.0});
    }
    return out;
}

std::vector<Observable> default_observables(qsim::Family family) {
    std::vector<Observable> out{{ObservableKind::Energy, 0}};
    if (family == qsim::Family::TFIM) {
        for (int n = 1; n <= 5; n++) {
            out.push_back({ObservableKind::ZZ, n});
        }
        for (int n = 1; n <= 5; n++) {
            out.push_back({ObservableKind::XString, n});
        }
    } else {
        out.push_back({ObservableKind::ZZ, 2});
    }
    out.push_back({ObservableKind::Renyi2, 3});
    return out;
}

PredictionPlan default_plan(qsim::Family family, int n_qubits) {
    PredictionPlan plan;
    plan.family = family;
    plan.n_qubits = n_qubits;
    plan.points = default_evaluation_points(family);
    plan.observables = default_observables(family);
    plan.correlation_shadows = family == qsim::Family::TFIM ? 300000 : 200000;
    plan.renyi_shadows = 300000;
    return plan;
}

std::string plan_to_json(const PredictionPlan &plan) {
    nlohmann::ordered_json j;
    j["family"] = qsim::family_name(plan.family);
    j["n_qubits"] = plan.n_qubits;
    j["points"] = plan.points;
    j["correlation_shadows"] = plan.correlation_shadows;
    j["renyi_shadows"] = plan.renyi_shadows;
    std::vector<std::string> ids;
    for (const auto &o : plan.observables) {
        ids.push_back(o.id());
    }
    j["observables"] = ids;
    j["mom_groups"] = plan.mom.n_groups;
    j["seed"] = plan.seed;
    return j.dump();
}

qsim::HamiltonianSpec spec_at(qsim::Family family, const ParamPoint &g, int n_qubits) {
    qsim::HamiltonianSpec spec;
    spec.family = family;
    spec.params = g;
    spec.n_qubits = n_qubits;
    spec.validate();
    return spec;
}

uint64_t point_seed(uint64_t plan_seed, const ParamPoint &g, size_t count) {
    uint64_t h = derive_seed(plan_seed, {static_cast<uint64_t>(count), g.size()});
    for (double v : g) {
        h = derive_seed(h, {std::bit_cast<uint64_t>(v)});
    }
    return h;
}

shadow::Ensemble generate_model_shadows(const gpt::AnyModel &model, const ParamPoint &g, size_t count, uint64_t seed,
                                        int threads) {
    const gpt::ModelConfig &c = gpt::config_of(model);
    if (static_cast<int>(g.size()) != c.param_dim) {
        throw ParameterError("point has " + std::to_string(g.size()) + " parameters but the model expects " +
                             std::to_string(c.param_dim));
    }
    const int N = c.n_qubits;
    shadow::Ensemble out;
    out.reserve(count);
    for (size_t begin = 0; begin < count; begin += kGenerationBlock) {
        size_t n = std::min(count, begin + kGenerationBlock) - begin;
        std::vector<Rng> rngs;
        rngs.reserve(n);
        std::vector<uint8_t> tokens;
        tokens.reserve(n * N);
        std::vector<double> params;
        params.reserve(n * g.size());
        std::vector<shadow::PauliBasisString> bases;
        bases.reserve(n);
        for (size_t r = 0; r < n; r++) {
            rngs.push_back(make_stream(seed, {begin + r}));
            bases.push_back(shadow::sample_basis(N, rngs.back()));
            for (auto p : bases.back().bases) {
                tokens.push_back(dataset::basis_token(p));
            }
            params.insert(params.end(), g.begin(), g.end());
        }
        gpt::SampleBatch s = gpt::sample_batch(model, params, tokens, rngs, threads);
        for (size_t r = 0; r < n; r++) {
            shadow::ShadowRecord rec;
            rec.params = g;
            rec.basis = std::move(bases[r]);
            rec.outcome.outcomes.assign(s.outcomes.begin() + r * N, s.outcomes.begin() + (r + 1) * N);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

shadow::Ensemble ModelSource::generate(const ParamPoint &g, size_t count, uint64_t seed) const {
    return generate_model_shadows(*model_, g, count, seed, threads_);
}

int ModelSource::n_qubits() const {
    return gpt::config_of(*model_).n_qubits;
}

shadow::Ensemble ExactSource::generate(const ParamPoint &g, size_t count, uint64_t seed) const {
    qsim::GroundSpace gs = qsim::solve(spec_at(family_, g, n_qubits_));
    shadow::Ensemble out;
    out.reserve(count);
    for (size_t r = 0; r < count; r++) {
        Rng rng = make_stream(seed, {r});
        shadow::ShadowRecord rec;
        rec.params = g;
        rec.basis = shadow::sample_basis(n_qubits_, rng);
        rec.outcome = shadow::measure(gs, rec.basis, rng);
        out.push_back(std::move(rec));
    }
    return out;
}

shadow::EstimateReport estimate(std::span<const shadow::ShadowRecord> ensemble, const Observable &obs,
                                const qsim::HamiltonianSpec &spec, const shadow::MoMConfig &mom) {
    shadow::EstimateReport r;
    switch (obs.kind) {
        case ObservableKind::Energy:
            r = shadow::estimate_energy(ensemble, spec, mom);
            break;
        case ObservableKind::ZZ:
            r = shadow::estimate_pauli_translation_averaged(ensemble, zz_string(obs.n), mom);
            break;
        case ObservableKind::XString:
            r = shadow::estimate_pauli_translation_averaged(ensemble, x_string(obs.n), mom);
            break;
        case ObservableKind::Renyi2:
            r = shadow::estimate_renyi2_translation_averaged(ensemble, obs.n, mom);
            break;
    }
    r.observable = obs.id();
    r.point = spec.params;
    return r;
}

std::vector<shadow::EstimateReport> predict_observables(const ShadowSource &source, const PredictionPlan &plan,
                                                        int threads) {
    plan.validate();
    if (source.n_qubits() != plan.n_qubits) {
        throw ParameterError("shadow source has N=" + std::to_string(source.n_qubits()) + " but the plan has N=" +
                             std::to_string(plan.n_qubits));
    }
    std::vector<std::vector<shadow::EstimateReport>> per_point(plan.points.size());
    parallel_for(plan.points.size(), threads, [&](size_t i) {
        const ParamPoint &g = plan.points[i];
        qsim::HamiltonianSpec spec = spec_at(plan.family, g, plan.n_qubits);
        std::map<size_t, shadow::Ensemble> tiers;
        for (const auto &obs : plan.observables) {
            size_t count = plan.shadows_for(obs);
            auto it = tiers.find(count);
            if (it == tiers.end()) {
                it = tiers.emplace(count, source.generate(g, count, point_seed(plan.seed, g, count))).first;
            }
            per_point[i].push_back(estimate(it->second, obs, spec, plan.mom));
        }
    });
    std::vector<shadow::EstimateReport> out;
    for (auto &v : per_point) {
        for (auto &r : v) {
            out.push_back(std::move(r));
        }
    }
    return out;
}

double exact_value(const qsim::GroundSpace &gs, const Observable &obs) {
    switch (obs.kind) {
        case ObservableKind::Energy:
            return gs.energy;
        case ObservableKind::ZZ:
            return qsim::expect_pauli_translation_averaged(gs, zz_string(obs.n));
        case ObservableKind::XString:
            return qsim::expect_pauli_translation_averaged(gs, x_string(obs.n));
        case ObservableKind::Renyi2: {
            std::vector<int> region = qsim::cyclic_region(0, obs.n, gs.n_qubits);
            return qsim::renyi2_exact(gs, region);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Evaluation evaluate(const std::vector<shadow::EstimateReport> &reports, const PredictionPlan &plan, int threads) {
    plan.validate();
    std::vector<qsim::GroundSpace> spaces = solve_points(plan.family, plan.n_qubits, plan.points, threads);
    auto point_index = [&](const ParamPoint &g) -> std::optional<size_t> {
        for (size_t i = 0; i < plan.points.size(); i++) {
            if (same_point(plan.points[i], g)) {
                return i;
            }
        }
        return std::nullopt;
    };

    Evaluation ev;
    std::map<std::pair<std::string, size_t>, const shadow::EstimateReport *> by_key;
    for (const auto &r : reports) {
        auto idx = point_index(r.point);
        if (!idx) {
            throw ParameterError("report for " + r.observable + " refers to a point outside the plan");
        }
        EvaluationRow row;
        row.report = r;
        row.exact = exact_value(spaces[*idx], Observable::parse(r.observable));
        row.abs_error = std::abs(r.value - row.exact);
        row.rel_error = relative(row.abs_error, row.exact);
        ev.rows.push_back(std::move(row));
        by_key[{r.observable, *idx}] = &r;
    }

    if (plan.family == qsim::Family::TFIM) {
        for (size_t i = 0; i < plan.points.size(); i++) {
            double g = plan.points[i][0];
            auto dual = point_index({1.0 - g});
            if (!dual) {
                continue;
            }
            for (const auto &obs : plan.observables) {
                if (obs.kind != ObservableKind::ZZ) {
                    continue;
                }
                Observable xs{ObservableKind::XString, obs.n};
                auto zz_it = by_key.find({obs.id(), i});
                auto xs_it = by_key.find({xs.id(), *dual});
                if (zz_it == by_key.end() || xs_it == by_key.end()) {
                    continue;
                }
                DualityRow d;
                d.g = g;
                d.n = obs.n;
                d.predicted_zz = zz_it->second->value;
                d.predicted_xstring_dual = xs_it->second->value;
                d.predicted_gap = std::abs(d.predicted_zz - d.predicted_xstring_dual);
                d.exact_zz = exact_value(spaces[i], obs);
                d.exact_xstring_dual = exact_value(spaces[*dual], xs);
                d.exact_gap = std::abs(d.exact_zz - d.exact_xstring_dual);
                ev.duality.push_back(d);
            }
        }
    } else {
        std::vector<std::pair<size_t, ParamPoint>> pending;
        for (size_t i = 0; i < plan.points.size(); i++) {
            ParamPoint perm = plan.points[i];
            std::sort(perm.begin(), perm.end());
            std::vector<ParamPoint> seen;
            do {
                if (same_point(perm, plan.points[i]) ||
                    std::any_of(seen.begin(), seen.end(), [&](const auto &s) { return same_point(s, perm); })) {
                    continue;
                }
                seen.push_back(perm);
                pending.emplace_back(i, perm);
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        std::vector<double> energies(pending.size());
        parallel_for(pending.size(), threads, [&](size_t k) {
            auto idx = point_index(pending[k].second);
            energies[k] = idx ? spaces[*idx].energy
                              : qsim::solve(spec_at(plan.family, pending[k].second, plan.n_qubits)).energy;
        });
        for (size_t k = 0; k < pending.size(); k++) {
            TrialityRow t;
            t.point = plan.points[pending[k].first];
            t.permuted = pending[k].second;
            t.energy = spaces[pending[k].first].energy;
            t.permuted_energy = energies[k];
            t.gap = std::abs(t.energy - t.permuted_energy);
            ev.triality.push_back(std::move(t));
        }
    }
    return ev;
}

std::vector<EvaluationRow> oracle_rows(const PredictionPlan &plan, int threads) {
    plan.validate();
    std::vector<qsim::GroundSpace> spaces = solve_points(plan.family, plan.n_qubits, plan.points, threads);
    std::vector<EvaluationRow> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < plan.points.size(); i++) {
        for (const auto &obs : plan.observables) {
            EvaluationRow row;
            row.report.observable = obs.id();
            row.report.point = plan.points[i];
            row.report.value = nan;
            row.report.mean = nan;
            row.report.std_error = nan;
            row.exact = exact_value(spaces[i], obs);
            row.abs_error = nan;
            row.rel_error = nan;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace shadowgpt::pipeline
