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

#include "config.hpp"

#include <functional>
#include <map>
#include <set>

#include <json.hpp>

#include "binio.hpp"
#include "common.hpp"

namespace shadowgpt::config {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Reads one object, recording which keys were consumed so the rest can be
/// reported as unknown.
class Section {
   public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ParameterError("config: " + where() + " must be an object");
        }
    }

    template <typename T>
    void get(const char *key, T &out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            out = it->template get<T>();
        } catch (const json::exception &) {
            throw ParameterError("config: " + name(key) + " has the wrong type");
        }
    }

    const json *child(const char *key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ParameterError("config: unknown key '" + name(it.key()) + "'");
            }
        }
    }

    std::string name(const std::string &key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

   private:
    std::string where() const {
        return path_.empty() ? "top level" : "'" + path_ + "'";
    }
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Accepts [[g], ...] or [g, ...] for one-parameter families.
std::vector<dataset::ParamPoint> read_points(const json &j, const std::string &key) {
    if (!j.is_array()) {
        throw ParameterError("config: " + key + " must be an array of points");
    }
    std::vector<dataset::ParamPoint> out;
    for (const auto &p : j) {
        if (p.is_number()) {
            out.push_back({p.get<double>()});
        } else if (p.is_array()) {
            dataset::ParamPoint point;
            for (const auto &v : p) {
                if (!v.is_number()) {
                    throw ParameterError("config: " + key + " entries must be numbers");
                }
                point.push_back(v.get<double>());
            }
            out.push_back(std::move(point));
        } else {
            throw ParameterError("config: " + key + " entries must be numbers or arrays of numbers");
        }
    }
    return out;
}

std::string precision_name(gpt::Precision p) {
    return p == gpt::Precision::F32 ? "f32" : "f64";
}

}  // namespace

RunConfig default_config(qsim::Family family) {
    RunConfig c;
    c.family = family;
    c.output_dir = std::filesystem::path("runs") / std::string(qsim::family_name(family));
    c.data.points = dataset::default_training_points(family);
    c.model.param_dim = qsim::param_dim(family);
    c.predict = pipeline::default_plan(family, c.n_qubits);
    c.sync();
    return c;
}

void RunConfig::sync() {
    model.n_qubits = n_qubits;
    model.param_dim = qsim::param_dim(family);
    train.seed = seed;
    train.threads = threads;
    predict.family = family;
    predict.n_qubits = n_qubits;
    predict.seed = seed;
}

void RunConfig::validate() const {
    if (n_qubits < 3 || n_qubits > qsim::kMaxQubits) {
        throw ParameterError("config: n_qubits must lie in [3, " + std::to_string(qsim::kMaxQubits) + "]");
    }
    if (threads < 1) {
        throw ParameterError("config: threads must be positive");
    }
    if (output_dir.empty()) {
        throw ParameterError("config: output_dir must not be empty");
    }
    if (data.points.empty()) {
        throw ParameterError("config: data.points must not be empty");
    }
    for (const auto &p : data.points) {
        try {
            pipeline::spec_at(family, p, n_qubits);
        } catch (const ParameterError &e) {
            throw ParameterError(std::string("config: data.points: ") + e.what());
        }
    }
    if (data.shadows_per_point == 0) {
        throw ParameterError("config: data.shadows_per_point must be positive");
    }
    try {
        model.validate();
    } catch (const ParameterError &e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    try {
        train.validate();
    } catch (const ParameterError &e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    try {
        predict.validate();
    } catch (const ParameterError &e) {
        throw ParameterError(std::string("config: predict: ") + e.what());
    }
}

RunConfig parse_run_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw ParameterError(std::string("config: malformed file: ") + e.what());
    }
    Section top(root, "");
    std::string family_text;
    top.get("family", family_text);
    if (family_text.empty()) {
        throw ParameterError("config: 'family' is required (tfim or cluster_ising)");
    }
    qsim::Family family;
    try {
        family = qsim::parse_family(family_text);
    } catch (const ParameterError &e) {
        throw ParameterError(std::string("config: family: ") + e.what());
    }
    RunConfig c = default_config(family);
    top.get("n_qubits", c.n_qubits);
    top.get("seed", c.seed);
    top.get("threads", c.threads);
    std::string out_dir = c.output_dir.string();
    top.get("output_dir", out_dir);
    c.output_dir = out_dir;

    if (const json *j = top.child("data")) {
        Section s(*j, "data");
        if (const json *p = s.child("points")) {
            c.data.points = read_points(*p, "data.points");
        }
        s.get("shadows_per_point", c.data.shadows_per_point);
        s.finish();
    }
    if (const json *j = top.child("model")) {
        Section s(*j, "model");
        s.get("d_model", c.model.d_model);
        s.get("n_layers", c.model.n_layers);
        s.get("n_heads", c.model.n_heads);
        s.get("d_ff", c.model.d_ff);
        std::string precision = precision_name(c.model.precision);
        s.get("precision", precision);
        if (precision == "f64") {
            c.model.precision = gpt::Precision::F64;
        } else if (precision == "f32") {
            c.model.precision = gpt::Precision::F32;
        } else {
            throw ParameterError("config: model.precision must be \"f64\" or \"f32\"");
        }
        s.finish();
    }
    if (const json *j = top.child("train")) {
        Section s(*j, "train");
        gpt::TrainConfig &t = c.train;
        s.get("epochs", t.epochs);
        s.get("batch_size", t.batch_size);
        s.get("lr_max", t.schedule.eta_max);
        s.get("lr_min", t.schedule.eta_min);
        s.get("restart_period", t.schedule.period);
        s.get("restart_mult", t.schedule.mult);
        s.get("weight_decay", t.adamw.weight_decay);
        s.get("beta1", t.adamw.beta1);
        s.get("beta2", t.adamw.beta2);
        s.get("eps", t.adamw.eps);
        s.get("validation_fraction", t.validation_fraction);
        s.get("chunk_records", t.chunk_records);
        s.finish();
    }
    bool explicit_observables = false;
    if (const json *j = top.child("predict")) {
        Section s(*j, "predict");
        if (const json *p = s.child("points")) {
            c.predict.points = read_points(*p, "predict.points");
        }
        s.get("correlation_shadows", c.predict.correlation_shadows);
        s.get("renyi_shadows", c.predict.renyi_shadows);
        s.get("mom_groups", c.predict.mom.n_groups);
        if (const json *o = s.child("observables")) {
            explicit_observables = true;
            if (!o->is_array()) {
                throw ParameterError("config: predict.observables must be an array of names");
            }
            c.predict.observables.clear();
            for (const auto &id : *o) {
                if (!id.is_string()) {
                    throw ParameterError("config: predict.observables entries must be strings");
                }
                c.predict.observables.push_back(pipeline::Observable::parse(id.get<std::string>()));
            }
        }
        s.finish();
    }
    top.finish();
    if (!explicit_observables) {
        // Default observables that do not fit a small system are dropped;
        // an explicit list is validated as written.
        std::erase_if(c.predict.observables, [&](const pipeline::Observable &o) {
            try {
                o.check(c.n_qubits);
                return false;
            } catch (const ParameterError &) {
                return true;
            }
        });
    }
    c.sync();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    return parse_run_config(binio::read_file(path));
}

std::string run_config_to_json(const RunConfig &c) {
    ordered_json j;
    j["family"] = qsim::family_name(c.family);
    j["n_qubits"] = c.n_qubits;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir.string();
    j["data"]["points"] = c.data.points;
    j["data"]["shadows_per_point"] = c.data.shadows_per_point;
    j["model"]["d_model"] = c.model.d_model;
    j["model"]["n_layers"] = c.model.n_layers;
    j["model"]["n_heads"] = c.model.n_heads;
    j["model"]["d_ff"] = c.model.d_ff;
    j["model"]["precision"] = precision_name(c.model.precision);
    const gpt::TrainConfig &t = c.train;
    j["train"]["epochs"] = t.epochs;
    j["train"]["batch_size"] = t.batch_size;
    j["train"]["lr_max"] = t.schedule.eta_max;
    j["train"]["lr_min"] = t.schedule.eta_min;
    j["train"]["restart_period"] = t.schedule.period;
    j["train"]["restart_mult"] = t.schedule.mult;
    j["train"]["weight_decay"] = t.adamw.weight_decay;
    j["train"]["beta1"] = t.adamw.beta1;
    j["train"]["beta2"] = t.adamw.beta2;
    j["train"]["eps"] = t.adamw.eps;
    j["train"]["validation_fraction"] = t.validation_fraction;
    j["train"]["chunk_records"] = t.chunk_records;
    j["predict"]["points"] = c.predict.points;
    j["predict"]["correlation_shadows"] = c.predict.correlation_shadows;
    j["predict"]["renyi_shadows"] = c.predict.renyi_shadows;
    std::vector<std::string> ids;
    for (const auto &o : c.predict.observables) {
        ids.push_back(o.id());
    }
    j["predict"]["observables"] = ids;
    j["predict"]["mom_groups"] = c.predict.mom.n_groups;
    return j.dump(2);
}

}  // namespace shadowgpt::config
