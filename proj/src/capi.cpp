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

#include "shadowgpt/shadowgpt.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "app.hpp"
#include "common.hpp"
#include "config.hpp"
#include "gpt/checkpoint.hpp"
#include "gpt/sampler.hpp"
#include "qsim.hpp"

struct sg_config {
    shadowgpt::config::RunConfig config;
};

struct sg_ground_state {
    shadowgpt::qsim::GroundSpace gs;
};

struct sg_model {
    shadowgpt::gpt::AnyModel model;
};

namespace {

thread_local std::string g_last_error;

sg_status fail(sg_status code, const std::string &message) {
    g_last_error = message;
    return code;
}

/// Runs fn, mapping library exceptions onto status codes.
template <typename Fn>
sg_status guard(Fn &&fn) {
    try {
        fn();
        g_last_error.clear();
        return SG_OK;
    } catch (const shadowgpt::Error &e) {
        return fail(static_cast<sg_status>(e.kind()), e.what());
    } catch (const std::bad_alloc &) {
        return fail(SG_ERR_NUMERIC, "out of memory");
    } catch (const std::exception &e) {
        return fail(SG_ERR_IO, e.what());
    }
}

char *dup_string(const std::string &s) {
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_output(char **out, const std::string &s) {
    if (out) {
        *out = dup_string(s);
    }
}

void require(const void *p, const char *what) {
    if (!p) {
        throw shadowgpt::ParameterError(std::string(what) + " must not be NULL");
    }
}

shadowgpt::qsim::Family to_family(sg_family f) {
    switch (f) {
        case SG_FAMILY_TFIM:
            return shadowgpt::qsim::Family::TFIM;
        case SG_FAMILY_CLUSTER_ISING:
            return shadowgpt::qsim::Family::ClusterIsing;
    }
    throw shadowgpt::ParameterError("unknown family " + std::to_string(static_cast<int>(f)));
}

shadowgpt::app::Options options(int dry_run) {
    shadowgpt::app::Options o;
    o.dry_run = dry_run != 0;
    return o;
}

}  // namespace

extern "C" {

const char *sg_version(void) {
    return "0.1.0";
}

const char *sg_last_error(void) {
    return g_last_error.c_str();
}

void sg_string_free(char *s) {
    std::free(s);
}

sg_status sg_config_load(const char *path, sg_config **out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = new sg_config{shadowgpt::config::load_run_config(path)};
    });
}

sg_status sg_config_parse(const char *text, sg_config **out) {
    return guard([&] {
        require(text, "text");
        require(out, "out");
        *out = new sg_config{shadowgpt::config::parse_run_config(text)};
    });
}

sg_status sg_config_default(sg_family family, sg_config **out) {
    return guard([&] {
        require(out, "out");
        *out = new sg_config{shadowgpt::config::default_config(to_family(family))};
    });
}

sg_status sg_config_set_seed(sg_config *config, uint64_t seed) {
    return guard([&] {
        require(config, "config");
        config->config.seed = seed;
        config->config.sync();
    });
}

sg_status sg_config_set_output_dir(sg_config *config, const char *dir) {
    return guard([&] {
        require(config, "config");
        require(dir, "dir");
        if (*dir == '\0') {
            throw shadowgpt::ParameterError("output directory must not be empty");
        }
        config->config.output_dir = dir;
    });
}

sg_status sg_config_set_threads(sg_config *config, int threads) {
    return guard([&] {
        require(config, "config");
        if (threads < 1) {
            throw shadowgpt::ParameterError("threads must be positive");
        }
        config->config.threads = threads;
        config->config.sync();
    });
}

sg_status sg_config_to_json(const sg_config *config, char **json) {
    return guard([&] {
        require(config, "config");
        require(json, "json");
        *json = dup_string(shadowgpt::config::run_config_to_json(config->config));
    });
}

void sg_config_free(sg_config *config) {
    delete config;
}

sg_status sg_run_gen_data(const sg_config *config, int dry_run, char **summary) {
    return guard([&] {
        require(config, "config");
        set_output(summary, shadowgpt::app::gen_data(config->config, options(dry_run)));
    });
}

sg_status sg_run_train(const sg_config *config, int resume, int dry_run, char **summary) {
    return guard([&] {
        require(config, "config");
        auto o = options(dry_run);
        o.resume = resume != 0;
        set_output(summary, shadowgpt::app::train(config->config, o));
    });
}

sg_status sg_run_evaluate(const sg_config *config, const char *checkpoint, int dry_run, char **summary) {
    return guard([&] {
        require(config, "config");
        auto o = options(dry_run);
        if (checkpoint) {
            o.checkpoint = checkpoint;
        }
        set_output(summary, shadowgpt::app::evaluate(config->config, o));
    });
}

sg_status sg_run_predict(const sg_config *config, const char *checkpoint, const double *point, size_t point_len,
                         int dry_run, char **summary) {
    return guard([&] {
        require(config, "config");
        require(point, "point");
        auto o = options(dry_run);
        if (checkpoint) {
            o.checkpoint = checkpoint;
        }
        o.point = std::vector<double>(point, point + point_len);
        set_output(summary, shadowgpt::app::predict(config->config, o));
    });
}

sg_status sg_run_oracle(const sg_config *config, const double *point, size_t point_len, int dry_run,
                        char **summary) {
    return guard([&] {
        require(config, "config");
        auto o = options(dry_run);
        if (point) {
            o.point = std::vector<double>(point, point + point_len);
        }
        set_output(summary, shadowgpt::app::oracle(config->config, o));
    });
}

sg_status sg_ground_state_solve(sg_family family, const double *params, size_t n_params, int n_qubits,
                                sg_ground_state **out) {
    return guard([&] {
        require(params, "params");
        require(out, "out");
        shadowgpt::qsim::HamiltonianSpec spec;
        spec.family = to_family(family);
        spec.params.assign(params, params + n_params);
        spec.n_qubits = n_qubits;
        *out = new sg_ground_state{shadowgpt::qsim::solve(spec)};
    });
}

sg_status sg_ground_state_energy(const sg_ground_state *gs, double *energy) {
    return guard([&] {
        require(gs, "gs");
        require(energy, "energy");
        *energy = gs->gs.energy;
    });
}

sg_status sg_ground_state_degeneracy(const sg_ground_state *gs, size_t *degeneracy) {
    return guard([&] {
        require(gs, "gs");
        require(degeneracy, "degeneracy");
        *degeneracy = gs->gs.degeneracy();
    });
}

sg_status sg_ground_state_expect(const sg_ground_state *gs, const char *pauli, double *value) {
    return guard([&] {
        require(gs, "gs");
        require(pauli, "pauli");
        require(value, "value");
        *value = shadowgpt::qsim::expect_pauli(gs->gs, shadowgpt::qsim::PauliString::parse(pauli));
    });
}

sg_status sg_ground_state_renyi2(const sg_ground_state *gs, const int *sites, size_t n_sites, double *value) {
    return guard([&] {
        require(gs, "gs");
        require(sites, "sites");
        require(value, "value");
        std::vector<int> region(sites, sites + n_sites);
        *value = shadowgpt::qsim::renyi2_exact(gs->gs, region);
    });
}

void sg_ground_state_free(sg_ground_state *gs) {
    delete gs;
}

sg_status sg_model_load(const char *checkpoint_path, sg_model **out) {
    return guard([&] {
        require(checkpoint_path, "checkpoint_path");
        require(out, "out");
        auto ckpt = shadowgpt::gpt::load_checkpoint(checkpoint_path);
        *out = new sg_model{shadowgpt::gpt::model_from(ckpt)};
    });
}

sg_status sg_model_info(const sg_model *model, int *n_qubits, int *param_dim, int *precision_bits) {
    return guard([&] {
        require(model, "model");
        const auto &c = shadowgpt::gpt::config_of(model->model);
        if (n_qubits) {
            *n_qubits = c.n_qubits;
        }
        if (param_dim) {
            *param_dim = c.param_dim;
        }
        if (precision_bits) {
            *precision_bits = static_cast<int>(c.precision);
        }
    });
}

sg_status sg_model_sample(const sg_model *model, const double *params, const char *basis, uint64_t seed,
                          int8_t *outcomes) {
    return guard([&] {
        require(model, "model");
        require(params, "params");
        require(basis, "basis");
        require(outcomes, "outcomes");
        const auto &c = shadowgpt::gpt::config_of(model->model);
        if (std::strlen(basis) != static_cast<size_t>(c.n_qubits)) {
            throw shadowgpt::ParameterError("basis must have exactly N=" + std::to_string(c.n_qubits) + " letters");
        }
        shadowgpt::shadow::PauliBasisString b;
        for (size_t k = 0; k < static_cast<size_t>(c.n_qubits); k++) {
            b.bases.push_back(shadowgpt::qsim::parse_pauli(basis[k]));
        }
        shadowgpt::Rng rng(seed);
        auto o = shadowgpt::gpt::sample_outcomes(model->model, std::span<const double>(params, c.param_dim), b, rng);
        std::memcpy(outcomes, o.outcomes.data(), o.outcomes.size());
    });
}

void sg_model_free(sg_model *model) {
    delete model;
}

}  // extern "C"
