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

#include "gpt/checkpoint.hpp"

#include "binio.hpp"
#include "common.hpp"

namespace shadowgpt::gpt {

namespace {

constexpr std::string_view kMagic = "SGPTCKPT";
constexpr uint32_t kVersion = 1;

}  // namespace

std::string encode_checkpoint(const Checkpoint &ckpt) {
    const ModelConfig &c = ckpt.config;
    ParamLayout layout(c);
    if (ckpt.values.size() != layout.total()) {
        throw ParameterError("checkpoint values do not match the model layout");
    }
    binio::Writer w;
    w.bytes(kMagic);
    w.u32(kVersion);
    w.u8(static_cast<uint8_t>(c.precision));
    w.u8(static_cast<uint8_t>(ckpt.family));
    for (int v : {c.d_model, c.n_layers, c.n_heads, c.d_ff, c.n_qubits, c.param_dim, c.vocab_size}) {
        w.i32(v);
    }
    w.u32(static_cast<uint32_t>(layout.tensors().size()));
    for (const auto &t : layout.tensors()) {
        w.u16(static_cast<uint16_t>(t.name.size()));
        w.bytes(t.name);
        w.u8(static_cast<uint8_t>(t.shape.size()));
        for (int s : t.shape) {
            w.i32(s);
        }
        for (size_t k = 0; k < t.size; k++) {
            w.f64(ckpt.values[t.offset + k]);
        }
    }
    w.u8(ckpt.progress ? 1 : 0);
    if (ckpt.progress) {
        const TrainProgress &p = *ckpt.progress;
        if (p.m.size() != layout.total() || p.v.size() != layout.total()) {
            throw ParameterError("checkpoint optimizer state does not match the model layout");
        }
        w.u64(p.step);
        w.u32(p.epochs_done);
        w.f64(p.best_val_loss);
        w.f64(p.initial_loss);
        w.u32(p.divergence_streak);
        for (double x : p.m) {
            w.f64(x);
        }
        for (double x : p.v) {
            w.f64(x);
        }
    }
    return w.data();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    binio::Reader r(bytes, "checkpoint");
    if (r.bytes(kMagic.size()) != kMagic) {
        throw IoError("checkpoint: bad magic bytes");
    }
    uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ModelConfig &c = ckpt.config;
    uint8_t precision = r.u8();
    if (precision != 32 && precision != 64) {
        throw IoError("checkpoint: unknown precision tag " + std::to_string(precision));
    }
    c.precision = static_cast<Precision>(precision);
    uint8_t family = r.u8();
    if (family > 1) {
        throw IoError("checkpoint: unknown family tag " + std::to_string(family));
    }
    ckpt.family = static_cast<qsim::Family>(family);
    c.d_model = r.i32();
    c.n_layers = r.i32();
    c.n_heads = r.i32();
    c.d_ff = r.i32();
    c.n_qubits = r.i32();
    c.param_dim = r.i32();
    c.vocab_size = r.i32();
    ParamLayout layout;
    try {
        layout = ParamLayout(c);
    } catch (const ParameterError &e) {
        throw IoError(std::string("checkpoint: invalid model config: ") + e.what());
    }
    uint32_t count = r.u32();
    if (count != layout.tensors().size()) {
        throw IoError("checkpoint: tensor count mismatch");
    }
    ckpt.values.resize(layout.total());
    for (const auto &t : layout.tensors()) {
        uint16_t len = r.u16();
        if (r.bytes(len) != t.name) {
            throw IoError("checkpoint: expected tensor '" + t.name + "'");
        }
        uint8_t rank = r.u8();
        if (rank != t.shape.size()) {
            throw IoError("checkpoint: rank mismatch for '" + t.name + "'");
        }
        for (int s : t.shape) {
            if (r.i32() != s) {
                throw IoError("checkpoint: shape mismatch for '" + t.name + "'");
            }
        }
        for (size_t k = 0; k < t.size; k++) {
            ckpt.values[t.offset + k] = r.f64();
        }
    }
    if (r.u8()) {
        TrainProgress p;
        p.step = r.u64();
        p.epochs_done = r.u32();
        p.best_val_loss = r.f64();
        p.initial_loss = r.f64();
        p.divergence_streak = r.u32();
        p.m.resize(layout.total());
        p.v.resize(layout.total());
        for (double &x : p.m) {
            x = r.f64();
        }
        for (double &x : p.v) {
            x = r.f64();
        }
        ckpt.progress = std::move(p);
    }
    if (r.remaining() != 0) {
        throw IoError("checkpoint: trailing bytes");
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt) {
    binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    return decode_checkpoint(binio::read_file(path));
}

AnyModel model_from(const Checkpoint &ckpt) {
    if (ckpt.config.precision == Precision::F32) {
        return params_from<float>(ckpt);
    }
    return params_from<double>(ckpt);
}

Checkpoint checkpoint_of(const AnyModel &model, qsim::Family family) {
    return std::visit([&](const auto &m) { return make_checkpoint(m, family); }, model);
}

}  // namespace shadowgpt::gpt
