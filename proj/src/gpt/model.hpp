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

// Decoder-only transformer over interleaved shadow tokens.
//
// Sequence layout for one record (L = 2N + 1 positions):
//
//   position 0        : g-encoder output (no positional encoding)
//   position 2i + 1   : basis token P_i  + pos_emb[2i]
//   position 2i + 2   : outcome token b_i + pos_emb[2i + 1]
//
// The head reads the final hidden state at every P_i position and emits
// log p(b_i | P_{<=i}, b_{<i}, g) over {+1, -1} (token ids 0 and 1).
// Each block is pre-norm: x + Attn(LN(x)), then h + FFN(LN(h)).

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace shadowgpt::gpt {

template <typename S>
using MatR = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using ColVec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Precision : uint8_t {
    F64 = 64,
    F32 = 32,
};

struct ModelConfig {
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 8;
    int d_ff = 512;
    int n_qubits = 10;
    int param_dim = 1;
    int vocab_size = 5;
    Precision precision = Precision::F64;

    int seq_len() const {
        return 2 * n_qubits + 1;
    }
    int token_slots() const {
        return 2 * n_qubits;
    }
    int head_dim() const {
        return d_model / n_heads;
    }
    void validate() const;
    bool operator==(const ModelConfig &) const = default;
};

struct TensorInfo {
    std::string name;
    std::vector<int> shape;
    size_t offset = 0;
    size_t size = 0;
    bool decay = false;
};

struct LayerSlots {
    size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_ff1, b_ff1, w_ff2, b_ff2;
};

/// Offsets of every tensor inside one flat parameter vector, in declared order.
class ParamLayout {
   public:
    ParamLayout() = default;
    explicit ParamLayout(const ModelConfig &config);

    const std::vector<TensorInfo> &tensors() const {
        return tensors_;
    }
    size_t total() const {
        return total_;
    }
    /// 1 for entries subject to weight decay (matrices and embeddings).
    std::vector<uint8_t> decay_mask() const;

    size_t tok_emb = 0, pos_emb = 0;
    size_t genc_w1 = 0, genc_b1 = 0, genc_w2 = 0, genc_b2 = 0;
    std::vector<LayerSlots> layers;
    size_t lnf_g = 0, lnf_b = 0, head_w = 0, head_b = 0;

   private:
    size_t add(std::string name, std::vector<int> shape, bool decay);
    std::vector<TensorInfo> tensors_;
    size_t total_ = 0;
};

template <typename S>
struct ModelParams {
    ModelConfig config;
    ParamLayout layout;
    std::vector<S> values;

    /// Truncated normal (std 0.02, cut at 2 std) for embeddings and projections,
    /// unit LayerNorm scales, zero biases and offsets.
    static ModelParams init(const ModelConfig &config, uint64_t seed);
    static ModelParams zeros(const ModelConfig &config);

    Eigen::Map<const MatR<S>> mat(size_t offset, int rows, int cols) const {
        return {values.data() + offset, rows, cols};
    }
    Eigen::Map<const RowVec<S>> vec(size_t offset, int n) const {
        return {values.data() + offset, n};
    }
    /// Zero-fills the output head so every conditional is uniform.
    void zero_head();
};

/// Token and parameter inputs for `size` records, both row-major.
struct BatchView {
    size_t size = 0;
    std::span<const double> params;   // size x param_dim
    std::span<const uint8_t> tokens;  // size x 2N
};

template <typename S>
struct LayerCache {
    MatR<S> x_in, xhat1, a1, qkv, ctx, h, xhat2, a2, f1, f1_tanh, u;
    ColVec<S> rstd1, rstd2;
    std::vector<S> probs;  // (batch, head, L, L)
};

template <typename S>
struct ForwardCache {
    size_t batch = 0;
    std::vector<uint8_t> tokens;
    MatR<S> g_in, g_pre, g_tanh, g_act;
    MatR<S> x0;
    std::vector<LayerCache<S>> layers;
    MatR<S> sel_x, sel_xhat, sel_a;
    ColVec<S> sel_rstd;
    /// Row (b * N + i) holds [log p(+1), log p(-1)] for qubit i of record b.
    MatR<S> logp;
};

/// The (2N + 1) x d input sequence per record, stacked as batch * L rows.
template <typename S>
MatR<S> embed(const ModelParams<S> &params, const BatchView &batch, ForwardCache<S> *cache = nullptr);

/// Fills cache.logp. Throws NumericError naming the layer on non-finite activations.
template <typename S>
void forward(const ModelParams<S> &params, const BatchView &batch, ForwardCache<S> &cache);

/// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(logp).
template <typename S>
void backward(const ModelParams<S> &params, const ForwardCache<S> &cache, const MatR<S> &dlogp, std::span<S> grad);

/// Per-record negative log-likelihood -sum_i log p(b_i | ...).
template <typename S>
std::vector<double> record_nll(const ModelParams<S> &params, const BatchView &batch);

/// Mean negative log-likelihood over the batch.
template <typename S>
double loss(const ModelParams<S> &params, const BatchView &batch, int chunk_records = 32);

/// Mean NLL and its exact gradient (overwrites `grad`). The batch is cut into
/// fixed chunks; chunk c runs on worker c % threads and worker buffers are
/// reduced in worker order, so the result depends only on the thread count.
template <typename S>
double loss_and_grad(const ModelParams<S> &params, const BatchView &batch, std::vector<S> &grad, int threads = 1,
                     int chunk_records = 32);

using AnyModel = std::variant<ModelParams<double>, ModelParams<float>>;

const ModelConfig &config_of(const AnyModel &model);

}  // namespace shadowgpt::gpt
