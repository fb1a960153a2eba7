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

#include "gpt/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "alloc.hpp"
#include "common.hpp"
#include "gpt/kernels.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace shadowgpt::gpt {

void ModelConfig::validate() const {
    auto positive = [](int v, const char *name) {
        if (v <= 0) {
            throw ParameterError(std::string("model ") + name + " must be positive (got " + std::to_string(v) + ")");
        }
    };
    positive(d_model, "d_model");
    positive(n_layers, "n_layers");
    positive(n_heads, "n_heads");
    positive(d_ff, "d_ff");
    positive(n_qubits, "n_qubits");
    positive(param_dim, "param_dim");
    if (d_model % n_heads != 0) {
        throw ParameterError("model d_model must be divisible by n_heads (got " + std::to_string(d_model) + " and " +
                             std::to_string(n_heads) + ")");
    }
    if (vocab_size != 5) {
        throw ParameterError("model vocab_size must be 5");
    }
    if (precision != Precision::F64 && precision != Precision::F32) {
        throw ParameterError("model precision must be f64 or f32");
    }
}

ParamLayout::ParamLayout(const ModelConfig &c) {
    c.validate();
    const int d = c.d_model;
    tok_emb = add("tok_emb", {c.vocab_size, d}, true);
    pos_emb = add("pos_emb", {c.token_slots(), d}, true);
    genc_w1 = add("genc.w1", {c.param_dim, d}, true);
    genc_b1 = add("genc.b1", {d}, false);
    genc_w2 = add("genc.w2", {d, d}, true);
    genc_b2 = add("genc.b2", {d}, false);
    for (int l = 0; l < c.n_layers; l++) {
        std::string p = "layer" + std::to_string(l) + ".";
        LayerSlots s{};
        s.ln1_g = add(p + "ln1.scale", {d}, false);
        s.ln1_b = add(p + "ln1.offset", {d}, false);
        s.w_qkv = add(p + "attn.w_qkv", {d, 3 * d}, true);
        s.b_qkv = add(p + "attn.b_qkv", {3 * d}, false);
        s.w_o = add(p + "attn.w_o", {d, d}, true);
        s.b_o = add(p + "attn.b_o", {d}, false);
        s.ln2_g = add(p + "ln2.scale", {d}, false);
        s.ln2_b = add(p + "ln2.offset", {d}, false);
        s.w_ff1 = add(p + "ff.w1", {d, c.d_ff}, true);
        s.b_ff1 = add(p + "ff.b1", {c.d_ff}, false);
        s.w_ff2 = add(p + "ff.w2", {c.d_ff, d}, true);
        s.b_ff2 = add(p + "ff.b2", {d}, false);
        layers.push_back(s);
    }
    lnf_g = add("lnf.scale", {d}, false);
    lnf_b = add("lnf.offset", {d}, false);
    head_w = add("head.w", {d, 2}, true);
    head_b = add("head.b", {2}, false);
}

size_t ParamLayout::add(std::string name, std::vector<int> shape, bool decay) {
    size_t size = 1;
    for (int s : shape) {
        size *= static_cast<size_t>(s);
    }
    tensors_.push_back({std::move(name), std::move(shape), total_, size, decay});
    size_t offset = total_;
    total_ += size;
    return offset;
}

std::vector<uint8_t> ParamLayout::decay_mask() const {
    std::vector<uint8_t> mask(total_, 0);
    for (const auto &t : tensors_) {
        std::fill(mask.begin() + t.offset, mask.begin() + t.offset + t.size, t.decay ? 1 : 0);
    }
    return mask;
}

template <typename S>
ModelParams<S> ModelParams<S>::zeros(const ModelConfig &config) {
    ModelParams p;
    p.config = config;
    p.layout = ParamLayout(config);
    p.values.assign(p.layout.total(), S(0));
    return p;
}

template <typename S>
ModelParams<S> ModelParams<S>::init(const ModelConfig &config, uint64_t seed) {
    ModelParams p = zeros(config);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto &t : p.layout.tensors()) {
        bool is_scale = t.name.ends_with(".scale");
        for (size_t k = 0; k < t.size; k++) {
            S &v = p.values[t.offset + k];
            if (is_scale) {
                v = S(1);
            } else if (t.decay) {
                double z;
                do {
                    z = normal(rng);
                } while (std::abs(z) > 2.0);
                v = static_cast<S>(0.02 * z);
            }
        }
    }
    return p;
}

template <typename S>
void ModelParams<S>::zero_head() {
    std::fill(values.begin() + layout.head_w, values.begin() + layout.head_w + 2 * config.d_model, S(0));
    std::fill(values.begin() + layout.head_b, values.begin() + layout.head_b + 2, S(0));
}

const ModelConfig &config_of(const AnyModel &model) {
    return std::visit([](const auto &m) -> const ModelConfig & { return m.config; }, model);
}

namespace {

template <typename S>
void check_batch(const ModelConfig &c, const BatchView &batch) {
    if (batch.size == 0) {
        throw ParameterError("batch must be non-empty");
    }
    if (batch.params.size() != batch.size * c.param_dim) {
        throw ParameterError("parameter vector length does not match model param_dim=" +
                             std::to_string(c.param_dim));
    }
    if (batch.tokens.size() != batch.size * c.token_slots()) {
        throw ParameterError("token sequence length does not match 2N=" + std::to_string(c.token_slots()));
    }
    for (size_t k = 0; k < batch.tokens.size(); k++) {
        uint8_t t = batch.tokens[k];
        bool basis_slot = (k % 2) == 0;
        if (basis_slot ? (t < 2 || t > 4) : (t > 1)) {
            throw ParameterError("token " + std::to_string(t) + " invalid at slot " +
                                 std::to_string(k % c.token_slots()));
        }
    }
}

template <typename S>
void check_finite(const MatR<S> &m, const std::string &where) {
    if (!m.allFinite()) {
        throw NumericError("non-finite activation in " + where);
    }
}

}  // namespace

namespace {

/// The first L positions of every record's input sequence.
template <typename S>
MatR<S> embed_prefix(const ModelParams<S> &p, const BatchView &batch, ForwardCache<S> *cache, int L) {
    const ModelConfig &c = p.config;
    check_batch<S>(c, batch);
    const int d = c.d_model;
    const ParamLayout &lay = p.layout;
    const size_t B = batch.size;

    MatR<S> g_in(B, c.param_dim);
    for (size_t b = 0; b < B; b++) {
        for (int k = 0; k < c.param_dim; k++) {
            g_in(b, k) = static_cast<S>(batch.params[b * c.param_dim + k]);
        }
    }
    MatR<S> g_pre;
    linear_forward<S>(g_in, p.mat(lay.genc_w1, c.param_dim, d), p.vec(lay.genc_b1, d), g_pre);
    MatR<S> g_tanh;
    MatR<S> g_act = gelu<S>(g_pre, &g_tanh);
    MatR<S> g_out;
    linear_forward<S>(g_act, p.mat(lay.genc_w2, d, d), p.vec(lay.genc_b2, d), g_out);

    auto tok = p.mat(lay.tok_emb, c.vocab_size, d);
    auto pos = p.mat(lay.pos_emb, c.token_slots(), d);
    MatR<S> x(B * L, d);
    for (size_t b = 0; b < B; b++) {
        x.row(b * L) = g_out.row(b);
        for (int t = 0; t + 1 < L; t++) {
            x.row(b * L + 1 + t) = tok.row(batch.tokens[b * c.token_slots() + t]) + pos.row(t);
        }
    }
    if (cache) {
        cache->g_in = std::move(g_in);
        cache->g_pre = std::move(g_pre);
        cache->g_tanh = std::move(g_tanh);
        cache->g_act = std::move(g_act);
    }
    return x;
}

/// Positions the training pass runs over. The final outcome token b_N sits
/// after the last P slot and is never read, so it is left out.
int trained_positions(const ModelConfig &c) {
    return c.seq_len() - 1;
}

}  // namespace

template <typename S>
MatR<S> embed(const ModelParams<S> &p, const BatchView &batch, ForwardCache<S> *cache) {
    return embed_prefix<S>(p, batch, cache, p.config.seq_len());
}

template <typename S>
void forward(const ModelParams<S> &p, const BatchView &batch, ForwardCache<S> &cache) {
    const ModelConfig &c = p.config;
    const ParamLayout &lay = p.layout;
    const int d = c.d_model;
    const int L = trained_positions(c);
    const int N = c.n_qubits;
    const size_t B = batch.size;

    cache.batch = B;
    cache.tokens.assign(batch.tokens.begin(), batch.tokens.end());
    cache.x0 = embed_prefix<S>(p, batch, &cache, L);
    check_finite<S>(cache.x0, "embedding");
    cache.layers.resize(c.n_layers);

    MatR<S> x = cache.x0;
    for (int l = 0; l < c.n_layers; l++) {
        const LayerSlots &s = lay.layers[l];
        LayerCache<S> &lc = cache.layers[l];
        lc.x_in = x;
        layer_norm_forward<S>(x, p.vec(s.ln1_g, d), p.vec(s.ln1_b, d), lc.xhat1, lc.rstd1, lc.a1);
        linear_forward<S>(lc.a1, p.mat(s.w_qkv, d, 3 * d), p.vec(s.b_qkv, 3 * d), lc.qkv);
        attention_forward<S>(lc.qkv, B, L, d, c.n_heads, lc.probs, lc.ctx);
        MatR<S> attn;
        linear_forward<S>(lc.ctx, p.mat(s.w_o, d, d), p.vec(s.b_o, d), attn);
        lc.h = x + attn;
        layer_norm_forward<S>(lc.h, p.vec(s.ln2_g, d), p.vec(s.ln2_b, d), lc.xhat2, lc.rstd2, lc.a2);
        linear_forward<S>(lc.a2, p.mat(s.w_ff1, d, c.d_ff), p.vec(s.b_ff1, c.d_ff), lc.f1);
        lc.u = gelu<S>(lc.f1, &lc.f1_tanh);
        MatR<S> f2;
        linear_forward<S>(lc.u, p.mat(s.w_ff2, c.d_ff, d), p.vec(s.b_ff2, d), f2);
        x = lc.h + f2;
        check_finite<S>(x, "layer " + std::to_string(l));
    }

    // Only the P_i positions feed the head.
    cache.sel_x.resize(B * N, d);
    for (size_t b = 0; b < B; b++) {
        for (int i = 0; i < N; i++) {
            cache.sel_x.row(b * N + i) = x.row(b * L + 2 * i + 1);
        }
    }
    layer_norm_forward<S>(cache.sel_x, p.vec(lay.lnf_g, d), p.vec(lay.lnf_b, d), cache.sel_xhat, cache.sel_rstd,
                          cache.sel_a);
    MatR<S> logits;
    linear_forward<S>(cache.sel_a, p.mat(lay.head_w, d, 2), p.vec(lay.head_b, 2), logits);
    cache.logp = log_softmax2<S>(logits);
    check_finite<S>(cache.logp, "output head");
}

template <typename S>
void backward(const ModelParams<S> &p, const ForwardCache<S> &cache, const MatR<S> &dlogp, std::span<S> grad) {
    const ModelConfig &c = p.config;
    const ParamLayout &lay = p.layout;
    const int d = c.d_model;
    const int L = trained_positions(c);
    const int N = c.n_qubits;
    const size_t B = cache.batch;
    S *g = grad.data();

    // Head and final norm on the selected rows.
    MatR<S> dlogits = log_softmax2_backward<S>(cache.logp, dlogp);
    MatR<S> dsel_a;
    linear_backward<S>(cache.sel_a, p.mat(lay.head_w, d, 2), dlogits, gmat<S>(g, lay.head_w, d, 2),
                       gvec<S>(g, lay.head_b, 2), &dsel_a);
    MatR<S> dsel_x;
    layer_norm_backward<S>(dsel_a, cache.sel_xhat, cache.sel_rstd, p.vec(lay.lnf_g, d), gvec<S>(g, lay.lnf_g, d),
                           gvec<S>(g, lay.lnf_b, d), dsel_x);
    MatR<S> dx = MatR<S>::Zero(B * L, d);
    for (size_t b = 0; b < B; b++) {
        for (int i = 0; i < N; i++) {
            dx.row(b * L + 2 * i + 1) = dsel_x.row(b * N + i);
        }
    }

    for (int l = c.n_layers - 1; l >= 0; l--) {
        const LayerSlots &s = lay.layers[l];
        const LayerCache<S> &lc = cache.layers[l];
        // x_out = h + FFN(LN2(h))
        MatR<S> du;
        linear_backward<S>(lc.u, p.mat(s.w_ff2, c.d_ff, d), dx, gmat<S>(g, s.w_ff2, c.d_ff, d),
                           gvec<S>(g, s.b_ff2, d), &du);
        MatR<S> df1 = gelu_backward<S>(lc.f1, lc.f1_tanh, du);
        MatR<S> da2;
        linear_backward<S>(lc.a2, p.mat(s.w_ff1, d, c.d_ff), df1, gmat<S>(g, s.w_ff1, d, c.d_ff),
                           gvec<S>(g, s.b_ff1, c.d_ff), &da2);
        MatR<S> dh_norm;
        layer_norm_backward<S>(da2, lc.xhat2, lc.rstd2, p.vec(s.ln2_g, d), gvec<S>(g, s.ln2_g, d),
                               gvec<S>(g, s.ln2_b, d), dh_norm);
        MatR<S> dh = dx + dh_norm;
        // h = x_in + Attn(LN1(x_in))
        MatR<S> dctx;
        linear_backward<S>(lc.ctx, p.mat(s.w_o, d, d), dh, gmat<S>(g, s.w_o, d, d), gvec<S>(g, s.b_o, d), &dctx);
        MatR<S> dqkv;
        attention_backward<S>(lc.qkv, lc.probs, dctx, B, L, d, c.n_heads, dqkv);
        MatR<S> da1;
        linear_backward<S>(lc.a1, p.mat(s.w_qkv, d, 3 * d), dqkv, gmat<S>(g, s.w_qkv, d, 3 * d),
                           gvec<S>(g, s.b_qkv, 3 * d), &da1);
        MatR<S> dx_norm;
        layer_norm_backward<S>(da1, lc.xhat1, lc.rstd1, p.vec(s.ln1_g, d), gvec<S>(g, s.ln1_g, d),
                               gvec<S>(g, s.ln1_b, d), dx_norm);
        dx = dh + dx_norm;
    }

    // Embeddings.
    auto dtok = gmat<S>(g, lay.tok_emb, c.vocab_size, d);
    auto dpos = gmat<S>(g, lay.pos_emb, c.token_slots(), d);
    MatR<S> dg_out(B, d);
    for (size_t b = 0; b < B; b++) {
        dg_out.row(b) = dx.row(b * L);
        for (int t = 0; t + 1 < L; t++) {
            auto row = dx.row(b * L + 1 + t);
            dtok.row(cache.tokens[b * c.token_slots() + t]) += row;
            dpos.row(t) += row;
        }
    }
    MatR<S> dg_act;
    linear_backward<S>(cache.g_act, p.mat(lay.genc_w2, d, d), dg_out, gmat<S>(g, lay.genc_w2, d, d),
                       gvec<S>(g, lay.genc_b2, d), &dg_act);
    MatR<S> dg_pre = gelu_backward<S>(cache.g_pre, cache.g_tanh, dg_act);
    linear_backward<S>(cache.g_in, p.mat(lay.genc_w1, c.param_dim, d), dg_pre,
                       gmat<S>(g, lay.genc_w1, c.param_dim, d), gvec<S>(g, lay.genc_b1, d), nullptr);
}

namespace {

BatchView slice(const BatchView &batch, size_t begin, size_t end, int param_dim, int slots) {
    BatchView out;
    out.size = end - begin;
    out.params = batch.params.subspan(begin * param_dim, out.size * param_dim);
    out.tokens = batch.tokens.subspan(begin * slots, out.size * slots);
    return out;
}

template <typename S>
double chunk_nll(const ForwardCache<S> &cache, int N, std::vector<double> *per_record) {
    double total = 0.0;
    for (size_t b = 0; b < cache.batch; b++) {
        double rec = 0.0;
        for (int i = 0; i < N; i++) {
            uint8_t target = cache.tokens[b * 2 * N + 2 * i + 1];
            rec -= static_cast<double>(cache.logp(b * N + i, target));
        }
        if (per_record) {
            per_record->push_back(rec);
        }
        total += rec;
    }
    return total;
}

}  // namespace

template <typename S>
std::vector<double> record_nll(const ModelParams<S> &p, const BatchView &batch) {
    ForwardCache<S> cache;
    forward<S>(p, batch, cache);
    std::vector<double> out;
    chunk_nll<S>(cache, p.config.n_qubits, &out);
    return out;
}

template <typename S>
double loss(const ModelParams<S> &p, const BatchView &batch, int chunk_records) {
    const ModelConfig &c = p.config;
    check_batch<S>(c, batch);
    double total = 0.0;
    for (size_t begin = 0; begin < batch.size; begin += chunk_records) {
        size_t end = std::min(batch.size, begin + chunk_records);
        ForwardCache<S> cache;
        forward<S>(p, slice(batch, begin, end, c.param_dim, c.token_slots()), cache);
        total += chunk_nll<S>(cache, c.n_qubits, nullptr);
    }
    return total / static_cast<double>(batch.size);
}

template <typename S>
double loss_and_grad(const ModelParams<S> &p, const BatchView &batch, std::vector<S> &grad, int threads,
                     int chunk_records) {
    keep_heap_resident();
    const ModelConfig &c = p.config;
    check_batch<S>(c, batch);
    const int N = c.n_qubits;
    const size_t n_chunks = (batch.size + chunk_records - 1) / chunk_records;
    const size_t workers = std::clamp<size_t>(threads, 1, n_chunks);
    const S scale = S(1) / static_cast<S>(batch.size);

    std::vector<std::vector<S>> buffers(workers);
    std::vector<double> chunk_loss(n_chunks, 0.0);
    parallel_for(workers, static_cast<int>(workers), [&](size_t w) {
        std::vector<S> &buf = buffers[w];
        buf.assign(p.layout.total(), S(0));
        for (size_t k = w; k < n_chunks; k += workers) {
            size_t begin = k * chunk_records;
            size_t end = std::min(batch.size, begin + chunk_records);
            ForwardCache<S> cache;
            forward<S>(p, slice(batch, begin, end, c.param_dim, c.token_slots()), cache);
            chunk_loss[k] = chunk_nll<S>(cache, N, nullptr);
            MatR<S> dlogp = MatR<S>::Zero(cache.logp.rows(), 2);
            for (size_t b = 0; b < cache.batch; b++) {
                for (int i = 0; i < N; i++) {
                    dlogp(b * N + i, cache.tokens[b * 2 * N + 2 * i + 1]) = -scale;
                }
            }
            backward<S>(p, cache, dlogp, std::span<S>(buf));
        }
    });
    grad = std::move(buffers[0]);
    for (size_t w = 1; w < workers; w++) {
        for (size_t k = 0; k < grad.size(); k++) {
            grad[k] += buffers[w][k];
        }
    }
    double total = 0.0;
    for (double v : chunk_loss) {
        total += v;
    }
    return total / static_cast<double>(batch.size);
}

#define SHADOWGPT_INSTANTIATE_MODEL(S)                                                                          \
    template struct ModelParams<S>;                                                                             \
    template MatR<S> embed<S>(const ModelParams<S> &, const BatchView &, ForwardCache<S> *);                    \
    template void forward<S>(const ModelParams<S> &, const BatchView &, ForwardCache<S> &);                     \
    template void backward<S>(const ModelParams<S> &, const ForwardCache<S> &, const MatR<S> &, std::span<S>);  \
    template std::vector<double> record_nll<S>(const ModelParams<S> &, const BatchView &);                      \
    template double loss<S>(const ModelParams<S> &, const BatchView &, int);                                    \
    template double loss_and_grad<S>(const ModelParams<S> &, const BatchView &, std::vector<S> &, int, int);

SHADOWGPT_INSTANTIATE_MODEL(double)
SHADOWGPT_INSTANTIATE_MODEL(float)

}  // namespace shadowgpt::gpt
