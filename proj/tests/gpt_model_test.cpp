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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "dataset.hpp"
#include "gpt/checkpoint.hpp"
#include "gpt/kernels.hpp"
#include "gpt/model.hpp"
#include "gpt/sampler.hpp"
#include "oracles.hpp"
#include "rng.hpp"

namespace shadowgpt::gpt {
namespace {

struct Batch {
    std::vector<double> params;
    std::vector<uint8_t> tokens;
    size_t size = 0;
    BatchView view() const {
        return {size, params, tokens};
    }
};

Batch random_batch(const ModelConfig &c, size_t size, uint64_t seed) {
    Rng rng(seed);
    Batch b;
    b.size = size;
    for (size_t r = 0; r < size; r++) {
        for (int k = 0; k < c.param_dim; k++) {
            b.params.push_back(uniform01(rng));
        }
        for (int i = 0; i < c.n_qubits; i++) {
            b.tokens.push_back(static_cast<uint8_t>(dataset::kX + uniform_below(rng, 3)));
            b.tokens.push_back(static_cast<uint8_t>(uniform_below(rng, 2)));
        }
    }
    return b;
}

ModelConfig small_config(int n_qubits, int param_dim = 1) {
    ModelConfig c;
    c.n_qubits = n_qubits;
    c.param_dim = param_dim;
    return c;
}

/// Initialized parameters with every entry jittered so that biases, offsets
/// and scales all sit away from their special initial values.
ModelParams<double> jittered(const ModelConfig &c, uint64_t seed) {
    ModelParams<double> p = ModelParams<double>::init(c, seed);
    std::mt19937_64 gen(seed + 1);
    std::normal_distribution<double> normal(0.0, 0.05);
    for (double &v : p.values) {
        v += normal(gen);
    }
    return p;
}

template <typename S>
MatR<S> logp_of(const ModelParams<S> &p, const BatchView &view) {
    ForwardCache<S> cache;
    forward(p, view, cache);
    return cache.logp;
}

TEST(ModelConfigTest, Validation) {
    ModelConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.seq_len(), 21);
    c.n_heads = 7;
    EXPECT_THROW(c.validate(), ParameterError);
    c = ModelConfig{};
    c.d_ff = 0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = ModelConfig{};
    c.vocab_size = 6;
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(ParamLayoutTest, DeclaredOrderAndDecayMask) {
    ModelConfig c = small_config(10);
    ParamLayout lay(c);
    const auto &t = lay.tensors();
    EXPECT_EQ(t.front().name, "tok_emb");
    EXPECT_EQ(t.front().shape, (std::vector<int>{5, 128}));
    EXPECT_EQ(t[1].name, "pos_emb");
    EXPECT_EQ(t[1].shape, (std::vector<int>{20, 128}));
    EXPECT_EQ(t.back().name, "head.b");
    size_t offset = 0;
    for (const auto &info : t) {
        EXPECT_EQ(info.offset, offset);
        offset += info.size;
        EXPECT_EQ(info.decay, info.shape.size() == 2) << info.name;
    }
    EXPECT_EQ(offset, lay.total());
    auto mask = lay.decay_mask();
    EXPECT_EQ(mask.size(), lay.total());
    EXPECT_EQ(mask[lay.head_b], 0);
    EXPECT_EQ(mask[lay.head_w], 1);
}

TEST(ModelParamsTest, InitializationScheme) {
    ModelConfig c = small_config(6);
    ModelParams<double> p = ModelParams<double>::init(c, 3);
    for (const auto &t : p.layout.tensors()) {
        std::span<const double> v(p.values.data() + t.offset, t.size);
        if (t.name.ends_with(".scale")) {
            EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x == 1.0; })) << t.name;
        } else if (!t.decay) {
            EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) << t.name;
        } else {
            EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return std::abs(x) <= 0.04; })) << t.name;
        }
    }
    auto w = p.mat(p.layout.layers[0].w_ff1, 128, 512);
    double var = w.array().square().mean();
    EXPECT_NEAR(std::sqrt(var), 0.02 * 0.88, 0.002);  // std of a normal truncated at 2 sigma
    EXPECT_EQ(ModelParams<double>::init(c, 3).values, p.values);
    EXPECT_NE(ModelParams<double>::init(c, 4).values, p.values);
}

TEST(EmbedTest, ShapeAndLocalityOfTheParameterSlot) {
    ModelConfig c = small_config(4);
    ModelParams<double> p = jittered(c, 1);
    Batch b = random_batch(c, 2, 5);
    b.tokens = std::vector<uint8_t>(b.tokens.begin(), b.tokens.begin() + 8);
    b.tokens.insert(b.tokens.end(), b.tokens.begin(), b.tokens.end());
    b.params = {0.1, 0.9};
    MatR<double> x = embed(p, b.view());
    ASSERT_EQ(x.rows(), 2 * 9);
    ASSERT_EQ(x.cols(), 128);
    EXPECT_GT((x.row(0) - x.row(9)).norm(), 0.0);
    EXPECT_EQ(x.block(1, 0, 8, 128), x.block(10, 0, 8, 128));
}

TEST(EmbedTest, ZeroInputWeightsMakeTheSlotIndependentOfG) {
    ModelConfig c = small_config(3, 3);
    ModelParams<double> p = jittered(c, 2);
    std::fill(p.values.begin() + p.layout.genc_w1, p.values.begin() + p.layout.genc_w1 + 3 * 128, 0.0);
    Batch b = random_batch(c, 3, 6);
    MatR<double> x = embed(p, b.view());
    EXPECT_EQ(x.row(0), x.row(7));
    EXPECT_EQ(x.row(0), x.row(14));
    // Equals the bias path gelu(b1) W2 + b2.
    MatR<double> b1 = p.vec(p.layout.genc_b1, 128);
    MatR<double> expected = gelu<double>(b1) * p.mat(p.layout.genc_w2, 128, 128) + p.vec(p.layout.genc_b2, 128);
    EXPECT_LT((x.row(0) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EmbedTest, RejectsMismatchedInputs) {
    ModelConfig c = small_config(3);
    ModelParams<double> p = ModelParams<double>::init(c, 1);
    Batch b = random_batch(c, 2, 1);
    b.params.push_back(0.5);
    EXPECT_THROW(embed(p, b.view()), ParameterError);
    Batch bad = random_batch(c, 1, 1);
    bad.tokens[1] = dataset::kZ;
    EXPECT_THROW(embed(p, bad.view()), ParameterError);
}

TEST(ForwardTest, ConditionalsNormalize) {
    for (int n : {1, 3, 8}) {
        ModelConfig c = small_config(n);
        ModelParams<double> p = jittered(c, n);
        Batch b = random_batch(c, 16, n);
        MatR<double> lp = logp_of(p, b.view());
        ASSERT_EQ(lp.rows(), 16 * n);
        for (Eigen::Index r = 0; r < lp.rows(); r++) {
            EXPECT_NEAR(std::exp(lp(r, 0)) + std::exp(lp(r, 1)), 1.0, 1e-6);
        }
        c.precision = Precision::F32;
        ModelParams<float> pf = params_from<float>(make_checkpoint(p, qsim::Family::TFIM));
        MatR<float> lpf = logp_of(pf, b.view());
        for (Eigen::Index r = 0; r < lpf.rows(); r++) {
            EXPECT_NEAR(std::exp(double(lpf(r, 0))) + std::exp(double(lpf(r, 1))), 1.0, 1e-6);
            EXPECT_NEAR(lpf(r, 0), lp(r, 0), 1e-4);
        }
    }
}

TEST(ForwardTest, StrictlyCausal) {
    ModelConfig c = small_config(5);
    ModelParams<double> p = jittered(c, 9);
    Batch base = random_batch(c, 1, 3);
    MatR<double> ref = logp_of(p, base.view());
    for (int slot = 0; slot < c.token_slots(); slot++) {
        Batch changed = base;
        uint8_t &t = changed.tokens[slot];
        t = slot % 2 == 0 ? static_cast<uint8_t>(dataset::kX + (t - dataset::kX + 1) % 3) : static_cast<uint8_t>(1 - t);
        MatR<double> out = logp_of(p, changed.view());
        for (int i = 0; i < c.n_qubits; i++) {
            // Output i is read at the P_i slot, token slot 2i.
            if (slot > 2 * i) {
                EXPECT_EQ(out.row(i), ref.row(i)) << "slot " << slot << " leaked into output " << i;
            } else if (slot == 2 * i) {
                EXPECT_NE(out.row(i), ref.row(i));
            }
        }
    }
}

TEST(ForwardTest, BitwiseRepeatable) {
    ModelConfig c = small_config(6);
    ModelParams<double> p = jittered(c, 4);
    Batch b = random_batch(c, 33, 4);
    EXPECT_EQ(logp_of(p, b.view()), logp_of(p, b.view()));
    EXPECT_EQ(record_nll(p, b.view()), record_nll(p, b.view()));
}

TEST(ForwardTest, NonFiniteActivationNamesTheLayer) {
    ModelConfig c = small_config(3);
    ModelParams<double> p = ModelParams<double>::init(c, 1);
    p.values[p.layout.layers[2].w_ff2] = std::numeric_limits<double>::infinity();
    Batch b = random_batch(c, 2, 1);
    try {
        logp_of(p, b.view());
        FAIL() << "expected NumericError";
    } catch (const NumericError &e) {
        EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
    }
}

TEST(LossTest, ZeroHeadGivesUniformLoss) {
    for (int n : {1, 4, 10}) {
        ModelConfig c = small_config(n);
        ModelParams<double> p = jittered(c, 1);
        p.zero_head();
        Batch b = random_batch(c, 20, 2);
        EXPECT_NEAR(loss(p, b.view()), n * std::numbers::ln2, 1e-12);
    }
}

TEST(LossTest, MeanOfRecordNllAndOrderInvariant) {
    ModelConfig c = small_config(4);
    ModelParams<double> p = jittered(c, 5);
    Batch b = random_batch(c, 40, 5);
    std::vector<double> nll = record_nll(p, b.view());
    double mean = 0.0;
    for (double v : nll) {
        mean += v / nll.size();
    }
    EXPECT_NEAR(loss(p, b.view()), mean, 1e-12);

    Batch reversed;
    reversed.size = b.size;
    for (size_t r = b.size; r-- > 0;) {
        reversed.params.push_back(b.params[r]);
        auto first = b.tokens.begin() + r * 8;
        reversed.tokens.insert(reversed.tokens.end(), first, first + 8);
    }
    EXPECT_NEAR(loss(p, reversed.view()), loss(p, b.view()), 1e-12);
    MatR<double> lp = logp_of(p, b.view());
    double direct = 0.0;
    for (int i = 0; i < 4; i++) {
        direct -= lp(i, b.tokens[2 * i + 1]);
    }
    EXPECT_NEAR(nll[0], direct, 1e-12);
}

// Central differences with step 1e-5 on randomly drawn coordinates, with
// every tensor represented.
TEST(GradientTest, MatchesFiniteDifferences) {
    ModelConfig c = small_config(4, 3);
    ModelParams<double> p = jittered(c, 12);
    Batch b = random_batch(c, 6, 12);
    std::vector<double> grad;
    loss_and_grad(p, b.view(), grad);

    std::mt19937_64 gen(99);
    std::vector<size_t> coords;
    for (const auto &t : p.layout.tensors()) {
        for (int k = 0; k < 4; k++) {
            coords.push_back(t.offset + std::uniform_int_distribution<size_t>(0, t.size - 1)(gen));
        }
    }
    while (coords.size() < 260) {
        coords.push_back(std::uniform_int_distribution<size_t>(0, p.values.size() - 1)(gen));
    }
    const double h = 1e-5;
    double worst = 0.0;
    int checked = 0;
    for (size_t k : coords) {
        ModelParams<double> q = p;
        q.values[k] = p.values[k] + h;
        double up = loss(q, b.view());
        q.values[k] = p.values[k] - h;
        double down = loss(q, b.view());
        double fd = (up - down) / (2 * h);
        double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
        double rel = std::abs(fd - grad[k]) / scale;
        worst = std::max(worst, rel);
        EXPECT_LT(rel, 1e-4) << "coordinate " << k << " analytic " << grad[k] << " numeric " << fd;
        checked++;
    }
    EXPECT_GE(checked, 200);
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(GradientTest, UnreadPositionGetsExactlyZero) {
    ModelConfig c = small_config(5);
    ModelParams<double> p = jittered(c, 3);
    Batch b = random_batch(c, 8, 3);
    std::vector<double> grad;
    loss_and_grad(p, b.view(), grad);
    const size_t last_row = p.layout.pos_emb + static_cast<size_t>(c.token_slots() - 1) * c.d_model;
    for (int k = 0; k < c.d_model; k++) {
        EXPECT_EQ(grad[last_row + k], 0.0);
    }
    // The b_N token embedding is only reached through that position; the
    // other outcome token still appears earlier, so its row is nonzero.
    double row_norm = 0.0;
    for (int k = 0; k < c.d_model; k++) {
        row_norm += std::abs(grad[last_row - c.d_model + k]);
    }
    EXPECT_GT(row_norm, 0.0);
}

TEST(GradientTest, DuplicatedBatchLeavesGradientUnchanged) {
    ModelConfig c = small_config(4);
    ModelParams<double> p = jittered(c, 8);
    Batch b = random_batch(c, 10, 8);
    Batch twice = b;
    twice.size *= 2;
    twice.params.insert(twice.params.end(), b.params.begin(), b.params.end());
    twice.tokens.insert(twice.tokens.end(), b.tokens.begin(), b.tokens.end());
    std::vector<double> g1;
    std::vector<double> g2;
    double l1 = loss_and_grad(p, b.view(), g1);
    double l2 = loss_and_grad(p, twice.view(), g2);
    EXPECT_NEAR(l1, l2, 1e-12);
    double max_g = 0.0;
    for (double v : g1) {
        max_g = std::max(max_g, std::abs(v));
    }
    for (size_t k = 0; k < g1.size(); k++) {
        ASSERT_NEAR(g1[k], g2[k], 1e-12 * max_g) << k;
    }
}

TEST(GradientTest, ThreadCountOnlyReordersSums) {
    ModelConfig c = small_config(4);
    ModelParams<double> p = jittered(c, 2);
    Batch b = random_batch(c, 100, 2);
    std::vector<double> a;
    std::vector<double> a2;
    std::vector<double> t3;
    double la = loss_and_grad(p, b.view(), a, 1, 16);
    loss_and_grad(p, b.view(), a2, 1, 16);
    double lt = loss_and_grad(p, b.view(), t3, 3, 16);
    EXPECT_EQ(a, a2);
    EXPECT_NEAR(la, lt, 1e-12);
    for (size_t k = 0; k < a.size(); k++) {
        ASSERT_NEAR(a[k], t3[k], 1e-12);
    }
    std::vector<double> t3b;
    loss_and_grad(p, b.view(), t3b, 3, 16);
    EXPECT_EQ(t3, t3b);
}

TEST(SamplerTest, CachedDecoderMatchesForward) {
    ModelConfig c = small_config(6, 3);
    ModelParams<double> p = jittered(c, 31);
    Batch b = random_batch(c, 12, 31);
    MatR<double> full = logp_of(p, b.view());
    MatR<double> inc = incremental_logp(p, b.view());
    EXPECT_LT((full - inc).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SamplerTest, TrajectoryProbabilityMatchesLoss) {
    ModelConfig c = small_config(5);
    ModelParams<double> p = jittered(c, 14);
    const size_t count = 64;
    std::vector<double> g(count, 0.3);
    std::vector<uint8_t> bases;
    std::vector<Rng> rngs;
    Rng pick(1);
    for (size_t r = 0; r < count; r++) {
        for (int i = 0; i < 5; i++) {
            bases.push_back(static_cast<uint8_t>(dataset::kX + uniform_below(pick, 3)));
        }
        rngs.push_back(make_stream(77, {r}));
    }
    SampleBatch s = sample_batch(p, g, bases, rngs);
    ASSERT_EQ(s.outcomes.size(), count * 5);
    Batch replay;
    replay.size = count;
    replay.params = g;
    for (size_t r = 0; r < count; r++) {
        for (int i = 0; i < 5; i++) {
            int8_t o = s.outcomes[r * 5 + i];
            ASSERT_TRUE(o == 1 || o == -1);
            replay.tokens.push_back(bases[r * 5 + i]);
            replay.tokens.push_back(dataset::outcome_token(o));
        }
    }
    std::vector<double> nll = record_nll(p, replay.view());
    for (size_t r = 0; r < count; r++) {
        EXPECT_NEAR(std::exp(s.log_prob[r]), std::exp(-nll[r]), 1e-8);
    }
}

TEST(SamplerTest, ReproducibleAndThreadIndependent) {
    ModelConfig c = small_config(4);
    AnyModel model = jittered(c, 6);
    std::vector<double> g(200, 0.7);
    std::vector<uint8_t> bases(200 * 4, dataset::kZ);
    auto streams = [] {
        std::vector<Rng> out;
        for (uint64_t r = 0; r < 200; r++) {
            out.push_back(make_stream(5, {r}));
        }
        return out;
    };
    auto r1 = streams();
    auto r2 = streams();
    SampleBatch a = sample_batch(model, g, bases, r1, 1);
    SampleBatch b = sample_batch(model, g, bases, r2, 3);
    EXPECT_EQ(a.outcomes, b.outcomes);
    EXPECT_EQ(a.log_prob, b.log_prob);

    shadow::PauliBasisString basis{{qsim::Pauli::X, qsim::Pauli::Y, qsim::Pauli::Z, qsim::Pauli::X}};
    Rng s1(3);
    Rng s2(3);
    std::vector<double> point = {0.7};
    EXPECT_EQ(sample_outcomes(model, point, basis, s1), sample_outcomes(model, point, basis, s2));
}

TEST(CheckpointTest, RoundTripPreservesEverything) {
    ModelConfig c = small_config(3, 3);
    ModelParams<double> p = jittered(c, 4);
    Checkpoint ck = make_checkpoint(p, qsim::Family::ClusterIsing);
    TrainProgress prog;
    prog.step = 123;
    prog.epochs_done = 4;
    prog.best_val_loss = 1.25;
    prog.initial_loss = 2.0;
    prog.divergence_streak = 1;
    prog.m.assign(p.values.size(), 0.5);
    prog.v.assign(p.values.size(), 0.25);
    ck.progress = prog;
    std::string bytes = encode_checkpoint(ck);
    EXPECT_EQ(bytes.substr(0, 8), "SGPTCKPT");
    Checkpoint back = decode_checkpoint(bytes);
    EXPECT_EQ(back.config, c);
    EXPECT_EQ(back.family, qsim::Family::ClusterIsing);
    EXPECT_EQ(back.values, p.values);
    ASSERT_TRUE(back.progress.has_value());
    EXPECT_EQ(back.progress->step, 123u);
    EXPECT_EQ(back.progress->m, prog.m);
    EXPECT_EQ(encode_checkpoint(back), bytes);

    auto dir = oracle::scratch_dir("checkpoint");
    save_checkpoint(dir / "a.ckpt", ck);
    EXPECT_EQ(load_checkpoint(dir / "a.ckpt").values, p.values);
    EXPECT_THROW(load_checkpoint(dir / "none.ckpt"), IoError);
}

TEST(CheckpointTest, SinglePrecisionWidensLosslessly) {
    ModelConfig c = small_config(3);
    c.precision = Precision::F32;
    ModelParams<float> p = ModelParams<float>::init(c, 2);
    Checkpoint ck = decode_checkpoint(encode_checkpoint(make_checkpoint(p, qsim::Family::TFIM)));
    AnyModel m = model_from(ck);
    ASSERT_TRUE(std::holds_alternative<ModelParams<float>>(m));
    EXPECT_EQ(std::get<ModelParams<float>>(m).values, p.values);
    EXPECT_EQ(config_of(m).precision, Precision::F32);
}

TEST(CheckpointTest, RejectsCorruption) {
    ModelConfig c = small_config(3);
    std::string bytes = encode_checkpoint(make_checkpoint(ModelParams<double>::init(c, 1), qsim::Family::TFIM));
    EXPECT_THROW(decode_checkpoint(bytes + "x"), IoError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), IoError);
    std::string renamed = bytes;
    auto pos = renamed.find("pos_emb");
    ASSERT_NE(pos, std::string::npos);
    renamed[pos] = 'q';
    EXPECT_THROW(decode_checkpoint(renamed), IoError);
    std::string magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(magic), IoError);
}

}  // namespace
}  // namespace shadowgpt::gpt
