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
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "binio.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "gpt/checkpoint.hpp"
#include "gpt/model.hpp"
#include "gpt/optim.hpp"
#include "gpt/sampler.hpp"
#include "gpt/train.hpp"
#include "oracles.hpp"

namespace shadowgpt::gpt {
namespace {

using dataset::Dataset;

ModelConfig tiny_config(int n_qubits, int param_dim = 1) {
    ModelConfig c;
    c.d_model = 32;
    c.n_layers = 2;
    c.n_heads = 4;
    c.d_ff = 64;
    c.n_qubits = n_qubits;
    c.param_dim = param_dim;
    return c;
}

/// Records from a single-qubit-product state measured in uniform bases.
Dataset product_zero_dataset(int n, size_t count, uint64_t seed) {
    qsim::GroundSpace zero = qsim::GroundSpace::from_pure(qsim::PureState::product_zero(n));
    Dataset ds;
    ds.family = qsim::Family::TFIM;
    ds.n_qubits = n;
    for (size_t r = 0; r < count; r++) {
        Rng rng = make_stream(seed, {r});
        shadow::ShadowRecord rec;
        rec.params = {0.0};
        rec.basis = shadow::sample_basis(n, rng);
        rec.outcome = shadow::measure(zero, rec.basis, rng);
        ds.append(dataset::tokenize(rec));
    }
    return ds;
}

/// Closed-form cosine schedule with restarts after 5, 15, 35, ... epochs.
double schedule_oracle(double epoch, double eta_max, double eta_min) {
    double start = 0.0;
    double length = 5.0;
    while (epoch >= start + length) {
        start += length;
        length *= 2.0;
    }
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * (epoch - start) / length));
}

std::vector<nlohmann::json> read_log(const std::filesystem::path &path) {
    std::ifstream in(path);
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

TEST(ScheduleTest, ClosedFormValues) {
    CosineWarmRestarts s;
    EXPECT_DOUBLE_EQ(s.lr(0.0), 3e-4);
    EXPECT_NEAR(s.lr(2.5), 1e-6 + (3e-4 - 1e-6) / 2, 1e-15);
    EXPECT_DOUBLE_EQ(s.lr(5.0), 3e-4);
    EXPECT_DOUBLE_EQ(s.lr(15.0), 3e-4);
    EXPECT_DOUBLE_EQ(s.lr(35.0), 3e-4);
    EXPECT_NEAR(s.lr(25.0), 1e-6 + (3e-4 - 1e-6) / 2, 1e-15);
    for (double e = 0.0; e < 80.0; e += 0.37) {
        EXPECT_NEAR(s.lr(e), schedule_oracle(e, 3e-4, 1e-6), 1e-15);
    }
    EXPECT_DOUBLE_EQ(step_lr(s, 10, 4), s.lr(2.5));
}

TEST(AdamWTest, MatchesReferenceUpdate) {
    const size_t n = 64;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> normal;
    std::vector<double> p(n);
    std::vector<uint8_t> mask(n);
    for (size_t k = 0; k < n; k++) {
        p[k] = normal(gen);
        mask[k] = k % 3 != 0;
    }
    std::vector<double> ref = p;
    std::vector<double> m(n, 0.0);
    std::vector<double> v(n, 0.0);
    AdamWConfig cfg;
    cfg.weight_decay = 0.1;
    OptimState<double> st = OptimState<double>::zeros(n);
    for (int t = 1; t <= 6; t++) {
        std::vector<double> g(n);
        for (double &x : g) {
            x = normal(gen);
        }
        double lr = 1e-2 * t;
        adamw_step<double>(p, g, st, lr, cfg, mask);
        for (size_t k = 0; k < n; k++) {
            if (mask[k]) {
                ref[k] -= lr * cfg.weight_decay * ref[k];
            }
            m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * g[k] * g[k];
            double mhat = m[k] / (1 - std::pow(cfg.beta1, t));
            double vhat = v[k] / (1 - std::pow(cfg.beta2, t));
            ref[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        for (size_t k = 0; k < n; k++) {
            ASSERT_NEAR(p[k], ref[k], 1e-14 * (1 + std::abs(ref[k]))) << "step " << t;
        }
    }
    EXPECT_EQ(st.step, 6u);
    std::vector<double> short_grad(n - 1);
    EXPECT_THROW(adamw_step<double>(p, short_grad, st, 1e-3, cfg, mask), ParameterError);
}

TEST(EpochOrderTest, DeterministicPermutation) {
    auto a = epoch_order(1000, 3, 0);
    EXPECT_EQ(a, epoch_order(1000, 3, 0));
    EXPECT_NE(a, epoch_order(1000, 3, 1));
    EXPECT_NE(a, epoch_order(1000, 4, 0));
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (size_t k = 0; k < sorted.size(); k++) {
        ASSERT_EQ(sorted[k], k);
    }
}

TEST(TrainConfigTest, Validation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = TrainConfig{};
    c.validation_fraction = 1.0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = TrainConfig{};
    c.schedule.eta_min = 1.0;
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(TrainTest, LearningRateTraceMatchesSchedule) {
    Dataset ds = product_zero_dataset(3, 300, 1);
    TrainConfig tc;
    tc.batch_size = 32;
    tc.epochs = 17;
    tc.seed = 5;
    auto dir = oracle::scratch_dir("train_lr");
    TrainSummary s = train(ds, tiny_config(3), tc, dir);
    const double spe = static_cast<double>((s.train_records + 31) / 32);
    int steps = 0;
    for (const auto &j : read_log(dir / kTrainLog)) {
        if (j["event"] == "step") {
            double step = j["step"].get<double>();
            EXPECT_NEAR(j["lr"].get<double>(), schedule_oracle((step - 1) / spe, 3e-4, 1e-6), 1e-12) << step;
            steps++;
        }
    }
    EXPECT_EQ(steps, static_cast<int>(spe) * 17);
    EXPECT_EQ(s.steps, static_cast<uint64_t>(steps));
    EXPECT_EQ(s.epochs.size(), 17u);
}

TEST(TrainTest, LogRecordsThreadsAndLosses) {
    Dataset ds = product_zero_dataset(3, 200, 2);
    TrainConfig tc;
    tc.batch_size = 50;
    tc.epochs = 2;
    tc.threads = 2;
    auto dir = oracle::scratch_dir("train_log");
    train(ds, tiny_config(3), tc, dir);
    auto log = read_log(dir / kTrainLog);
    ASSERT_FALSE(log.empty());
    EXPECT_EQ(log.front()["event"], "start");
    EXPECT_EQ(log.front()["threads"], 2);
    int epochs = 0;
    for (const auto &j : log) {
        if (j["event"] == "epoch") {
            epochs++;
            EXPECT_TRUE(j.contains("val_loss"));
            EXPECT_TRUE(j.contains("train_loss"));
        }
    }
    EXPECT_EQ(epochs, 2);
    EXPECT_TRUE(std::filesystem::exists(dir / kBestCheckpoint));
    EXPECT_TRUE(std::filesystem::exists(dir / kLastCheckpoint));
}

TEST(TrainTest, SingleRecordOverfit) {
    Dataset ds = product_zero_dataset(4, 1, 3);
    TrainConfig tc;
    tc.batch_size = 1;
    tc.epochs = 500;
    tc.validation_fraction = 0.0;
    tc.schedule.eta_max = 1e-3;
    tc.schedule.eta_min = 1e-3;
    TrainSummary s = train(ds, ModelConfig{.n_qubits = 4}, tc);
    int reached = -1;
    for (const auto &e : s.epochs) {
        if (e.train_loss < 0.01) {
            reached = e.epoch;
            break;
        }
    }
    EXPECT_GT(reached, 0) << "final loss " << s.epochs.back().train_loss;
    EXPECT_LE(reached, 500);
    EXPECT_LT(loss(params_from<double>(s.last), BatchView{1, ds.params, ds.tokens}), 0.01);
}

TEST(TrainTest, OneEpochBeatsTheUniformBaseline) {
    Dataset ds = dataset::generate_records(qsim::Family::TFIM, 4, dataset::default_training_points(qsim::Family::TFIM),
                                           2000, 8);
    TrainConfig tc;
    tc.epochs = 1;
    tc.seed = 8;
    TrainSummary s = train(ds, ModelConfig{.n_qubits = 4}, tc);
    ASSERT_EQ(s.epochs.size(), 1u);
    EXPECT_LT(s.epochs[0].val_loss, 4 * std::numbers::ln2);
}

TEST(TrainTest, ReproducibleFromSeed) {
    Dataset ds = product_zero_dataset(3, 400, 4);
    TrainConfig tc;
    tc.batch_size = 64;
    tc.epochs = 3;
    tc.seed = 11;
    auto a = oracle::scratch_dir("train_det_a");
    auto b = oracle::scratch_dir("train_det_b");
    train(ds, tiny_config(3), tc, a);
    train(ds, tiny_config(3), tc, b);
    for (const char *f : {kBestCheckpoint, kLastCheckpoint, kTrainLog}) {
        EXPECT_EQ(binio::read_file(a / f), binio::read_file(b / f)) << f;
    }
}

TEST(TrainTest, ResumeIsBitContinuous) {
    Dataset ds = product_zero_dataset(3, 400, 6);
    TrainConfig tc;
    tc.batch_size = 64;
    tc.seed = 2;
    auto straight = oracle::scratch_dir("train_straight");
    auto split = oracle::scratch_dir("train_split");
    tc.epochs = 4;
    train(ds, tiny_config(3), tc, straight);
    tc.epochs = 2;
    train(ds, tiny_config(3), tc, split);
    tc.epochs = 4;
    TrainSummary resumed = train(ds, tiny_config(3), tc, split, true);
    EXPECT_EQ(binio::read_file(straight / kLastCheckpoint), binio::read_file(split / kLastCheckpoint));
    EXPECT_EQ(binio::read_file(straight / kBestCheckpoint), binio::read_file(split / kBestCheckpoint));
    EXPECT_EQ(resumed.epochs.size(), 2u);

    // The resumed log continues the step sequence without gaps.
    auto steps_of = [](const std::filesystem::path &p) {
        std::vector<std::string> out;
        for (const auto &j : read_log(p)) {
            if (j["event"] == "step" || j["event"] == "epoch") {
                out.push_back(j.dump());
            }
        }
        return out;
    };
    EXPECT_EQ(steps_of(straight / kTrainLog), steps_of(split / kTrainLog));
}

TEST(TrainTest, ResumeNeedsACheckpoint) {
    Dataset ds = product_zero_dataset(3, 50, 1);
    TrainConfig tc;
    tc.epochs = 1;
    auto dir = oracle::scratch_dir("train_noresume");
    EXPECT_THROW(train(ds, tiny_config(3), tc, dir, true), IoError);
    EXPECT_THROW(train(ds, tiny_config(3), tc, {}, true), ParameterError);
    EXPECT_THROW(train(ds, tiny_config(4), tc), ParameterError);
}

TEST(TrainTest, DivergenceAbortsWithReport) {
    // Validation records carry the opposite outcome of training records, so
    // fitting the training split drives the monitored loss up without bound.
    const size_t count = 400;
    TrainConfig tc;
    tc.batch_size = 32;
    tc.epochs = 60;
    tc.seed = 3;
    tc.validation_fraction = 0.25;
    tc.schedule.eta_max = 3e-3;
    tc.schedule.eta_min = 3e-3;
    dataset::Split split = dataset::split_dataset(count, tc.seed, tc.validation_fraction);
    std::vector<bool> is_val(count, false);
    for (size_t i : split.validation) {
        is_val[i] = true;
    }
    Dataset ds;
    ds.n_qubits = 1;
    for (size_t i = 0; i < count; i++) {
        ds.append(dataset::TokenizedRecord{{0.5}, {dataset::kZ, is_val[i] ? dataset::kMinus : dataset::kPlus}});
    }
    auto dir = oracle::scratch_dir("train_diverge");
    try {
        train(ds, tiny_config(1), tc, dir);
        FAIL() << "expected divergence";
    } catch (const NumericError &e) {
        EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
    }
    auto log = read_log(dir / kTrainLog);
    EXPECT_EQ(log.back()["event"], "diverged");
}

TEST(TrainTest, SingleQubitMarginalLaw) {
    Dataset ds = product_zero_dataset(1, 20000, 7);
    TrainConfig tc;
    tc.batch_size = 256;
    tc.epochs = 5;
    tc.schedule.eta_max = 3e-3;
    TrainSummary s = train(ds, tiny_config(1), tc);
    ModelParams<double> p = params_from<double>(s.best);
    std::vector<double> g = {0.0, 0.0, 0.0};
    std::vector<uint8_t> tokens = {dataset::kZ, dataset::kPlus, dataset::kX, dataset::kPlus, dataset::kY, dataset::kPlus};
    ForwardCache<double> cache;
    forward(p, BatchView{3, g, tokens}, cache);
    EXPECT_NEAR(std::exp(cache.logp(0, 0)), 1.0, 0.02);
    EXPECT_NEAR(std::exp(cache.logp(1, 0)), 0.5, 0.02);
    EXPECT_NEAR(std::exp(cache.logp(2, 0)), 0.5, 0.02);
}

TEST(TrainTest, OverfitAllPlusSamplesAllPlus) {
    Dataset ds;
    ds.n_qubits = 3;
    Rng rng(5);
    for (int r = 0; r < 3000; r++) {
        shadow::ShadowRecord rec;
        rec.params = {0.5};
        rec.basis = shadow::sample_basis(3, rng);
        rec.outcome.outcomes = {1, 1, 1};
        ds.append(dataset::tokenize(rec));
    }
    TrainConfig tc;
    tc.batch_size = 128;
    tc.epochs = 5;
    tc.schedule.eta_max = 3e-3;
    tc.schedule.eta_min = 3e-3;
    TrainSummary s = train(ds, tiny_config(3), tc);
    AnyModel model = model_from(s.best);
    size_t plus = 0;
    size_t total = 0;
    for (uint64_t r = 0; r < 2000; r++) {
        Rng stream = make_stream(9, {r});
        shadow::PauliBasisString basis = shadow::sample_basis(3, stream);
        std::vector<double> g = {0.5};
        for (int8_t b : sample_outcomes(model, g, basis, stream).outcomes) {
            plus += b == 1;
            total++;
        }
    }
    EXPECT_GT(plus / static_cast<double>(total), 0.99);
}

TEST(TrainTest, SinglePrecisionRuns) {
    Dataset ds = product_zero_dataset(3, 300, 3);
    TrainConfig tc;
    tc.batch_size = 64;
    tc.epochs = 2;
    ModelConfig c = tiny_config(3);
    c.precision = Precision::F32;
    TrainSummary s = train(ds, c, tc);
    EXPECT_EQ(s.last.config.precision, Precision::F32);
    EXPECT_TRUE(std::holds_alternative<ModelParams<float>>(model_from(s.last)));
    EXPECT_LT(s.epochs.back().val_loss, s.initial_loss);
}

}  // namespace
}  // namespace shadowgpt::gpt
