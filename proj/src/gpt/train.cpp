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

#include "gpt/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "common.hpp"
#include "rng.hpp"

namespace shadowgpt::gpt {

namespace {

constexpr uint64_t kInitStream = 0x1417;
constexpr uint64_t kShuffleStream = 0x5F0FF1E;
constexpr double kDivergenceFactor = 10.0;
constexpr uint32_t kDivergenceEpochs = 3;

using nlohmann::ordered_json;

struct Gathered {
    std::vector<double> params;
    std::vector<uint8_t> tokens;
};

Gathered gather(const dataset::Dataset &data, std::span<const size_t> idx) {
    Gathered g;
    g.params.reserve(idx.size() * data.param_dim);
    g.tokens.reserve(idx.size() * data.seq_tokens());
    for (size_t i : idx) {
        auto p = data.params_of(i);
        auto t = data.tokens_of(i);
        g.params.insert(g.params.end(), p.begin(), p.end());
        g.tokens.insert(g.tokens.end(), t.begin(), t.end());
    }
    return g;
}

BatchView view_of(const Gathered &g, size_t count) {
    return {count, g.params, g.tokens};
}

template <typename S>
double mean_loss(const ModelParams<S> &p, const dataset::Dataset &data, const std::vector<size_t> &idx,
                 int chunk_records) {
    // Evaluate in slabs so memory stays bounded on large splits.
    constexpr size_t kSlab = 4096;
    double total = 0.0;
    for (size_t begin = 0; begin < idx.size(); begin += kSlab) {
        size_t end = std::min(idx.size(), begin + kSlab);
        Gathered g = gather(data, std::span<const size_t>(idx).subspan(begin, end - begin));
        total += loss<S>(p, view_of(g, end - begin), chunk_records) * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(idx.size());
}

std::string json_number(double v) {
    return std::isfinite(v) ? ordered_json(v).dump() : "null";
}

class TrainLog {
   public:
    TrainLog(const std::filesystem::path &path, bool append) : enabled_(!path.empty()) {
        if (enabled_) {
            out_.open(path, append ? std::ios::app : std::ios::trunc);
            if (!out_) {
                throw IoError("cannot open training log " + path.string());
            }
        }
    }
    void line(const std::string &s) {
        if (enabled_) {
            out_ << s << '\n';
            out_.flush();
            if (!out_) {
                throw IoError("failed writing training log");
            }
        }
    }

   private:
    bool enabled_;
    std::ofstream out_;
};

/// Drops log lines written after the checkpoint being resumed from.
void truncate_log(const std::filesystem::path &path, uint64_t step, uint32_t epochs_done) {
    if (!std::filesystem::exists(path)) {
        return;
    }
    std::istringstream in(binio::read_file(path));
    std::string kept;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            continue;
        }
        std::string event = j.value("event", "");
        if (event == "step" && j.value("step", uint64_t{0}) > step) {
            continue;
        }
        if (event == "epoch" && j.value("epoch", 0u) > epochs_done) {
            continue;
        }
        kept += line + '\n';
    }
    binio::write_file(path, kept);
}

template <typename S>
TrainProgress progress_of(const OptimState<S> &opt, uint32_t epochs_done, double best_val, double initial,
                          uint32_t streak) {
    TrainProgress p;
    p.step = opt.step;
    p.epochs_done = epochs_done;
    p.best_val_loss = best_val;
    p.initial_loss = initial;
    p.divergence_streak = streak;
    p.m.assign(opt.m.begin(), opt.m.end());
    p.v.assign(opt.v.begin(), opt.v.end());
    return p;
}

template <typename S>
TrainSummary run(const dataset::Dataset &data, const ModelConfig &mc, const TrainConfig &tc,
                 const std::filesystem::path &out_dir, bool resume) {
    const bool persist = !out_dir.empty();
    const dataset::Split split = dataset::split_dataset(data.size(), tc.seed, tc.validation_fraction);
    if (split.train.empty()) {
        throw ParameterError("training split is empty");
    }
    const uint64_t steps_per_epoch = (split.train.size() + tc.batch_size - 1) / tc.batch_size;
    const std::vector<uint8_t> decay_mask = ModelParams<S>::zeros(mc).layout.decay_mask();

    ModelParams<S> params = ModelParams<S>::init(mc, derive_seed(tc.seed, {kInitStream}));
    OptimState<S> opt = OptimState<S>::zeros(params.values.size());
    TrainSummary summary;
    summary.train_records = split.train.size();
    summary.validation_records = split.validation.size();
    uint32_t epochs_done = 0;
    uint32_t streak = 0;
    double best_val = std::numeric_limits<double>::infinity();
    double initial = std::numeric_limits<double>::quiet_NaN();
    auto monitored_initial = [&](const ModelParams<S> &p) {
        return mean_loss<S>(p, data, split.validation.empty() ? split.train : split.validation, tc.chunk_records);
    };

    if (resume) {
        if (!persist) {
            throw ParameterError("resume requires an output directory");
        }
        Checkpoint last = load_checkpoint(out_dir / kLastCheckpoint);
        if (!(last.config == mc) || last.family != data.family) {
            throw ParameterError("checkpoint model config does not match the run config");
        }
        if (!last.progress) {
            throw IoError("checkpoint has no optimizer state to resume from");
        }
        params = params_from<S>(last);
        const TrainProgress &pg = *last.progress;
        opt.step = pg.step;
        for (size_t k = 0; k < opt.m.size(); k++) {
            opt.m[k] = static_cast<S>(pg.m[k]);
            opt.v[k] = static_cast<S>(pg.v[k]);
        }
        epochs_done = pg.epochs_done;
        best_val = pg.best_val_loss;
        initial = pg.initial_loss;
        streak = pg.divergence_streak;
        summary.best = std::filesystem::exists(out_dir / kBestCheckpoint) ? load_checkpoint(out_dir / kBestCheckpoint)
                                                                          : make_checkpoint(params, data.family);
        truncate_log(out_dir / kTrainLog, pg.step, pg.epochs_done);
    } else {
        initial = monitored_initial(params);
        summary.best = make_checkpoint(params, data.family);
    }
    summary.initial_loss = initial;

    TrainLog log(persist ? out_dir / kTrainLog : std::filesystem::path{}, resume);
    if (!resume) {
        ordered_json head;
        head["event"] = "start";
        head["threads"] = tc.threads;
        head["precision"] = mc.precision == Precision::F32 ? "f32" : "f64";
        head["records"] = data.size();
        head["train_records"] = split.train.size();
        head["validation_records"] = split.validation.size();
        head["steps_per_epoch"] = steps_per_epoch;
        head["batch_size"] = tc.batch_size;
        head["initial_loss"] = initial;
        log.line(head.dump());
    } else {
        ordered_json head;
        head["event"] = "resume";
        head["threads"] = tc.threads;
        head["step"] = opt.step;
        head["epoch"] = epochs_done;
        log.line(head.dump());
    }

    std::vector<S> grad;
    for (int epoch = static_cast<int>(epochs_done); epoch < tc.epochs; epoch++) {
        std::vector<size_t> order = epoch_order(split.train.size(), tc.seed, epoch);
        double epoch_total = 0.0;
        double lr = 0.0;
        for (uint64_t b = 0; b < steps_per_epoch; b++) {
            size_t begin = b * tc.batch_size;
            size_t end = std::min(order.size(), begin + tc.batch_size);
            std::vector<size_t> idx;
            idx.reserve(end - begin);
            for (size_t k = begin; k < end; k++) {
                idx.push_back(split.train[order[k]]);
            }
            Gathered g = gather(data, idx);
            double batch_loss = loss_and_grad<S>(params, view_of(g, idx.size()), grad, tc.threads, tc.chunk_records);
            for (S v : grad) {
                if (!std::isfinite(static_cast<double>(v))) {
                    throw NumericError("non-finite gradient at step " + std::to_string(opt.step));
                }
            }
            lr = step_lr(tc.schedule, opt.step, steps_per_epoch);
            adamw_step<S>(params.values, grad, opt, lr, tc.adamw, decay_mask);
            epoch_total += batch_loss * static_cast<double>(idx.size());
            ordered_json j;
            j["event"] = "step";
            j["step"] = opt.step;
            j["epoch"] = epoch + 1;
            j["lr"] = lr;
            j["train_loss"] = batch_loss;
            log.line(j.dump());
        }

        EpochStats st;
        st.epoch = epoch + 1;
        st.step = opt.step;
        st.lr = lr;
        st.train_loss = epoch_total / static_cast<double>(split.train.size());
        st.val_loss = split.validation.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : mean_loss<S>(params, data, split.validation, tc.chunk_records);
        summary.epochs.push_back(st);
        ordered_json j;
        j["event"] = "epoch";
        j["epoch"] = st.epoch;
        j["step"] = st.step;
        j["lr"] = st.lr;
        j["train_loss"] = st.train_loss;
        j["val_loss"] = ordered_json::parse(json_number(st.val_loss));
        log.line(j.dump());

        double monitored = split.validation.empty() ? st.train_loss : st.val_loss;
        epochs_done = static_cast<uint32_t>(epoch + 1);
        if (monitored < best_val) {
            best_val = monitored;
            summary.best = make_checkpoint(params, data.family);
            if (persist) {
                save_checkpoint(out_dir / kBestCheckpoint, summary.best);
            }
        }
        streak = monitored > kDivergenceFactor * initial ? streak + 1 : 0;
        Checkpoint last = make_checkpoint(params, data.family);
        last.progress = progress_of(opt, epochs_done, best_val, initial, streak);
        if (persist) {
            save_checkpoint(out_dir / kLastCheckpoint, last);
        }
        summary.last = std::move(last);
        if (streak >= kDivergenceEpochs) {
            std::ostringstream msg;
            msg << "training diverged: monitored loss " << monitored << " exceeded " << kDivergenceFactor
                << "x the initial " << initial << " for " << streak << " consecutive epochs (epoch " << st.epoch
                << ", step " << st.step << ")";
            log.line(ordered_json{{"event", "diverged"}, {"epoch", st.epoch}, {"loss", monitored}}.dump());
            throw NumericError(msg.str());
        }
    }
    if (summary.last.values.empty()) {
        summary.last = make_checkpoint(params, data.family);
        summary.last.progress = progress_of(opt, epochs_done, best_val, initial, streak);
    }
    summary.steps = opt.step;
    return summary;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) {
        throw ParameterError("train batch_size must be positive");
    }
    if (epochs < 0) {
        throw ParameterError("train epochs must be non-negative");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ParameterError("train validation_fraction must lie in [0, 1)");
    }
    if (threads < 1 || chunk_records < 1) {
        throw ParameterError("train threads and chunk_records must be positive");
    }
    if (!(schedule.eta_max > 0.0 && schedule.eta_min >= 0.0 && schedule.eta_min <= schedule.eta_max)) {
        throw ParameterError("schedule requires 0 <= eta_min <= eta_max and eta_max > 0");
    }
    if (!(schedule.period > 0.0 && schedule.mult >= 1.0)) {
        throw ParameterError("schedule requires restart_period > 0 and restart_mult >= 1");
    }
    if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0 && adamw.beta2 >= 0.0 && adamw.beta2 < 1.0 && adamw.eps > 0.0 &&
          adamw.weight_decay >= 0.0)) {
        throw ParameterError("adamw requires betas in [0, 1), eps > 0 and weight_decay >= 0");
    }
}

double step_lr(const CosineWarmRestarts &schedule, uint64_t step, uint64_t steps_per_epoch) {
    return schedule.lr(static_cast<double>(step) / static_cast<double>(steps_per_epoch));
}

std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; i++) {
        order[i] = i;
    }
    Rng rng = make_stream(seed, {kShuffleStream, static_cast<uint64_t>(epoch)});
    for (size_t i = n; i > 1; i--) {
        std::swap(order[i - 1], order[uniform_below(rng, i)]);
    }
    return order;
}

TrainSummary train(const dataset::Dataset &data, const ModelConfig &model, const TrainConfig &config,
                   const std::filesystem::path &out_dir, bool resume) {
    config.validate();
    model.validate();
    if (model.n_qubits != data.n_qubits || model.param_dim != data.param_dim) {
        throw ParameterError("dataset (N=" + std::to_string(data.n_qubits) + ", param_dim=" +
                             std::to_string(data.param_dim) + ") does not match the model config");
    }
    if (data.size() == 0) {
        throw ParameterError("dataset is empty");
    }
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) {
            throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
        }
    }
    if (model.precision == Precision::F32) {
        return run<float>(data, model, config, out_dir, resume);
    }
    return run<double>(data, model, config, out_dir, resume);
}

}  // namespace shadowgpt::gpt
