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

#include "app.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "common.hpp"
#include "gpt/checkpoint.hpp"
#include "gpt/train.hpp"
#include "pipeline.hpp"
#include "report.hpp"

namespace shadowgpt::app {

namespace fs = std::filesystem;

namespace {

constexpr const char *kLockFile = ".shadowgpt.lock";

fs::path data_dir(const config::RunConfig &c) {
    return c.output_dir / "data";
}
fs::path train_dir(const config::RunConfig &c) {
    return c.output_dir / "train";
}

void make_dirs(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

std::string plan_header(const char *stage, const config::RunConfig &c) {
    return std::string("dry run: ") + stage + " (nothing written)\n" + config::run_config_to_json(c) + "\n";
}

fs::path checkpoint_path(const config::RunConfig &c, const Options &o) {
    return o.checkpoint ? *o.checkpoint : train_dir(c) / gpt::kBestCheckpoint;
}

struct LoadedModel {
    std::shared_ptr<const gpt::AnyModel> model;
    std::string crc32;
};

LoadedModel load_model(const config::RunConfig &c, const fs::path &path) {
    std::string bytes = binio::read_file(path);
    gpt::Checkpoint ckpt = gpt::decode_checkpoint(bytes);
    if (ckpt.family != c.family || ckpt.config.n_qubits != c.n_qubits) {
        throw ParameterError("checkpoint " + path.string() + " was trained for " +
                             std::string(qsim::family_name(ckpt.family)) + " N=" +
                             std::to_string(ckpt.config.n_qubits) + ", config asks for " +
                             std::string(qsim::family_name(c.family)) + " N=" + std::to_string(c.n_qubits));
    }
    return {std::make_shared<const gpt::AnyModel>(gpt::model_from(ckpt)), binio::crc32_hex(bytes)};
}

report::Provenance provenance(const config::RunConfig &c, const pipeline::PredictionPlan &plan,
                              const std::string &checkpoint_crc) {
    return {checkpoint_crc, binio::crc32_hex(pipeline::plan_to_json(plan)), c.seed};
}

pipeline::PredictionPlan single_point_plan(const config::RunConfig &c, const Options &o) {
    pipeline::PredictionPlan plan = c.predict;
    if (o.point) {
        plan.points = {*o.point};
    }
    plan.validate();
    return plan;
}

}  // namespace

DirectoryLock::DirectoryLock(const fs::path &dir) : path_(dir / kLockFile) {
    make_dirs(dir);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw IoError("output directory " + dir.string() + " is locked by another run (remove " +
                          path_.string() + " if that run is gone)");
        }
        throw IoError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

DirectoryLock::~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

std::string gen_data(const config::RunConfig &c, const Options &o) {
    c.validate();
    if (o.dry_run) {
        std::ostringstream s;
        s << plan_header("gen-data", c) << "would write " << c.data.points.size() << " points x "
          << c.data.shadows_per_point << " shadows = " << c.data.points.size() * c.data.shadows_per_point
          << " records to " << data_dir(c).string() << "\n";
        return s.str();
    }
    DirectoryLock lock(c.output_dir);
    make_dirs(data_dir(c));
    dataset::DatasetManifest m = dataset::generate_dataset(c.family, c.n_qubits, c.data.points,
                                                           c.data.shadows_per_point, c.seed, data_dir(c), c.threads);
    std::ostringstream s;
    s << "wrote " << m.record_count << " records (" << m.points.size() << " points x " << m.shadows_per_point
      << ") to " << (data_dir(c) / m.payload_file).string() << " crc32=" << m.payload_crc32 << "\n";
    return s.str();
}

std::string train(const config::RunConfig &c, const Options &o) {
    c.validate();
    const fs::path manifest = data_dir(c) / "manifest.json";
    if (o.dry_run) {
        std::ostringstream s;
        s << plan_header("train", c) << "would read " << manifest.string() << " and write checkpoints to "
          << train_dir(c).string() << (o.resume ? " (resuming from last.ckpt)" : "") << "\n";
        return s.str();
    }
    DirectoryLock lock(c.output_dir);
    dataset::Dataset data = dataset::load_dataset(manifest);
    if (data.family != c.family || data.n_qubits != c.n_qubits) {
        throw ParameterError("dataset in " + manifest.string() + " does not match the config family and N");
    }
    gpt::TrainSummary summary = gpt::train(data, c.model, c.train, train_dir(c), o.resume);
    std::ostringstream s;
    s << "trained " << summary.steps << " steps on " << summary.train_records << " records ("
      << summary.validation_records << " held out); initial loss " << summary.initial_loss;
    if (!summary.epochs.empty()) {
        const auto &e = summary.epochs.back();
        s << ", final train loss " << e.train_loss << ", final validation loss " << e.val_loss;
    }
    s << "\ncheckpoints in " << train_dir(c).string() << "\n";
    return s.str();
}

std::string evaluate(const config::RunConfig &c, const Options &o) {
    c.validate();
    const fs::path ckpt = checkpoint_path(c, o);
    const fs::path out = c.output_dir / "eval";
    if (o.dry_run) {
        std::ostringstream s;
        s << plan_header("evaluate", c) << "would load " << ckpt.string() << " and write tables and figures to "
          << out.string() << " for " << c.predict.points.size() << " points x " << c.predict.observables.size()
          << " observables\n";
        return s.str();
    }
    DirectoryLock lock(c.output_dir);
    LoadedModel m = load_model(c, ckpt);
    pipeline::ModelSource source(m.model, 1);
    auto reports = pipeline::predict_observables(source, c.predict, c.threads);
    pipeline::Evaluation ev = pipeline::evaluate(reports, c.predict, c.threads);
    report::Provenance prov = provenance(c, c.predict, m.crc32);
    make_dirs(out);
    binio::write_file(out / "predictions.tsv", report::predictions_table(reports, prov).to_tsv());
    binio::write_file(out / "evaluation.tsv", report::evaluation_table(ev.rows, prov).to_tsv());
    if (c.family == qsim::Family::TFIM) {
        binio::write_file(out / "kramers_wannier.tsv", report::duality_table(ev.duality, prov).to_tsv());
    } else {
        binio::write_file(out / "triality.tsv", report::triality_table(ev.triality, prov).to_tsv());
    }
    auto figures = report::evaluation_figures(c.predict, ev.rows, c.data.points);
    for (const auto &f : figures) {
        binio::write_file(out / f.file_name, f.svg);
    }
    std::ostringstream s;
    s << "evaluated " << reports.size() << " (point, observable) pairs; tables and " << figures.size()
      << " figures in " << out.string() << "\n";
    return s.str();
}

std::string predict(const config::RunConfig &c, const Options &o) {
    c.validate();
    if (!o.point) {
        throw ParameterError("predict needs --point");
    }
    pipeline::PredictionPlan plan = single_point_plan(c, o);
    const fs::path ckpt = checkpoint_path(c, o);
    const fs::path out = c.output_dir / "predict" / ("point_" + report::format_point(*o.point) + ".tsv");
    if (o.dry_run) {
        return plan_header("predict", c) + "would load " + ckpt.string() + " and write " + out.string() + "\n";
    }
    DirectoryLock lock(c.output_dir);
    LoadedModel m = load_model(c, ckpt);
    pipeline::ModelSource source(m.model, c.threads);
    auto reports = pipeline::predict_observables(source, plan, 1);
    std::string table = report::predictions_table(reports, provenance(c, plan, m.crc32)).to_tsv();
    make_dirs(out.parent_path());
    binio::write_file(out, table);
    return table;
}

std::string oracle(const config::RunConfig &c, const Options &o) {
    c.validate();
    pipeline::PredictionPlan plan = single_point_plan(c, o);
    const fs::path out =
        c.output_dir / "oracle" / (o.point ? "point_" + report::format_point(*o.point) + ".tsv" : "oracle.tsv");
    if (o.dry_run) {
        return plan_header("oracle", c) + "would write exact values for " + std::to_string(plan.points.size()) +
               " points to " + out.string() + "\n";
    }
    DirectoryLock lock(c.output_dir);
    std::string table = report::oracle_table(pipeline::oracle_rows(plan, c.threads), provenance(c, plan, "none")).to_tsv();
    make_dirs(out.parent_path());
    binio::write_file(out, table);
    return o.point ? table : "wrote exact values for " + std::to_string(plan.points.size()) + " points to " +
                                 out.string() + "\n";
}

}  // namespace shadowgpt::app
