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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shadowgpt/shadowgpt.h"

namespace {

struct Flags {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::string> checkpoint;
    std::optional<std::string> point;
    bool resume = false;
    bool dry_run = false;
};

const char *kind_name(sg_status s) {
    switch (s) {
        case SG_ERR_CONFIG:
            return "config";
        case SG_ERR_NUMERIC:
            return "numeric";
        case SG_ERR_IO:
            return "io";
        default:
            return "ok";
    }
}

/// One line, key=value fields, message last so it may contain spaces.
int report_error(sg_status s, const std::string &message) {
    std::string flat = message;
    for (char &c : flat) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    std::fprintf(stderr, "error code=%d kind=%s message=%s\n", static_cast<int>(s), kind_name(s), flat.c_str());
    return static_cast<int>(s);
}

int check(sg_status s) {
    return s == SG_OK ? 0 : report_error(s, sg_last_error());
}

std::optional<std::vector<double>> parse_point(const std::optional<std::string> &text) {
    if (!text) {
        return std::nullopt;
    }
    std::vector<double> out;
    std::stringstream ss(*text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        char *end = nullptr;
        double v = std::strtod(part.c_str(), &end);
        if (part.empty() || *end != '\0') {
            throw CLI::ValidationError("--point", "expected comma-separated numbers, got '" + *text + "'");
        }
        out.push_back(v);
    }
    return out;
}

class ConfigHandle {
   public:
    ~ConfigHandle() {
        sg_config_free(ptr_);
    }
    sg_config *ptr_ = nullptr;
};

void print_and_free(char *text) {
    if (text) {
        std::fputs(text, stdout);
        sg_string_free(text);
    }
}

int run(const std::string &command, const Flags &f) {
    ConfigHandle cfg;
    if (int rc = check(sg_config_load(f.config.c_str(), &cfg.ptr_))) {
        return rc;
    }
    if (f.seed) {
        if (int rc = check(sg_config_set_seed(cfg.ptr_, *f.seed))) {
            return rc;
        }
    }
    if (f.out) {
        if (int rc = check(sg_config_set_output_dir(cfg.ptr_, f.out->c_str()))) {
            return rc;
        }
    }
    if (f.threads) {
        if (int rc = check(sg_config_set_threads(cfg.ptr_, *f.threads))) {
            return rc;
        }
    }
    const char *ckpt = f.checkpoint ? f.checkpoint->c_str() : nullptr;
    std::optional<std::vector<double>> point = parse_point(f.point);
    const double *pdata = point ? point->data() : nullptr;
    size_t plen = point ? point->size() : 0;
    char *summary = nullptr;
    sg_status s = SG_OK;
    if (command == "gen-data") {
        s = sg_run_gen_data(cfg.ptr_, f.dry_run, &summary);
    } else if (command == "train") {
        s = sg_run_train(cfg.ptr_, f.resume, f.dry_run, &summary);
    } else if (command == "evaluate") {
        s = sg_run_evaluate(cfg.ptr_, ckpt, f.dry_run, &summary);
    } else if (command == "predict") {
        if (!point) {
            return report_error(SG_ERR_CONFIG, "predict needs --point");
        }
        s = sg_run_predict(cfg.ptr_, ckpt, pdata, plen, f.dry_run, &summary);
    } else if (command == "oracle") {
        s = sg_run_oracle(cfg.ptr_, pdata, plen, f.dry_run, &summary);
    }
    print_and_free(summary);
    return check(s);
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"shadowgpt: classical shadows, a generative transformer, and exact checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sg_version());
    Flags flags;
    std::string chosen;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", flags.config, "run configuration (JSON with comments)")->required();
        sub->add_option("--seed", flags.seed, "override the master seed");
        sub->add_option("--out", flags.out, "override the output directory");
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--dry-run", flags.dry_run, "print the plan and write nothing");
        sub->callback([&chosen, sub] { chosen = sub->get_name(); });
    };
    auto *gen = app.add_subcommand("gen-data", "simulate ground states and write the shadow dataset");
    common(gen);
    auto *tr = app.add_subcommand("train", "train the model on the dataset");
    common(tr);
    tr->add_flag("--resume", flags.resume, "continue from train/last.ckpt");
    auto *ev = app.add_subcommand("evaluate", "predict the plan with the model and compare with exact values");
    common(ev);
    ev->add_option("--checkpoint", flags.checkpoint, "checkpoint to evaluate (default train/best.ckpt)");
    auto *pr = app.add_subcommand("predict", "predict observables at one parameter point");
    common(pr);
    pr->add_option("--checkpoint", flags.checkpoint, "checkpoint to use (default train/best.ckpt)");
    pr->add_option("--point", flags.point, "parameter point, comma separated")->required();
    auto *orc = app.add_subcommand("oracle", "exact values for the plan or one point");
    common(orc);
    orc->add_option("--point", flags.point, "parameter point, comma separated");

    try {
        app.parse(argc, argv);
        return run(chosen, flags);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report_error(SG_ERR_CONFIG, e.what());
    }
}
