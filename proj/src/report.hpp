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

// Tab-separated tables and dependency-free SVG figures for evaluation output.

#include <string>
#include <string_view>
#include <vector>

#include "pipeline.hpp"

namespace shadowgpt::report {

/// Provenance written as the first line of every table.
struct Provenance {
    std::string checkpoint_crc32;
    std::string plan_crc32;
    uint64_t seed = 0;
};

struct Table {
    std::string comment;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_tsv() const;
    static Table parse_tsv(std::string_view text);
    size_t column(std::string_view name) const;
};

/// Shortest text that parses back to the same double; "nan" and "inf" for non-finite values.
std::string format_number(double v);
double parse_number(std::string_view text);
/// Coordinates joined with commas.
std::string format_point(const std::vector<double> &g);
std::vector<double> parse_point(std::string_view text);

std::string provenance_line(const Provenance &p);

Table predictions_table(const std::vector<shadow::EstimateReport> &reports, const Provenance &p);
Table evaluation_table(const std::vector<pipeline::EvaluationRow> &rows, const Provenance &p);
Table oracle_table(const std::vector<pipeline::EvaluationRow> &rows, const Provenance &p);
Table duality_table(const std::vector<pipeline::DualityRow> &rows, const Provenance &p);
Table triality_table(const std::vector<pipeline::TrialityRow> &rows, const Provenance &p);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    /// Error bars; empty for none.
    std::vector<double> err;
    bool markers = true;
    bool dashed = false;
};

/// Line plot; vlines are drawn as gray vertical lines (training points).
std::string line_plot_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                          const std::vector<Series> &series, const std::vector<double> &vlines);

/// Ternary heat map over (g1, g2, g3); crosses mark training points.
std::string ternary_svg(std::string_view title, const std::vector<std::vector<double>> &points,
                        const std::vector<double> &values, const std::vector<std::vector<double>> &crosses);

struct Figure {
    std::string file_name;
    std::string svg;
};

/// TFIM: one line plot per observable family. Cluster: predicted and exact
/// ternary maps per observable.
std::vector<Figure> evaluation_figures(const pipeline::PredictionPlan &plan,
                                       const std::vector<pipeline::EvaluationRow> &rows,
                                       const std::vector<std::vector<double>> &training_points);

}  // namespace shadowgpt::report
