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

// Exhaustive enumeration of measurement records for small systems, used to
// check estimator expectations exactly.

#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "qsim.hpp"
#include "shadow.hpp"

namespace oracle {

namespace qsim = shadowgpt::qsim;
namespace shadow = shadowgpt::shadow;

inline constexpr char kLabels[3] = {'X', 'Y', 'Z'};

inline shadow::ShadowRecord make_record(const std::string &bases, const std::vector<int> &outcomes) {
    shadow::ShadowRecord r;
    r.params = {0.5};
    for (char c : bases) {
        r.basis.bases.push_back(qsim::parse_pauli(c));
    }
    for (int b : outcomes) {
        r.outcome.outcomes.push_back(static_cast<int8_t>(b));
    }
    return r;
}

/// Every (P, b) pair of an n-qubit record together with its Born weight 3^-n p(b|P).
struct Weighted {
    shadow::ShadowRecord record;
    double weight;
};

inline std::vector<Weighted> enumerate_records(const oracle::Mat &rho, int n) {
    std::vector<Weighted> out;
    int n_bases = 1;
    for (int i = 0; i < n; i++) {
        n_bases *= 3;
    }
    for (int pb = 0; pb < n_bases; pb++) {
        std::string bases;
        for (int i = 0, rest = pb; i < n; i++, rest /= 3) {
            bases.push_back(kLabels[rest % 3]);
        }
        for (int bits = 0; bits < (1 << n); bits++) {
            std::vector<int> outcomes;
            for (int i = 0; i < n; i++) {
                outcomes.push_back(((bits >> i) & 1) ? -1 : 1);
            }
            double w = oracle::born_probability(rho, bases, outcomes) / n_bases;
            out.push_back({make_record(bases, outcomes), w});
        }
    }
    return out;
}

/// All non-identity Pauli observables on n sites.
inline std::vector<std::pair<qsim::PauliString, std::string>> all_paulis(int n) {
    std::vector<std::pair<qsim::PauliString, std::string>> out;
    int total = 1 << (2 * n);
    for (int code = 1; code < total; code++) {
        std::vector<std::pair<int, qsim::Pauli>> support;
        std::string labels;
        for (int i = 0, rest = code; i < n; i++, rest /= 4) {
            int c = rest % 4;
            if (c == 0) {
                labels.push_back('I');
            } else {
                support.push_back({i, static_cast<qsim::Pauli>(c - 1)});
                labels.push_back(kLabels[c - 1]);
            }
        }
        out.push_back({qsim::PauliString(support), labels});
    }
    return out;
}

inline std::vector<std::vector<int>> all_regions(int n) {
    std::vector<std::vector<int>> out;
    for (int mask = 1; mask < (1 << n); mask++) {
        std::vector<int> region;
        for (int i = 0; i < n; i++) {
            if ((mask >> i) & 1) {
                region.push_back(i);
            }
        }
        out.push_back(region);
    }
    return out;
}

}  // namespace oracle
