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

#include "dataset.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace shadowgpt::dataset {

namespace {

constexpr std::string_view kMagic = "SGPTSHDW";
constexpr size_t kLabelWidth = 4;

}  // namespace

uint8_t basis_token(qsim::Pauli p) {
    return static_cast<uint8_t>(kX + static_cast<uint8_t>(p));
}

uint8_t outcome_token(int8_t b) {
    return b > 0 ? kPlus : kMinus;
}

bool is_basis_token(uint8_t t) {
    return t == kX || t == kY || t == kZ;
}

bool is_outcome_token(uint8_t t) {
    return t == kPlus || t == kMinus;
}

TokenizedRecord tokenize(const shadow::ShadowRecord &record) {
    if (record.basis.size() != record.outcome.size()) {
        throw ParameterError("record basis and outcome lengths differ");
    }
    TokenizedRecord out;
    out.params = record.params;
    out.tokens.reserve(2 * record.basis.size());
    for (size_t i = 0; i < record.basis.size(); i++) {
        int8_t b = record.outcome.outcomes[i];
        if (b != 1 && b != -1) {
            throw ParameterError("measurement outcomes must be +1 or -1");
        }
        out.tokens.push_back(basis_token(record.basis.bases[i]));
        out.tokens.push_back(outcome_token(b));
    }
    return out;
}

shadow::ShadowRecord detokenize(std::span<const double> params, std::span<const uint8_t> tokens) {
    if (tokens.size() % 2 != 0) {
        throw ParameterError("token sequence length must be even");
    }
    shadow::ShadowRecord out;
    out.params.assign(params.begin(), params.end());
    size_t n = tokens.size() / 2;
    out.basis.bases.resize(n);
    out.outcome.outcomes.resize(n);
    for (size_t i = 0; i < n; i++) {
        uint8_t p = tokens[2 * i];
        uint8_t b = tokens[2 * i + 1];
        if (p >= kVocabSize || b >= kVocabSize) {
            throw ParameterError("token id " + std::to_string(std::max(p, b)) + " is outside the vocabulary");
        }
        if (!is_basis_token(p)) {
            throw ParameterError("expected a basis token at position " + std::to_string(2 * i));
        }
        if (!is_outcome_token(b)) {
            throw ParameterError("expected an outcome token at position " + std::to_string(2 * i + 1));
        }
        out.basis.bases[i] = static_cast<qsim::Pauli>(p - kX);
        out.outcome.outcomes[i] = b == kPlus ? int8_t{1} : int8_t{-1};
    }
    return out;
}

shadow::ShadowRecord detokenize(const TokenizedRecord &record) {
    return detokenize(record.params, record.tokens);
}

std::vector<ParamPoint> simplex_lattice(int denominator) {
    std::vector<ParamPoint> out;
    for (int i = denominator; i >= 0; i--) {
        for (int j = denominator - i; j >= 0; j--) {
            int k = denominator - i - j;
            double d = denominator;
            // Third coordinate from the integer remainder keeps the sum exact.
            out.push_back({i / d, j / d, k / d});
        }
    }
    return out;
}

std::vector<ParamPoint> cluster_training_points() {
    std::vector<ParamPoint> out = simplex_lattice(5);
    out.push_back({4 / 15.0, 5 / 15.0, 6 / 15.0});
    out.push_back({5 / 15.0, 6 / 15.0, 4 / 15.0});
    out.push_back({6 / 15.0, 4 / 15.0, 5 / 15.0});
    return out;
}

std::vector<ParamPoint> default_training_points(qsim::Family family) {
    if (family == qsim::Family::TFIM) {
        return {{0.0}, {0.25}, {0.4}, {0.5}, {0.6}, {0.75}, {0.9}, {1.0}};
    }
    return cluster_training_points();
}

std::vector<GridPoint> training_grid(qsim::Family family, size_t shadows_per_point) {
    std::vector<GridPoint> out;
    for (auto &p : default_training_points(family)) {
        out.push_back({std::move(p), shadows_per_point});
    }
    return out;
}

void Dataset::append(const TokenizedRecord &record) {
    if (static_cast<int>(record.params.size()) != param_dim ||
        static_cast<int>(record.tokens.size()) != seq_tokens()) {
        throw ParameterError("record shape does not match the dataset");
    }
    params.insert(params.end(), record.params.begin(), record.params.end());
    tokens.insert(tokens.end(), record.tokens.begin(), record.tokens.end());
}

Dataset generate_records(qsim::Family family, int n_qubits, const std::vector<ParamPoint> &points,
                         size_t shadows_per_point, uint64_t master_seed, int threads) {
    Dataset ds;
    ds.family = family;
    ds.n_qubits = n_qubits;
    ds.param_dim = qsim::param_dim(family);
    for (const auto &p : points) {
        qsim::HamiltonianSpec{family, p, n_qubits}.validate();
    }
    const size_t per_point_tokens = shadows_per_point * ds.seq_tokens();
    ds.params.resize(points.size() * shadows_per_point * ds.param_dim);
    ds.tokens.resize(points.size() * per_point_tokens);

    parallel_for(points.size(), threads, [&](size_t p) {
        qsim::HamiltonianSpec spec{family, points[p], n_qubits};
        qsim::GroundSpace gs;
        try {
            gs = qsim::solve(spec);
        } catch (const NumericError &e) {
            std::ostringstream msg;
            msg << "ground-state solve failed at parameter point " << p << " (";
            for (size_t k = 0; k < points[p].size(); k++) {
                msg << (k ? "," : "") << points[p][k];
            }
            msg << "): " << e.what();
            throw NumericError(msg.str());
        }
        for (size_t r = 0; r < shadows_per_point; r++) {
            Rng rng = make_stream(master_seed, {p, r});
            shadow::ShadowRecord rec;
            rec.params = points[p];
            rec.basis = shadow::sample_basis(n_qubits, rng);
            rec.outcome = shadow::measure(gs, rec.basis, rng);
            TokenizedRecord tok = tokenize(rec);
            size_t index = p * shadows_per_point + r;
            std::copy(tok.params.begin(), tok.params.end(), ds.params.begin() + index * ds.param_dim);
            std::copy(tok.tokens.begin(), tok.tokens.end(), ds.tokens.begin() + index * ds.seq_tokens());
        }
    });
    return ds;
}

std::string encode_dataset(const Dataset &ds) {
    binio::Writer w;
    w.bytes(kMagic);
    w.u32(DatasetManifest::kFormatVersion);
    w.u8(static_cast<uint8_t>(ds.family));
    w.u8(static_cast<uint8_t>(ds.param_dim));
    w.u16(static_cast<uint16_t>(ds.n_qubits));
    w.u8(kVocabSize);
    for (auto label : kVocabLabels) {
        w.fixed(label, kLabelWidth);
    }
    w.u64(ds.size());
    for (size_t i = 0; i < ds.size(); i++) {
        for (double g : ds.params_of(i)) {
            w.f64(g);
        }
        for (uint8_t t : ds.tokens_of(i)) {
            w.u8(t);
        }
    }
    return w.data();
}

Dataset decode_dataset(std::string_view bytes) {
    binio::Reader r(bytes, "dataset");
    if (r.bytes(kMagic.size()) != kMagic) {
        throw IoError("dataset: bad magic bytes");
    }
    uint32_t version = r.u32();
    if (version != DatasetManifest::kFormatVersion) {
        throw IoError("dataset: unsupported format version " + std::to_string(version));
    }
    Dataset ds;
    uint8_t family = r.u8();
    if (family > 1) {
        throw IoError("dataset: unknown family tag " + std::to_string(family));
    }
    ds.family = static_cast<qsim::Family>(family);
    ds.param_dim = r.u8();
    ds.n_qubits = r.u16();
    if (ds.param_dim != qsim::param_dim(ds.family) || ds.n_qubits < 1) {
        throw IoError("dataset: header shape is inconsistent");
    }
    if (r.u8() != kVocabSize) {
        throw IoError("dataset: vocabulary size mismatch");
    }
    for (auto label : kVocabLabels) {
        if (r.fixed(kLabelWidth) != label) {
            throw IoError("dataset: vocabulary table mismatch");
        }
    }
    uint64_t count = r.u64();
    size_t stride = 8 * ds.param_dim + ds.seq_tokens();
    if (r.remaining() != count * stride) {
        throw IoError("dataset: header declares " + std::to_string(count) + " records but payload holds " +
                      std::to_string(r.remaining() / stride));
    }
    ds.params.reserve(count * ds.param_dim);
    ds.tokens.reserve(count * ds.seq_tokens());
    for (uint64_t i = 0; i < count; i++) {
        for (int k = 0; k < ds.param_dim; k++) {
            ds.params.push_back(r.f64());
        }
        for (int k = 0; k < ds.seq_tokens(); k++) {
            uint8_t t = r.u8();
            bool ok = (k % 2 == 0) ? is_basis_token(t) : is_outcome_token(t);
            if (!ok) {
                throw IoError("dataset: invalid token " + std::to_string(t) + " in record " + std::to_string(i));
            }
            ds.tokens.push_back(t);
        }
    }
    return ds;
}

std::string manifest_to_json(const DatasetManifest &m) {
    nlohmann::ordered_json j;
    j["format"] = "shadowgpt-dataset-manifest";
    j["format_version"] = m.format_version;
    j["family"] = qsim::family_name(m.family);
    j["n_qubits"] = m.n_qubits;
    j["points"] = m.points;
    j["shadows_per_point"] = m.shadows_per_point;
    j["master_seed"] = m.master_seed;
    j["record_count"] = m.record_count;
    j["payload_file"] = m.payload_file;
    j["payload_crc32"] = m.payload_crc32;
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
    DatasetManifest m;
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "shadowgpt-dataset-manifest") {
            throw IoError("manifest: unexpected format tag");
        }
        m.format_version = j.at("format_version").get<uint32_t>();
        m.family = qsim::parse_family(j.at("family").get<std::string>());
        m.n_qubits = j.at("n_qubits").get<int>();
        m.points = j.at("points").get<std::vector<ParamPoint>>();
        m.shadows_per_point = j.at("shadows_per_point").get<size_t>();
        m.master_seed = j.at("master_seed").get<uint64_t>();
        m.record_count = j.at("record_count").get<size_t>();
        m.payload_file = j.at("payload_file").get<std::string>();
        m.payload_crc32 = j.at("payload_crc32").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw IoError(std::string("manifest: ") + e.what());
    }
    if (m.record_count != m.points.size() * m.shadows_per_point) {
        throw IoError("manifest: record_count does not equal points x shadows_per_point");
    }
    return m;
}

void write_manifest(const DatasetManifest &m, const std::filesystem::path &path) {
    binio::write_file(path, manifest_to_json(m));
}

DatasetManifest read_manifest(const std::filesystem::path &path) {
    return manifest_from_json(binio::read_file(path));
}

DatasetManifest generate_dataset(qsim::Family family, int n_qubits, const std::vector<ParamPoint> &points,
                                 size_t shadows_per_point, uint64_t master_seed, const std::filesystem::path &dir,
                                 int threads) {
    Dataset ds = generate_records(family, n_qubits, points, shadows_per_point, master_seed, threads);
    std::string payload = encode_dataset(ds);
    DatasetManifest m;
    m.family = family;
    m.n_qubits = n_qubits;
    m.points = points;
    m.shadows_per_point = shadows_per_point;
    m.master_seed = master_seed;
    m.record_count = ds.size();
    m.payload_file = "shadows.sgd";
    m.payload_crc32 = binio::crc32_hex(payload);
    binio::write_file(dir / m.payload_file, payload);
    write_manifest(m, dir / "manifest.json");
    return m;
}

Dataset load_dataset(const std::filesystem::path &manifest_path) {
    DatasetManifest m = read_manifest(manifest_path);
    std::string payload = binio::read_file(manifest_path.parent_path() / m.payload_file);
    if (binio::crc32_hex(payload) != m.payload_crc32) {
        throw IoError("dataset payload checksum does not match manifest");
    }
    Dataset ds = decode_dataset(payload);
    if (ds.size() != m.record_count) {
        throw IoError("dataset holds " + std::to_string(ds.size()) + " records but manifest declares " +
                      std::to_string(m.record_count));
    }
    if (ds.family != m.family || ds.n_qubits != m.n_qubits) {
        throw IoError("dataset header disagrees with manifest");
    }
    return ds;
}

std::string export_text(const Dataset &ds) {
    std::string out;
    char buf[32];
    for (size_t i = 0; i < ds.size(); i++) {
        out += "g=";
        auto params = ds.params_of(i);
        for (size_t k = 0; k < params.size(); k++) {
            std::snprintf(buf, sizeof(buf), "%s%.17g", k ? "," : "", params[k]);
            out += buf;
        }
        out += " |";
        for (uint8_t t : ds.tokens_of(i)) {
            out += ' ';
            out += t == kPlus ? "+" : t == kMinus ? "-" : kVocabLabels[t];
        }
        out += '\n';
    }
    return out;
}

Split split_dataset(size_t count, uint64_t seed, double validation_fraction) {
    Split split;
    const uint64_t threshold = static_cast<uint64_t>(validation_fraction * 1'000'000.0);
    for (size_t i = 0; i < count; i++) {
        if (derive_seed(seed, {0x5B117, i}) % 1'000'000 < threshold) {
            split.validation.push_back(i);
        } else {
            split.train.push_back(i);
        }
    }
    return split;
}

}  // namespace shadowgpt::dataset
