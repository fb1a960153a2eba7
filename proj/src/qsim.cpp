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

#include "qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "rng.hpp"

namespace shadowgpt::qsim {

std::string_view family_name(Family family) {
    switch (family) {
        case Family::TFIM:
            return "tfim";
        case Family::ClusterIsing:
            return "cluster_ising";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    if (name == "tfim") {
        return Family::TFIM;
    }
    if (name == "cluster_ising" || name == "cluster") {
        return Family::ClusterIsing;
    }
    throw ParameterError("unknown Hamiltonian family '" + std::string(name) + "' (expected tfim or cluster_ising)");
}

int param_dim(Family family) {
    return family == Family::TFIM ? 1 : 3;
}

HamiltonianSpec HamiltonianSpec::tfim(double g, int n_qubits) {
    return {Family::TFIM, {g}, n_qubits};
}

HamiltonianSpec HamiltonianSpec::cluster_ising(double g1, double g2, double g3, int n_qubits) {
    return {Family::ClusterIsing, {g1, g2, g3}, n_qubits};
}

void HamiltonianSpec::validate() const {
    if (n_qubits < 3 || n_qubits > kMaxQubits) {
        throw ParameterError(
            "n_qubits must satisfy 3 <= N <= " + std::to_string(kMaxQubits) + " (got " + std::to_string(n_qubits) +
            ")");
    }
    for (double p : params) {
        if (!std::isfinite(p)) {
            throw ParameterError("Hamiltonian parameters must be finite");
        }
    }
    if (family == Family::TFIM) {
        if (params.size() != 1) {
            throw ParameterError("tfim takes exactly one parameter g (got " + std::to_string(params.size()) + ")");
        }
        if (params[0] < 0.0 || params[0] > 1.0) {
            std::ostringstream msg;
            msg << "tfim parameter must satisfy 0 <= g <= 1 (got g=" << params[0] << ")";
            throw ParameterError(msg.str());
        }
        return;
    }
    if (params.size() != 3) {
        throw ParameterError(
            "cluster_ising takes exactly three parameters g1,g2,g3 (got " + std::to_string(params.size()) + ")");
    }
    for (size_t k = 0; k < 3; k++) {
        if (params[k] < 0.0) {
            std::ostringstream msg;
            msg << "cluster_ising parameters must satisfy g" << (k + 1) << " >= 0 (got " << params[k] << ")";
            throw ParameterError(msg.str());
        }
    }
    double sum = params[0] + params[1] + params[2];
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "cluster_ising parameters must satisfy g1+g2+g3 = 1 (got sum=" << sum << ")";
        throw ParameterError(msg.str());
    }
}

char pauli_char(Pauli p) {
    switch (p) {
        case Pauli::X:
            return 'X';
        case Pauli::Y:
            return 'Y';
        case Pauli::Z:
            return 'Z';
    }
    return '?';
}

Pauli parse_pauli(char c) {
    switch (c) {
        case 'X':
        case 'x':
            return Pauli::X;
        case 'Y':
        case 'y':
            return Pauli::Y;
        case 'Z':
        case 'z':
            return Pauli::Z;
    }
    throw ParameterError(std::string("unknown Pauli label '") + c + "'");
}

PauliString::PauliString(std::initializer_list<std::pair<int, Pauli>> support)
    : PauliString(std::vector<std::pair<int, Pauli>>(support)) {
}

PauliString::PauliString(std::vector<std::pair<int, Pauli>> support) : support_(std::move(support)) {
    std::sort(support_.begin(), support_.end());
    for (size_t k = 0; k < support_.size(); k++) {
        if (support_[k].first < 0) {
            throw ParameterError("Pauli string site indices must be non-negative");
        }
        if (k > 0 && support_[k].first == support_[k - 1].first) {
            throw ParameterError("Pauli string site indices must be distinct (site " +
                                 std::to_string(support_[k].first) + " repeated)");
        }
    }
}

PauliString PauliString::parse(std::string_view text) {
    std::vector<std::pair<int, Pauli>> support;
    std::istringstream in{std::string(text)};
    std::string item;
    while (in >> item) {
        if (item.size() < 2) {
            throw ParameterError("malformed Pauli factor '" + item + "' (expected e.g. Z3)");
        }
        Pauli p = parse_pauli(item[0]);
        int site = 0;
        for (size_t k = 1; k < item.size(); k++) {
            if (item[k] < '0' || item[k] > '9') {
                throw ParameterError("malformed Pauli factor '" + item + "' (expected e.g. Z3)");
            }
            site = site * 10 + (item[k] - '0');
        }
        support.emplace_back(site, p);
    }
    return PauliString(std::move(support));
}

PauliString PauliString::shifted(int shift, int n_qubits) const {
    std::vector<std::pair<int, Pauli>> out;
    out.reserve(support_.size());
    for (auto [site, p] : support_) {
        out.emplace_back(((site + shift) % n_qubits + n_qubits) % n_qubits, p);
    }
    return PauliString(std::move(out));
}

std::string PauliString::to_string() const {
    std::string out;
    for (auto [site, p] : support_) {
        if (!out.empty()) {
            out += ' ';
        }
        out += pauli_char(p);
        out += std::to_string(site);
    }
    return out;
}

void PauliString::check_range(int n_qubits) const {
    for (auto [site, p] : support_) {
        if (site >= n_qubits) {
            throw ParameterError("Pauli string site " + std::to_string(site) + " out of range for N=" +
                                 std::to_string(n_qubits));
        }
    }
}

PureState PureState::product_zero(int n_qubits) {
    PureState s;
    s.n_qubits = n_qubits;
    s.amplitudes = StateVector::Zero(int64_t{1} << n_qubits);
    s.amplitudes(0) = 1.0;
    return s;
}

PureState PureState::product_plus(int n_qubits) {
    PureState s;
    s.n_qubits = n_qubits;
    int64_t dim = int64_t{1} << n_qubits;
    s.amplitudes = StateVector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    return s;
}

GroundSpace GroundSpace::from_pure(const PureState &state) {
    GroundSpace gs;
    gs.n_qubits = state.n_qubits;
    gs.basis.push_back(state.amplitudes.normalized());
    return gs;
}

std::vector<PauliTerm> hamiltonian_terms(const HamiltonianSpec &spec) {
    spec.validate();
    const int n = spec.n_qubits;
    auto at = [n](int i) { return ((i % n) + n) % n; };
    std::vector<PauliTerm> terms;
    if (spec.family == Family::TFIM) {
        double g = spec.params[0];
        for (int i = 0; i < n; i++) {
            terms.push_back({-(1.0 - g), PauliString{{i, Pauli::Z}, {at(i + 1), Pauli::Z}}});
        }
        for (int i = 0; i < n; i++) {
            terms.push_back({-g, PauliString{{i, Pauli::X}}});
        }
        return terms;
    }
    double g1 = spec.params[0];
    double g2 = spec.params[1];
    double g3 = spec.params[2];
    for (int i = 0; i < n; i++) {
        terms.push_back({-g1, PauliString{{at(i - 1), Pauli::Z}, {at(i + 1), Pauli::Z}}});
    }
    for (int i = 0; i < n; i++) {
        terms.push_back({-g2, PauliString{{i, Pauli::X}}});
    }
    for (int i = 0; i < n; i++) {
        terms.push_back({-g3, PauliString{{at(i - 1), Pauli::Z}, {i, Pauli::X}, {at(i + 1), Pauli::Z}}});
    }
    return terms;
}

namespace {

struct TermMasks {
    double coefficient;
    uint64_t flip;
    uint64_t phase;
};

}  // namespace

Hamiltonian build_hamiltonian(const HamiltonianSpec &spec) {
    Hamiltonian h;
    h.spec = spec;
    h.terms = hamiltonian_terms(spec);
    const int n = spec.n_qubits;
    const int64_t dim = int64_t{1} << n;

    std::vector<TermMasks> masks;
    for (const auto &term : h.terms) {
        h.max_coupling = std::max(h.max_coupling, std::abs(term.coefficient));
        TermMasks m{term.coefficient, 0, 0};
        for (auto [site, p] : term.op.support()) {
            if (p == Pauli::Y) {
                throw NumericError("real Hamiltonian builder received a Y factor");
            }
            if (p == Pauli::X) {
                m.flip |= site_mask(site, n);
            } else {
                m.phase |= site_mask(site, n);
            }
        }
        masks.push_back(m);
    }

    // Column-by-column accumulation in fixed term order keeps (r, c) and (c, r)
    // bit-identical: both sum the same coefficients in the same sequence.
    std::vector<Eigen::Triplet<double, int64_t>> triplets;
    std::vector<std::pair<uint64_t, double>> column;
    for (int64_t x = 0; x < dim; x++) {
        column.clear();
        for (const auto &m : masks) {
            if (m.coefficient == 0.0) {
                continue;
            }
            uint64_t row = static_cast<uint64_t>(x) ^ m.flip;
            double sign = (std::popcount(static_cast<uint64_t>(x) & m.phase) & 1) ? -1.0 : 1.0;
            auto it = std::find_if(column.begin(), column.end(), [row](const auto &e) { return e.first == row; });
            if (it == column.end()) {
                column.emplace_back(row, m.coefficient * sign);
            } else {
                it->second += m.coefficient * sign;
            }
        }
        for (auto [row, value] : column) {
            if (value != 0.0) {
                triplets.emplace_back(static_cast<int64_t>(row), x, value);
            }
        }
    }
    h.matrix.resize(dim, dim);
    h.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return h;
}

double default_degeneracy_tol(const Hamiltonian &h) {
    return 1e-8 * (h.max_coupling > 0 ? h.max_coupling : 1.0);
}

namespace {

struct LanczosResult {
    double value;
    Eigen::VectorXd vector;
};

void project_out(Eigen::VectorXd &w, const std::vector<Eigen::VectorXd> &basis) {
    for (const auto &b : basis) {
        w -= b.dot(w) * b;
    }
}

// Lowest eigenpair of H restricted to the orthogonal complement of `deflate`.
// Full reorthogonalization against the whole Krylov basis.
LanczosResult lanczos_lowest(const SparseOperator &h, const std::vector<Eigen::VectorXd> &deflate, uint64_t seed) {
    const int64_t dim = h.rows();
    const int max_iter = static_cast<int>(std::min<int64_t>(dim, 600));
    const double tol = 1e-11;

    Rng rng(seed);
    Eigen::VectorXd v(dim);
    for (int64_t k = 0; k < dim; k++) {
        v(k) = 2.0 * uniform01(rng) - 1.0;
    }
    project_out(v, deflate);
    project_out(v, deflate);
    v.normalize();

    std::vector<Eigen::VectorXd> krylov{v};
    std::vector<double> alphas;
    std::vector<double> betas;
    double residual = 0.0;
    for (int j = 0; j < max_iter; j++) {
        Eigen::VectorXd w = h * krylov[j];
        project_out(w, deflate);
        double alpha = krylov[j].dot(w);
        w -= alpha * krylov[j];
        if (j > 0) {
            w -= betas[j - 1] * krylov[j - 1];
        }
        for (int pass = 0; pass < 2; pass++) {
            for (const auto &q : krylov) {
                w -= q.dot(w) * q;
            }
            project_out(w, deflate);
        }
        double beta = w.norm();
        alphas.push_back(alpha);

        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alphas.data(), j + 1);
        Eigen::VectorXd sub = j > 0 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(betas.data(), j))
                                    : Eigen::VectorXd(0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        double theta = tri.eigenvalues()(0);
        Eigen::VectorXd s = tri.eigenvectors().col(0);
        residual = std::abs(beta * s(j));
        bool exhausted = beta < 1e-13 || j + 1 == max_iter;
        if (residual < tol * std::max(1.0, std::abs(theta)) || exhausted) {
            if (!exhausted || residual < 1e-8) {
                Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
                for (int k = 0; k <= j; k++) {
                    x += s(k) * krylov[k];
                }
                project_out(x, deflate);
                x.normalize();
                return {theta, std::move(x)};
            }
            break;
        }
        betas.push_back(beta);
        krylov.push_back(w / beta);
    }
    std::ostringstream msg;
    msg << "Lanczos eigensolver did not converge after " << max_iter << " iterations (residual " << residual << ")";
    throw NumericError(msg.str());
}

GroundSpace dense_ground_space(const Hamiltonian &h, double tol) {
    Eigen::MatrixXd dense = Eigen::MatrixXd(h.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success) {
        throw NumericError("dense eigensolver failed for dimension " + std::to_string(dense.rows()));
    }
    GroundSpace gs;
    gs.n_qubits = h.spec.n_qubits;
    gs.degeneracy_tol = tol;
    gs.energy = solver.eigenvalues()(0);
    for (int64_t k = 0; k < dense.rows(); k++) {
        if (solver.eigenvalues()(k) - gs.energy > tol) {
            break;
        }
        gs.basis.push_back(solver.eigenvectors().col(k).cast<std::complex<double>>());
    }
    return gs;
}

GroundSpace lanczos_ground_space(const Hamiltonian &h, double tol) {
    std::vector<Eigen::VectorXd> found;
    GroundSpace gs;
    gs.n_qubits = h.spec.n_qubits;
    gs.degeneracy_tol = tol;
    while (found.size() < static_cast<size_t>(h.dimension())) {
        LanczosResult r = lanczos_lowest(h.matrix, found, 0x5EED0000 + found.size());
        if (found.empty()) {
            gs.energy = r.value;
        } else if (r.value - gs.energy > tol) {
            break;
        }
        found.push_back(std::move(r.vector));
    }
    for (const auto &v : found) {
        gs.basis.push_back(v.cast<std::complex<double>>());
    }
    return gs;
}

}  // namespace

GroundSpace ground_space(const Hamiltonian &h, double degeneracy_tol, EigenMethod method) {
    if (h.spec.n_qubits > kMaxQubits) {
        throw ParameterError("ground_space supports at most 2^" + std::to_string(kMaxQubits) + " dimensions");
    }
    if (method == EigenMethod::Auto) {
        method = h.dimension() <= kDenseLimit ? EigenMethod::Dense : EigenMethod::Lanczos;
    }
    return method == EigenMethod::Dense ? dense_ground_space(h, degeneracy_tol)
                                        : lanczos_ground_space(h, degeneracy_tol);
}

GroundSpace ground_space(const Hamiltonian &h) {
    return ground_space(h, default_degeneracy_tol(h));
}

GroundSpace solve(const HamiltonianSpec &spec) {
    return ground_space(build_hamiltonian(spec));
}

StateVector apply_pauli(const PauliString &op, const StateVector &state, int n_qubits) {
    op.check_range(n_qubits);
    uint64_t flip = 0;
    uint64_t z_phase = 0;
    uint64_t y_mask = 0;
    for (auto [site, p] : op.support()) {
        uint64_t m = site_mask(site, n_qubits);
        if (p != Pauli::Z) {
            flip |= m;
        }
        if (p != Pauli::X) {
            z_phase |= m;
        }
        if (p == Pauli::Y) {
            y_mask |= m;
        }
    }
    // Y = i X Z: each Y contributes a global i and a Z-type sign.
    static const std::complex<double> kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    std::complex<double> global = kIPow[std::popcount(y_mask) & 3];
    StateVector out(state.size());
    for (int64_t x = 0; x < state.size(); x++) {
        double sign = (std::popcount(static_cast<uint64_t>(x) & z_phase) & 1) ? -1.0 : 1.0;
        out(static_cast<int64_t>(static_cast<uint64_t>(x) ^ flip)) = global * sign * state(x);
    }
    return out;
}

double expect_pauli(const GroundSpace &gs, const PauliString &obs) {
    obs.check_range(gs.n_qubits);
    std::complex<double> total = 0.0;
    for (const auto &v : gs.basis) {
        total += v.dot(apply_pauli(obs, v, gs.n_qubits));
    }
    total /= static_cast<double>(gs.basis.size());
    if (std::abs(total.imag()) > 1e-10) {
        throw NumericError("Pauli expectation has imaginary residue " + std::to_string(total.imag()));
    }
    return total.real();
}

double expect_pauli_translation_averaged(const GroundSpace &gs, const PauliString &obs) {
    double sum = 0.0;
    for (int shift = 0; shift < gs.n_qubits; shift++) {
        sum += expect_pauli(gs, obs.shifted(shift, gs.n_qubits));
    }
    return sum / gs.n_qubits;
}

Eigen::MatrixXcd reduced_density_matrix(const GroundSpace &gs, std::span<const int> region) {
    const int n = gs.n_qubits;
    const int k = static_cast<int>(region.size());
    if (k == 0 || k > 6) {
        throw ParameterError("region size must satisfy 1 <= |A| <= 6 (got " + std::to_string(k) + ")");
    }
    uint64_t region_mask = 0;
    for (int site : region) {
        if (site < 0 || site >= n) {
            throw ParameterError("region site " + std::to_string(site) + " out of range for N=" + std::to_string(n));
        }
        if (region_mask & site_mask(site, n)) {
            throw ParameterError("region sites must be distinct");
        }
        region_mask |= site_mask(site, n);
    }
    const int64_t dim = int64_t{1} << n;
    const int64_t dim_a = int64_t{1} << k;
    const int64_t dim_b = dim >> k;

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim_a, dim_a);
    Eigen::MatrixXcd m(dim_a, dim_b);
    for (const auto &v : gs.basis) {
        for (int64_t x = 0; x < dim; x++) {
            uint64_t ux = static_cast<uint64_t>(x);
            int64_t a = 0;
            for (int site : region) {
                a = (a << 1) | static_cast<int64_t>((ux >> site_bit(site, n)) & 1);
            }
            int64_t b = 0;
            for (int bit = n - 1; bit >= 0; bit--) {
                if (!((region_mask >> bit) & 1)) {
                    b = (b << 1) | static_cast<int64_t>((ux >> bit) & 1);
                }
            }
            m(a, b) = v(x);
        }
        rho.noalias() += m * m.adjoint();
    }
    return rho / static_cast<double>(gs.basis.size());
}

double renyi2_exact(const GroundSpace &gs, std::span<const int> region) {
    Eigen::MatrixXcd rho = reduced_density_matrix(gs, region);
    return -std::log(rho.squaredNorm());
}

std::vector<int> cyclic_region(int start, int size, int n_qubits) {
    std::vector<int> out;
    for (int k = 0; k < size; k++) {
        out.push_back(((start + k) % n_qubits + n_qubits) % n_qubits);
    }
    return out;
}

}  // namespace shadowgpt::qsim
