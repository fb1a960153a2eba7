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

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace shadowgpt::qsim {

// Basis-ordering convention, used by every module that touches amplitudes:
// site 0 is the MOST significant bit of the computational-basis index.
// For N qubits, site i lives at bit position (N - 1 - i).
constexpr int site_bit(int site, int n_qubits) {
    return n_qubits - 1 - site;
}
constexpr uint64_t site_mask(int site, int n_qubits) {
    return uint64_t{1} << site_bit(site, n_qubits);
}

constexpr int kMaxQubits = 14;

enum class Family : uint8_t {
    TFIM = 0,
    ClusterIsing = 1,
};

std::string_view family_name(Family family);
Family parse_family(std::string_view name);
int param_dim(Family family);

/// One member of a Hamiltonian family: the family tag, its coupling vector g
/// and the chain length. Indices are periodic (site N+i is site i).
struct HamiltonianSpec {
    Family family = Family::TFIM;
    std::vector<double> params;
    int n_qubits = 10;

    static HamiltonianSpec tfim(double g, int n_qubits);
    static HamiltonianSpec cluster_ising(double g1, double g2, double g3, int n_qubits);

    /// Throws ParameterError naming the violated constraint.
    void validate() const;
};

enum class Pauli : uint8_t {
    X = 0,
    Y = 1,
    Z = 2,
};

char pauli_char(Pauli p);
Pauli parse_pauli(char c);

/// A Pauli operator with explicit support; identity elsewhere.
/// Support is kept sorted by site.
class PauliString {
   public:
    PauliString() = default;
    PauliString(std::initializer_list<std::pair<int, Pauli>> support);
    explicit PauliString(std::vector<std::pair<int, Pauli>> support);

    /// Parses text like "Z0 X1 Z2".
    static PauliString parse(std::string_view text);

    const std::vector<std::pair<int, Pauli>> &support() const {
        return support_;
    }
    size_t weight() const {
        return support_.size();
    }
    bool empty() const {
        return support_.empty();
    }
    /// Cyclic translation by `shift` sites on an N-site ring.
    PauliString shifted(int shift, int n_qubits) const;
    std::string to_string() const;
    void check_range(int n_qubits) const;

    bool operator==(const PauliString &other) const = default;

   private:
    std::vector<std::pair<int, Pauli>> support_;
};

struct PauliTerm {
    double coefficient;
    PauliString op;
};

using SparseOperator = Eigen::SparseMatrix<double, Eigen::ColMajor, int64_t>;
using StateVector = Eigen::VectorXcd;

struct Hamiltonian {
    HamiltonianSpec spec;
    /// Every term of the family in a fixed order, zero coefficients included.
    std::vector<PauliTerm> terms;
    SparseOperator matrix;
    /// Largest |coefficient|; the scale for degeneracy detection.
    double max_coupling = 0.0;
    int64_t dimension() const {
        return matrix.rows();
    }
};

/// Pure state carrier. Amplitude index uses the site_bit convention above.
struct PureState {
    StateVector amplitudes;
    int n_qubits = 0;
    static PureState product_zero(int n_qubits);
    static PureState product_plus(int n_qubits);
};

/// Ground energy plus an orthonormal basis of the ground level. The physical
/// state is the uniform mixture over `basis`.
struct GroundSpace {
    double energy = 0.0;
    std::vector<StateVector> basis;
    double degeneracy_tol = 0.0;
    int n_qubits = 0;

    static GroundSpace from_pure(const PureState &state);
    size_t degeneracy() const {
        return basis.size();
    }
};

enum class EigenMethod {
    Auto,
    Dense,
    Lanczos,
};

constexpr int64_t kDenseLimit = 4096;

std::vector<PauliTerm> hamiltonian_terms(const HamiltonianSpec &spec);
Hamiltonian build_hamiltonian(const HamiltonianSpec &spec);

/// Absolute degeneracy tolerance: 1e-8 in units of the largest coupling.
double default_degeneracy_tol(const Hamiltonian &h);

GroundSpace ground_space(const Hamiltonian &h, double degeneracy_tol, EigenMethod method = EigenMethod::Auto);
GroundSpace ground_space(const Hamiltonian &h);
GroundSpace solve(const HamiltonianSpec &spec);

StateVector apply_pauli(const PauliString &op, const StateVector &state, int n_qubits);

/// Tr(rho O) for the uniform ground-space mixture.
double expect_pauli(const GroundSpace &gs, const PauliString &obs);
/// Average of expect_pauli over all N cyclic placements of `obs`.
double expect_pauli_translation_averaged(const GroundSpace &gs, const PauliString &obs);

Eigen::MatrixXcd reduced_density_matrix(const GroundSpace &gs, std::span<const int> region);
/// -log Tr(rho_A^2), natural log.
double renyi2_exact(const GroundSpace &gs, std::span<const int> region);

/// Contiguous cyclic region {start, start+1, ..., start+size-1} mod N.
std::vector<int> cyclic_region(int start, int size, int n_qubits);

}  // namespace shadowgpt::qsim
