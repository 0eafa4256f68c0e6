// Copyright 2026 The fsfqpt Authors
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

#ifndef FSFQPT_FOCK_H
#define FSFQPT_FOCK_H

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fsfqpt {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Raised when a quantity that must be non-negative definite is not, beyond tolerance.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Truncated single-mode Fock space: photon numbers 0..n_max.
class HilbertSpec {
   public:
    explicit HilbertSpec(int n_max);

    int n_max() const {
        return n_max_;
    }
    /// n_max + 1.
    size_t dim() const {
        return static_cast<size_t>(n_max_) + 1;
    }

    bool operator==(const HilbertSpec &other) const = default;

   private:
    int n_max_;
};

/// Normalized truncated pure state. `norm_deficit` is the probability mass that the
/// untruncated state had beyond n_max.
struct PureState {
    CVector coeffs;
    double norm_deficit = 0;
};

/// Density matrix in the truncated Fock basis. The trace may be below one for the
/// un-normalized output of a conditional process.
class DensityMatrix {
   public:
    /// Validates Hermiticity (1e-12), PSD (min eigenvalue >= -1e-10) and 0 < trace <= 1 + 1e-12.
    explicit DensityMatrix(CMatrix elems);

    static DensityMatrix from_pure(const CVector &psi);
    static DensityMatrix fock(const HilbertSpec &spec, int n);

    const CMatrix &elems() const {
        return elems_;
    }
    size_t dim() const {
        return static_cast<size_t>(elems_.rows());
    }
    double trace() const;
    bool is_normalized(double tol = 1e-9) const;
    /// Returns this state divided by its trace.
    DensityMatrix normalized() const;

   private:
    struct Unchecked {};
    DensityMatrix(CMatrix elems, Unchecked);
    CMatrix elems_;
};

/// One homodyne sample: local-oscillator phase and quadrature value.
struct QuadraturePoint {
    double theta;
    double x;

    bool operator==(const QuadraturePoint &other) const = default;
};

/// Half-width of the quadrature acquisition window.
inline constexpr double kQuadratureWindow = 5.0;
/// Coherent probes whose truncation loses this much probability are rejected.
inline constexpr double kMaxNormDeficit = 0.01;

/// Truncated coherent state |alpha>, renormalized. Throws std::invalid_argument when
/// |alpha| > 2 or the truncation deficit reaches kMaxNormDeficit.
PureState coherent_state(cdouble alpha, const HilbertSpec &spec);

/// Harmonic-oscillator eigenfunction psi_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)).
///
/// Evaluated with the normalized three-term recurrence
///   psi_{n}(x) = sqrt(2/n) x psi_{n-1}(x) - sqrt((n-1)/n) psi_{n-2}(x),
/// which never forms a factorial or a raw Hermite polynomial.
double quadrature_wavefunction(int n, double x);

/// Fills out[0..n_max] with psi_n(x) in a single recurrence pass.
void quadrature_wavefunctions(double x, std::span<double> out);

/// Quadrature marginal pr(x|theta) = sum_mn rho_mn psi_m(x) psi_n(x) exp(i(m-n)theta),
/// for the convention X_theta = (a e^{i theta} + a^dag e^{-i theta}) / sqrt(2).
/// Requires a unit-trace state; negative round-off is clamped to zero.
std::vector<double> quadrature_pdf(const DensityMatrix &rho, double theta, std::span<const double> xs);
double quadrature_pdf(const DensityMatrix &rho, double theta, double x);

/// Two-mode beam splitter exp(i phi (a^dag b + a b^dag)), phi = arccos(sqrt(R)), on the
/// Fock space with total photon number <= total_cutoff.
///
/// Basis ordering: sectors of increasing total photon number N, and inside a sector the
/// state |a, N - a> for a = N, N-1, ..., 0. Use `two_mode_index` to locate elements.
/// The generator is diagonalized exactly inside each sector.
class BeamSplitterUnitary {
   public:
    BeamSplitterUnitary(double reflectivity, int total_cutoff);

    /// <a_out, b_out| U |a_in, b_in>; zero across photon-number sectors.
    cdouble element(int a_out, int b_out, int a_in, int b_in) const;
    /// Unitary block acting on the sector with `total` photons.
    const CMatrix &block(int total) const {
        return blocks_.at(static_cast<size_t>(total));
    }
    int total_cutoff() const {
        return static_cast<int>(blocks_.size()) - 1;
    }

   private:
    std::vector<CMatrix> blocks_;
};

BeamSplitterUnitary bs_unitary(double reflectivity, int total_cutoff);

/// Hilbert-Schmidt random state G G^dag / Tr(G G^dag) with G a dim x dim complex Ginibre
/// matrix drawn from `rng`.
DensityMatrix random_density_matrix(const HilbertSpec &spec, std::mt19937_64 &rng);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 of two unit-trace states.
double state_fidelity(const DensityMatrix &rho, const DensityMatrix &sigma);

/// Fidelity of two Hermitian PSD matrices of unit trace; shared by state and Choi fidelity.
/// Throws NumericalError when either has an eigenvalue below -tol.
double uhlmann_fidelity(const CMatrix &a, const CMatrix &b, double tol = 1e-8);

/// Principal square root of a Hermitian PSD matrix (eigenvalues below zero clamped).
CMatrix psd_sqrt(const CMatrix &m);

/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const CMatrix &m);

}  // namespace fsfqpt

#endif
