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

#include "fsfqpt/fock.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

using namespace fsfqpt;

HilbertSpec::HilbertSpec(int n_max) : n_max_(n_max) {
    if (n_max < 1) {
        throw std::invalid_argument("n_max must be at least 1, got " + std::to_string(n_max));
    }
}

DensityMatrix::DensityMatrix(CMatrix elems, Unchecked) : elems_(std::move(elems)) {
}

DensityMatrix::DensityMatrix(CMatrix elems) : elems_(std::move(elems)) {
    if (elems_.rows() != elems_.cols() || elems_.rows() == 0) {
        throw std::invalid_argument("density matrix must be square and non-empty");
    }
    double herm_err = (elems_ - elems_.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err > 1e-12) {
        throw std::invalid_argument("density matrix is not Hermitian (error " + std::to_string(herm_err) + ")");
    }
    double tr = trace();
    if (!(tr > 0) || tr > 1 + 1e-12) {
        throw std::invalid_argument("density matrix trace out of (0, 1]: " + std::to_string(tr));
    }
    if (min_eigenvalue(elems_) < -1e-10) {
        throw std::invalid_argument("density matrix is not positive semidefinite");
    }
}

DensityMatrix DensityMatrix::from_pure(const CVector &psi) {
    return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::fock(const HilbertSpec &spec, int n) {
    if (n < 0 || n > spec.n_max()) {
        throw std::invalid_argument("Fock index out of range");
    }
    CMatrix m = CMatrix::Zero(spec.dim(), spec.dim());
    m(n, n) = 1;
    return DensityMatrix(std::move(m), Unchecked{});
}

double DensityMatrix::trace() const {
    return elems_.trace().real();
}

bool DensityMatrix::is_normalized(double tol) const {
    return std::abs(trace() - 1) <= tol;
}

DensityMatrix DensityMatrix::normalized() const {
    return DensityMatrix(elems_ / trace(), Unchecked{});
}

PureState fsfqpt::coherent_state(cdouble alpha, const HilbertSpec &spec) {
    double mag = std::abs(alpha);
    if (mag > 2) {
        throw std::invalid_argument("coherent amplitude |alpha| = " + std::to_string(mag) + " exceeds 2");
    }
    size_t d = spec.dim();
    CVector c(d);
    c(0) = std::exp(-mag * mag / 2);
    for (size_t n = 1; n < d; n++) {
        c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    }
    double kept = c.squaredNorm();
    PureState out{c / std::sqrt(kept), std::max(0.0, 1 - kept)};
    if (out.norm_deficit >= kMaxNormDeficit) {
        throw std::invalid_argument(
            "coherent state |alpha| = " + std::to_string(mag) + " loses " + std::to_string(out.norm_deficit) +
            " probability beyond n_max = " + std::to_string(spec.n_max()) + "; raise n_max or lower |alpha|");
    }
    return out;
}

void fsfqpt::quadrature_wavefunctions(double x, std::span<double> out) {
    if (out.empty()) {
        return;
    }
    out[0] = std::exp(-x * x / 2) / std::sqrt(std::sqrt(std::numbers::pi));
    if (out.size() > 1) {
        out[1] = std::numbers::sqrt2 * x * out[0];
    }
    for (size_t n = 2; n < out.size(); n++) {
        double dn = static_cast<double>(n);
        out[n] = std::sqrt(2 / dn) * x * out[n - 1] - std::sqrt((dn - 1) / dn) * out[n - 2];
    }
}

double fsfqpt::quadrature_wavefunction(int n, double x) {
    if (n < 0) {
        throw std::invalid_argument("negative photon number");
    }
    std::vector<double> buf(static_cast<size_t>(n) + 1);
    quadrature_wavefunctions(x, buf);
    return buf.back();
}

std::vector<double> fsfqpt::quadrature_pdf(const DensityMatrix &rho, double theta, std::span<const double> xs) {
    if (!rho.is_normalized()) {
        throw std::invalid_argument("quadrature_pdf needs a unit-trace state; normalize the process output first");
    }
    size_t d = rho.dim();
    // Phase-rotated matrix sigma_mn = rho_mn e^{i(m-n)theta}; only its real part survives
    // the symmetric sum over (m, n).
    Eigen::MatrixXd re(d, d);
    for (size_t m = 0; m < d; m++) {
        for (size_t n = 0; n < d; n++) {
            double phase = static_cast<double>(static_cast<long>(m) - static_cast<long>(n)) * theta;
            re(m, n) = (rho.elems()(m, n) * std::polar(1.0, phase)).real();
        }
    }
    std::vector<double> out;
    out.reserve(xs.size());
    Eigen::VectorXd psi(d);
    for (double x : xs) {
        quadrature_wavefunctions(x, std::span<double>(psi.data(), d));
        out.push_back(std::max(0.0, psi.dot(re * psi)));
    }
    return out;
}

double fsfqpt::quadrature_pdf(const DensityMatrix &rho, double theta, double x) {
    return quadrature_pdf(rho, theta, std::span<const double>(&x, 1))[0];
}

BeamSplitterUnitary::BeamSplitterUnitary(double reflectivity, int total_cutoff) {
    if (!(reflectivity >= 0 && reflectivity <= 1)) {
        throw std::invalid_argument("beam splitter reflectivity must lie in [0, 1]");
    }
    if (total_cutoff < 0) {
        throw std::invalid_argument("negative photon cutoff");
    }
    double phi = std::acos(std::sqrt(reflectivity));
    for (int total = 0; total <= total_cutoff; total++) {
        // Sector basis |a, total - a>, listed as a = total, ..., 0 (index i = total - a).
        // Generator H = a^dag b + a b^dag is real symmetric and tridiagonal here.
        int dim = total + 1;
        Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i + 1 < dim; i++) {
            int a = total - i;
            int b = i;
            // a b^dag |a, b> = sqrt(a (b + 1)) |a - 1, b + 1>
            double v = std::sqrt(static_cast<double>(a) * (b + 1));
            gen(i + 1, i) = v;
            gen(i, i + 1) = v;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gen);
        CVector phases = (eig.eigenvalues() * phi).unaryExpr([](double t) {
            return std::polar(1.0, t);
        });
        CMatrix vecs = eig.eigenvectors().cast<cdouble>();
        blocks_.push_back(vecs * phases.asDiagonal() * vecs.adjoint());
    }
}

cdouble BeamSplitterUnitary::element(int a_out, int b_out, int a_in, int b_in) const {
    int total = a_in + b_in;
    if (a_out < 0 || b_out < 0 || a_in < 0 || b_in < 0 || a_out + b_out != total) {
        return 0;
    }
    if (total > total_cutoff()) {
        throw std::out_of_range("beam splitter element beyond photon cutoff");
    }
    return blocks_[static_cast<size_t>(total)](total - a_out, total - a_in);
}

BeamSplitterUnitary fsfqpt::bs_unitary(double reflectivity, int total_cutoff) {
    return BeamSplitterUnitary(reflectivity, total_cutoff);
}

DensityMatrix fsfqpt::random_density_matrix(const HilbertSpec &spec, std::mt19937_64 &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    size_t d = spec.dim();
    CMatrix g(d, d);
    for (size_t c = 0; c < d; c++) {
        for (size_t r = 0; r < d; r++) {
            double re = normal(rng);
            double im = normal(rng);
            g(r, c) = cdouble(re, im);
        }
    }
    CMatrix rho = g * g.adjoint();
    rho = (rho + rho.adjoint()) / 2;
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho));
}

double fsfqpt::min_eigenvalue(const CMatrix &m) {
    CMatrix h = (m + m.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

CMatrix fsfqpt::psd_sqrt(const CMatrix &m) {
    CMatrix h = (m + m.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
    Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
}

double fsfqpt::uhlmann_fidelity(const CMatrix &a, const CMatrix &b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("fidelity operands differ in dimension");
    }
    if (min_eigenvalue(a) < -tol || min_eigenvalue(b) < -tol) {
        throw NumericalError("fidelity operand is not positive semidefinite");
    }
    CMatrix ra = psd_sqrt(a);
    CMatrix inner = ra * b * ra;
    inner = (inner + inner.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(inner, Eigen::EigenvaluesOnly);
    double s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(s * s, 0.0, 1.0);
}

double fsfqpt::state_fidelity(const DensityMatrix &rho, const DensityMatrix &sigma) {
    if (!rho.is_normalized() || !sigma.is_normalized()) {
        throw std::invalid_argument("state_fidelity needs unit-trace states");
    }
    return uhlmann_fidelity(rho.elems(), sigma.elems(), 1e-10);
}
