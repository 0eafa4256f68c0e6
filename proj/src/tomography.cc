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

#include "fsfqpt/tomography.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fsfqpt {

namespace {

constexpr double kProbabilityFloor = 1e-300;
constexpr double kPsdDrift = -1e-10;
constexpr double kMonotoneSlack = 1e-12;
constexpr int kMaxHalvings = 40;

// Six-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 6> kGaussNodes = {
    -0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
    0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr std::array<double, 6> kGaussWeights = {
    0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
    0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

CMatrix hermitian_part(const CMatrix &m) {
    return (m + m.adjoint()) / 2.0;
}

CMatrix probe_state(cdouble alpha, const HilbertSpec &spec) {
    auto psi = coherent_state(alpha, spec).coeffs;
    return psi * psi.adjoint();
}

// Hermitian inverse square root of a positive definite matrix.
CMatrix inverse_sqrt(const CMatrix &m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(m));
    const auto &ev = eig.eigenvalues();
    if (ev.minCoeff() <= 0) {
        throw NumericalError("input-side normalization matrix is singular");
    }
    Eigen::VectorXd s = ev.cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().adjoint();
}

// Applies (I_out (x) S) C (I_out (x) S) so that Tr_out C = I.
CMatrix normalize_trace_preserving(const CMatrix &c, size_t d_in, size_t d_out) {
    CMatrix l = CMatrix::Zero(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(d_in));
    auto di = static_cast<Eigen::Index>(d_in);
    for (size_t a = 0; a < d_out; a++) {
        auto o = static_cast<Eigen::Index>(a * d_in);
        l += c.block(o, o, di, di);
    }
    CMatrix s = inverse_sqrt(l);
    CMatrix out(c.rows(), c.cols());
    for (size_t a = 0; a < d_out; a++) {
        for (size_t b = 0; b < d_out; b++) {
            auto ra = static_cast<Eigen::Index>(a * d_in);
            auto rb = static_cast<Eigen::Index>(b * d_in);
            out.block(ra, rb, di, di) = s * c.block(ra, rb, di, di) * s;
        }
    }
    return hermitian_part(out);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// ChoiOperator

ChoiOperator::ChoiOperator(const HilbertSpec &spec, CMatrix matrix) : spec_(spec), matrix_(std::move(matrix)) {
    auto n = static_cast<Eigen::Index>(d_out() * d_in());
    if (matrix_.rows() != n || matrix_.cols() != n) {
        throw std::invalid_argument("extended Choi matrix must be " + std::to_string(n) + " x " + std::to_string(n));
    }
    double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("Choi matrix is not Hermitian");
    }
    matrix_ = hermitian_part(matrix_);
}

ChoiOperator ChoiOperator::maximally_mixed(const HilbertSpec &spec) {
    auto n = static_cast<Eigen::Index>((spec.dim() + 1) * spec.dim());
    return ChoiOperator(spec, CMatrix::Identity(n, n) / static_cast<double>(spec.dim() + 1));
}

CMatrix ChoiOperator::physical_block() const {
    auto n = static_cast<Eigen::Index>(d_in() * d_in());
    return matrix_.topLeftCorner(n, n);
}

CMatrix ChoiOperator::partial_trace_output() const {
    auto di = static_cast<Eigen::Index>(d_in());
    CMatrix l = CMatrix::Zero(di, di);
    for (size_t a = 0; a < d_out(); a++) {
        auto o = static_cast<Eigen::Index>(a * d_in());
        l += matrix_.block(o, o, di, di);
    }
    return l;
}

CMatrix ChoiOperator::output_state(const CMatrix &rho_in) const {
    auto di = static_cast<Eigen::Index>(d_in());
    if (rho_in.rows() != di || rho_in.cols() != di) {
        throw std::invalid_argument("input state dimension does not match the Choi operator");
    }
    auto dout = static_cast<Eigen::Index>(d_out());
    CMatrix out(dout, dout);
    for (Eigen::Index a = 0; a < dout; a++) {
        for (Eigen::Index b = 0; b < dout; b++) {
            // sum_mn C_(a,m),(b,n) rho_mn
            out(a, b) = matrix_.block(a * di, b * di, di, di).cwiseProduct(rho_in).sum();
        }
    }
    return hermitian_part(out);
}

ChoiOperator choi_from_tensor(const ProcessTensor &e) {
    CMatrix phys = e.choi_matrix();
    double scale = std::max(1.0, phys.cwiseAbs().maxCoeff());
    if ((phys - phys.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("process tensor '" + e.label() + "' is not Hermitian");
    }
    size_t d = e.dim();
    auto di = static_cast<Eigen::Index>(d);
    auto n = static_cast<Eigen::Index>((d + 1) * d);
    CMatrix c = CMatrix::Zero(n, n);
    c.topLeftCorner(di * di, di * di) = phys;
    CMatrix t = CMatrix::Zero(di, di);
    for (Eigen::Index j = 0; j < di; j++) {
        t += phys.block(j * di, j * di, di, di);
    }
    c.bottomRightCorner(di, di) = CMatrix::Identity(di, di) - t;
    return ChoiOperator(e.spec(), hermitian_part(c));
}

ProcessTensor tensor_from_choi(const ChoiOperator &c, std::string label) {
    return ProcessTensor::from_choi_matrix(c.spec(), c.physical_block(), std::move(label));
}

CMatrix phase_covariant_part(const CMatrix &x, size_t d_in) {
    auto di = static_cast<Eigen::Index>(d_in);
    if (x.rows() != x.cols() || x.rows() % di != 0) {
        throw std::invalid_argument("operator is not on an output (x) input space");
    }
    Eigen::Index sink = x.rows() / di - 1;
    CMatrix out = CMatrix::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); r++) {
        Eigen::Index j = r / di;
        Eigen::Index m = r % di;
        for (Eigen::Index s = 0; s < x.cols(); s++) {
            Eigen::Index k = s / di;
            Eigen::Index n = s % di;
            bool keep = false;
            if (j < sink && k < sink) {
                keep = (j - m == k - n);
            } else if (j == sink && k == sink) {
                keep = (m == n);
            }
            if (keep) {
                out(r, s) = x(r, s);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data

void ReconConfig::validate() const {
    if (n_max < 1) {
        throw std::invalid_argument("n_max must be at least 1");
    }
    if (!(mu > 0) || mu > 1) {
        throw std::invalid_argument("dilution mu must lie in (0, 1]");
    }
    if (max_iters < 0) {
        throw std::invalid_argument("max_iters must be non-negative");
    }
    if (!(ll_tol >= 0)) {
        throw std::invalid_argument("ll_tol must be non-negative");
    }
    if (grid.phase_bins < 1 || grid.quad_bins < 1 || !(grid.x_max > grid.x_min)) {
        throw std::invalid_argument("invalid bin grid");
    }
}

ProbeData ProbeData::from_dataset(const QuadratureDataset &ds, const BinGrid &grid) {
    return ProbeData{ds.probe, bin_dataset(ds, grid), ds.trials_total, ds.heralds};
}

double ProbeObservation::total() const {
    double t = window + fail;
    for (double b : bins) {
        t += b;
    }
    return t;
}

ProbeObservation ProbeObservation::from_probe_data(const ProbeData &p) {
    if (p.histogram.total() != p.heralds) {
        throw std::invalid_argument("histogram holds " + std::to_string(p.histogram.total()) + " counts but " +
                                    std::to_string(p.heralds) + " heralds were recorded");
    }
    if (p.trials_total < p.heralds) {
        throw std::invalid_argument("fewer trials than heralds");
    }
    ProbeObservation o;
    o.alpha = p.alpha;
    o.bins.assign(p.histogram.counts.begin(), p.histogram.counts.end());
    o.window = static_cast<double>(p.histogram.underflow + p.histogram.overflow);
    o.fail = static_cast<double>(p.trials_total - p.heralds);
    return o;
}

// ---------------------------------------------------------------------------
// Measurement model

MeasurementModel::MeasurementModel(const HilbertSpec &spec, const BinGrid &grid) : spec_(spec), grid_(grid) {
    size_t d = spec.dim();
    auto dd = static_cast<Eigen::Index>(d);
    stacked_ = Eigen::MatrixXd::Zero(grid.quad_bins, dd * dd);
    std::vector<double> psi(d);
    for (int q = 0; q < grid.quad_bins; q++) {
        double lo = grid.quad_edge(q);
        double hi = grid.quad_edge(q + 1);
        double half = (hi - lo) / 2;
        double mid = (hi + lo) / 2;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dd, dd);
        for (size_t i = 0; i < kGaussNodes.size(); i++) {
            quadrature_wavefunctions(mid + half * kGaussNodes[i], psi);
            Eigen::Map<Eigen::VectorXd> v(psi.data(), dd);
            b += (half * kGaussWeights[i]) * v * v.transpose();
        }
        stacked_.row(q) = Eigen::Map<Eigen::RowVectorXd>(b.data(), dd * dd);
    }
    Eigen::VectorXd sum = stacked_.colwise().sum().transpose();
    tail_ = Eigen::MatrixXd::Identity(dd, dd) - Eigen::Map<Eigen::MatrixXd>(sum.data(), dd, dd);

    window_ = CMatrix::Zero(dd, dd);
    for (int p = 0; p < grid.phase_bins; p++) {
        double theta = grid.phase_center(p);
        CVector r(dd);
        for (Eigen::Index n = 0; n < dd; n++) {
            r(n) = std::polar(1.0, -static_cast<double>(n) * theta);
        }
        window_ += r.asDiagonal() * tail_.cast<cdouble>() * r.conjugate().asDiagonal();
        rotations_.push_back(std::move(r));
    }
    window_ /= static_cast<double>(grid.phase_bins);
}

Eigen::MatrixXd MeasurementModel::bin_integral(int quad_bin) const {
    if (quad_bin < 0 || quad_bin >= grid_.quad_bins) {
        throw std::out_of_range("quadrature bin out of range");
    }
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    Eigen::RowVectorXd row = stacked_.row(quad_bin);
    return Eigen::Map<const Eigen::MatrixXd>(row.data(), dd, dd);
}

CMatrix MeasurementModel::outcome_operator(const Outcome &o) const {
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    CMatrix pi = CMatrix::Zero(dd + 1, dd + 1);
    switch (o.kind) {
        case Outcome::Kind::Bin: {
            if (o.phase_bin < 0 || o.phase_bin >= grid_.phase_bins) {
                throw std::out_of_range("phase bin out of range");
            }
            const CVector &r = phase_rotation(o.phase_bin);
            pi.topLeftCorner(dd, dd) = r.asDiagonal() * bin_integral(o.quad_bin).cast<cdouble>() *
                                       r.conjugate().asDiagonal() / static_cast<double>(grid_.phase_bins);
            break;
        }
        case Outcome::Kind::Window:
            pi.topLeftCorner(dd, dd) = window_;
            break;
        case Outcome::Kind::Fail:
            pi(dd, dd) = 1;
            break;
    }
    return pi;
}

std::vector<double> MeasurementModel::bin_probabilities(const CMatrix &output) const {
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    CMatrix phys = output.topLeftCorner(dd, dd);
    std::vector<double> probs(static_cast<size_t>(grid_.phase_bins) * static_cast<size_t>(grid_.quad_bins));
    double norm = 1.0 / grid_.phase_bins;
    for (int p = 0; p < grid_.phase_bins; p++) {
        const CVector &r = phase_rotation(p);
        // Tr[U B U^dag rho] = sum_ab B_ab Re (U^dag rho U)_ab for real symmetric B.
        Eigen::MatrixXd m = (r.conjugate().asDiagonal() * phys * r.asDiagonal()).real();
        Eigen::Map<const Eigen::VectorXd> v(m.data(), dd * dd);
        Eigen::VectorXd pq = stacked_ * v * norm;
        std::copy(pq.data(), pq.data() + pq.size(), probs.begin() + static_cast<std::ptrdiff_t>(p) * grid_.quad_bins);
    }
    return probs;
}

double MeasurementModel::window_probability(const CMatrix &output) const {
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    return (output.topLeftCorner(dd, dd) * window_).trace().real();
}

double predicted_probability(const ChoiOperator &c, const MeasurementModel &model, cdouble alpha, const Outcome &o) {
    CMatrix out = c.output_state(probe_state(alpha, c.spec()));
    return (out * model.outcome_operator(o)).trace().real();
}

ProbeObservation expected_observation(const ChoiOperator &c, const MeasurementModel &model, cdouble alpha, double trials) {
    CMatrix out = c.output_state(probe_state(alpha, c.spec()));
    ProbeObservation o;
    o.alpha = alpha;
    o.bins = model.bin_probabilities(out);
    for (double &b : o.bins) {
        b *= trials;
    }
    o.window = model.window_probability(out) * trials;
    o.fail = out(out.rows() - 1, out.cols() - 1).real() * trials;
    return o;
}

// ---------------------------------------------------------------------------
// Likelihood

LikelihoodModel::LikelihoodModel(const HilbertSpec &spec, const BinGrid &grid, std::vector<ProbeObservation> observations)
    : spec_(spec), measurement_(spec, grid), observations_(std::move(observations)) {
    if (observations_.empty()) {
        throw std::invalid_argument("no probe observations");
    }
    size_t nbins = static_cast<size_t>(grid.phase_bins) * static_cast<size_t>(grid.quad_bins);
    auto dd = static_cast<Eigen::Index>(spec.dim());
    weights_ = Eigen::VectorXd::Zero(dd);
    double total = 0;
    for (const auto &o : observations_) {
        if (o.bins.size() != nbins) {
            throw std::invalid_argument("observation has " + std::to_string(o.bins.size()) + " bins, grid has " +
                                        std::to_string(nbins));
        }
        double n = o.total();
        if (!(n > 0)) {
            throw std::invalid_argument("probe with no recorded trials");
        }
        probes_.push_back(probe_state(o.alpha, spec));
        weights_ += n * probes_.back().diagonal().real();
        total += n;
    }
    weights_ /= total;
    for (Eigen::Index m = 0; m < dd; m++) {
        if (!(weights_(m) > 0)) {
            throw std::invalid_argument("probes carry no weight on photon number " + std::to_string(m));
        }
    }
}

LikelihoodModel::Evaluation LikelihoodModel::evaluate(const ChoiOperator &c) const {
    const auto &grid = measurement_.grid();
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    auto nq = static_cast<Eigen::Index>(grid.quad_bins);
    double phase_norm = 1.0 / grid.phase_bins;
    const Eigen::MatrixXd &stacked = measurement_.stacked_bins();

    struct Partial {
        double log_likelihood = 0;
        int64_t floored = 0;
        CMatrix k;
    };
    auto one_probe = [&](size_t i) {
        Partial part;
        auto use = [&part](double f, double p) {
            if (p < kProbabilityFloor) {
                p = kProbabilityFloor;
                part.floored++;
            }
            part.log_likelihood += f * std::log(p);
            return f / p;
        };
        const auto &obs = observations_[i];
        CMatrix out = c.output_state(probes_[i]);
        CMatrix phys = out.topLeftCorner(dd, dd);
        part.k = CMatrix::Zero(dd + 1, dd + 1);

        Eigen::VectorXd w(nq);
        for (int p = 0; p < grid.phase_bins; p++) {
            const double *f = obs.bins.data() + static_cast<std::ptrdiff_t>(p) * nq;
            if (std::none_of(f, f + nq, [](double v) { return v > 0; })) {
                continue;
            }
            const CVector &r = measurement_.phase_rotation(p);
            Eigen::MatrixXd m = (r.conjugate().asDiagonal() * phys * r.asDiagonal()).real();
            Eigen::Map<const Eigen::VectorXd> v(m.data(), dd * dd);
            Eigen::VectorXd pq = stacked * v * phase_norm;
            for (Eigen::Index q = 0; q < nq; q++) {
                w(q) = f[q] > 0 ? use(f[q], pq(q)) : 0.0;
            }
            Eigen::VectorXd bw = stacked.transpose() * w * phase_norm;
            Eigen::Map<const Eigen::MatrixXd> bmat(bw.data(), dd, dd);
            part.k.topLeftCorner(dd, dd) += r.asDiagonal() * bmat.cast<cdouble>() * r.conjugate().asDiagonal();
        }
        if (obs.window > 0) {
            double pw = (phys * measurement_.window_operator()).trace().real();
            part.k.topLeftCorner(dd, dd) += use(obs.window, pw) * measurement_.window_operator();
        }
        if (obs.fail > 0) {
            part.k(dd, dd) += use(obs.fail, out(dd, dd).real());
        }
        return part;
    };

    // Probes are independent; partial sums are merged in probe order so the result does
    // not depend on the thread count.
    std::vector<Partial> parts(observations_.size());
    size_t workers = std::min<size_t>(std::max(1u, std::thread::hardware_concurrency()), parts.size());
    if (workers <= 1) {
        for (size_t i = 0; i < parts.size(); i++) {
            parts[i] = one_probe(i);
        }
    } else {
        std::vector<std::future<void>> jobs;
        for (size_t t = 0; t < workers; t++) {
            jobs.push_back(std::async(std::launch::async, [&, t] {
                for (size_t i = t; i < parts.size(); i += workers) {
                    parts[i] = one_probe(i);
                }
            }));
        }
        for (auto &j : jobs) {
            j.get();
        }
    }

    Evaluation ev;
    ev.r = CMatrix::Zero((dd + 1) * dd, (dd + 1) * dd);
    double total = 0;
    for (size_t i = 0; i < parts.size(); i++) {
        ev.log_likelihood += parts[i].log_likelihood;
        ev.floored += parts[i].floored;
        // R += K (x) rho^T in the out * d + in ordering.
        CMatrix rt = probes_[i].transpose();
        const CMatrix &k = parts[i].k;
        for (Eigen::Index a = 0; a <= dd; a++) {
            for (Eigen::Index b = 0; b <= dd; b++) {
                if (k(a, b) != cdouble(0)) {
                    ev.r.block(a * dd, b * dd, dd, dd) += k(a, b) * rt;
                }
            }
        }
        total += observations_[i].total();
    }
    ev.r = phase_covariant_part(hermitian_part(ev.r), spec_.dim()) / total;
    return ev;
}

ChoiOperator LikelihoodModel::step(const ChoiOperator &c, const CMatrix &r, double mu) const {
    auto dd = static_cast<Eigen::Index>(spec_.dim());
    Eigen::Index n = (dd + 1) * dd;
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; i++) {
        s(i) = 1.0 / std::sqrt(weights_(i % dd));
    }
    CMatrix rhat = s.asDiagonal() * r * s.asDiagonal();
    CMatrix a = (CMatrix::Identity(n, n) + mu * rhat) / (1 + mu);
    CMatrix x = s.asDiagonal() * a * s.cwiseInverse().asDiagonal();
    CMatrix next = x * c.matrix() * x.adjoint();
    return ChoiOperator(spec_, normalize_trace_preserving(hermitian_part(next), spec_.dim(), spec_.dim() + 1));
}

// ---------------------------------------------------------------------------
// Reconstruction

ReconResult mlr_reconstruct(const std::vector<ProbeData> &data, const ReconConfig &cfg) {
    std::vector<ProbeObservation> obs;
    obs.reserve(data.size());
    for (const auto &p : data) {
        if (!(p.histogram.grid == cfg.grid)) {
            throw std::invalid_argument("probe histogram uses a different bin grid");
        }
        obs.push_back(ProbeObservation::from_probe_data(p));
    }
    return mlr_reconstruct(obs, cfg);
}

ReconResult mlr_reconstruct(const std::vector<ProbeObservation> &observations, const ReconConfig &cfg) {
    cfg.validate();
    std::vector<cdouble> distinct;
    for (const auto &o : observations) {
        bool seen = std::any_of(distinct.begin(), distinct.end(), [&](cdouble a) { return std::abs(a - o.alpha) < 1e-12; });
        if (!seen) {
            distinct.push_back(o.alpha);
        }
    }
    if (distinct.size() < 2) {
        throw std::invalid_argument("reconstruction needs at least two distinct probe amplitudes, got " +
                                    std::to_string(distinct.size()));
    }

    HilbertSpec spec(cfg.n_max);
    LikelihoodModel model(spec, cfg.grid, observations);
    ChoiOperator c = ChoiOperator::maximally_mixed(spec);
    ReconResult result{tensor_from_choi(c), c, {}, {}, false};
    if (cfg.max_iters == 0) {
        return result;
    }

    auto ev = model.evaluate(c);
    double mu = cfg.mu;
    bool floored_warned = false;
    for (int it = 1; it <= cfg.max_iters; it++) {
        bool accepted = false;
        bool stalled = false;
        LikelihoodModel::Evaluation next_ev;
        std::optional<ChoiOperator> next;
        for (int h = 0; h <= kMaxHalvings; h++) {
            ChoiOperator cand = model.step(c, ev.r, mu);
            if (min_eigenvalue(cand.matrix()) < kPsdDrift) {
                Eigen::SelfAdjointEigenSolver<CMatrix> eig(cand.matrix());
                Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
                CMatrix fixed = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
                cand = ChoiOperator(spec, normalize_trace_preserving(fixed, spec.dim(), spec.dim() + 1));
                result.warnings.push_back("iteration " + std::to_string(it) +
                                          ": Choi operator drifted from positivity; negative eigenvalues clipped");
            }
            next_ev = model.evaluate(cand);
            double drop = ev.log_likelihood - next_ev.log_likelihood;
            if (drop > 0 && drop <= kMonotoneSlack * std::abs(ev.log_likelihood)) {
                // Rounding noise at the optimum: keep the current estimate.
                stalled = true;
                break;
            }
            if (drop > 0) {
                mu /= 2;
                result.warnings.push_back("iteration " + std::to_string(it) +
                                          ": log-likelihood decreased; dilution reduced to mu = " + format_double(mu));
                continue;
            }
            next = std::move(cand);
            accepted = true;
            break;
        }
        if (stalled) {
            result.converged = true;
            break;
        }
        if (!accepted) {
            result.warnings.push_back("iteration " + std::to_string(it) + ": no increasing step found; stopping");
            break;
        }
        if (next_ev.floored > 0 && !floored_warned) {
            result.warnings.push_back("observed outcomes with predicted probability below 1e-300 were floored");
            floored_warned = true;
        }
        double scale = std::max(std::abs(ev.log_likelihood), std::numeric_limits<double>::min());
        double rel = std::abs(next_ev.log_likelihood - ev.log_likelihood) / scale;
        result.log.push_back({it, next_ev.log_likelihood, rel, mu});
        c = std::move(*next);
        ev = std::move(next_ev);
        if (rel < cfg.ll_tol) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged) {
        result.warnings.push_back("stopped after " + std::to_string(result.log.size()) +
                                  " iterations before the log-likelihood change fell below " + format_double(cfg.ll_tol));
    }
    result.tensor = tensor_from_choi(c);
    result.choi = c;
    return result;
}

// ---------------------------------------------------------------------------
// Figures of merit

double choi_fidelity(const ProcessTensor &a, const ProcessTensor &b) {
    if (!(a.spec() == b.spec())) {
        throw std::invalid_argument("process tensors differ in dimension");
    }
    CMatrix ca = hermitian_part(a.choi_matrix());
    CMatrix cb = hermitian_part(b.choi_matrix());
    double ta = ca.trace().real();
    double tb = cb.trace().real();
    if (!(ta > 0) || !(tb > 0)) {
        throw std::invalid_argument("Choi fidelity is undefined for a process with zero trace");
    }
    return uhlmann_fidelity(ca / ta, cb / tb, 1e-8);
}

std::string_view scan_param_name(ScanParam p) {
    switch (p) {
        case ScanParam::EtaH:
            return "eta_h";
        case ScanParam::EtaApd:
            return "eta_apd";
        case ScanParam::Reflectivity:
            return "R";
    }
    return "?";
}

std::vector<double> ScanAxis::values() const {
    if (points < 1) {
        throw std::invalid_argument("scan axis needs at least one point");
    }
    std::vector<double> v(static_cast<size_t>(points));
    for (int i = 0; i < points; i++) {
        v[static_cast<size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    }
    return v;
}

double FidelitySurface::argmax_x_value() const {
    return x.values()[static_cast<size_t>(argmax_x)];
}

double FidelitySurface::argmax_y_value() const {
    return y.values()[static_cast<size_t>(argmax_y)];
}

FidelitySurface fidelity_scan(
    const ProcessTensor &recon,
    const ScanAxis &x,
    const ScanAxis &y,
    const FsfParams &base,
    double eta_apd,
    HeraldKind kind) {
    if (x.param == y.param) {
        throw std::invalid_argument("scan axes must vary different parameters");
    }
    FidelitySurface s{x, y, {}, 0, 0};
    auto xs = x.values();
    auto ys = y.values();
    s.values.reserve(xs.size() * ys.size());
    double best = -1;
    for (size_t iy = 0; iy < ys.size(); iy++) {
        for (size_t ix = 0; ix < xs.size(); ix++) {
            double r = base.reflectivity();
            double eta_h = base.eta_h();
            double apd = eta_apd;
            for (auto [param, value] : {std::pair{x.param, xs[ix]}, std::pair{y.param, ys[iy]}}) {
                switch (param) {
                    case ScanParam::EtaH:
                        eta_h = value;
                        break;
                    case ScanParam::EtaApd:
                        apd = value;
                        break;
                    case ScanParam::Reflectivity:
                        r = value;
                        break;
                }
            }
            FsfParams params(r, eta_h, base.multimode(), base.eta_det(), base.spec());
            auto model = compose_fsf_tensor(params, herald_povm(apd, base.spec().n_max() + 1, kind));
            double f = 0;
            if (model.choi_matrix().trace().real() > 1e-15) {
                f = choi_fidelity(recon, model);
            }
            s.values.push_back(f);
            if (f > best) {
                best = f;
                s.argmax_x = static_cast<int>(ix);
                s.argmax_y = static_cast<int>(iy);
            }
        }
    }
    return s;
}

std::vector<RandomStateStudyRow> random_state_fidelity_study(
    const ProcessTensor &a, const ProcessTensor &b, const std::vector<int> &n_max_list, int64_t count,
    std::mt19937_64 &rng) {
    if (!(a.spec() == b.spec())) {
        throw std::invalid_argument("process tensors differ in dimension");
    }
    if (count < 1) {
        throw std::invalid_argument("study needs at least one random state per row");
    }
    auto d = static_cast<Eigen::Index>(a.dim());
    std::vector<RandomStateStudyRow> rows;
    for (int n_max : n_max_list) {
        if (n_max < 1 || n_max > a.spec().n_max()) {
            throw std::invalid_argument("random-state support n_max = " + std::to_string(n_max) + " is outside 1.." +
                                        std::to_string(a.spec().n_max()));
        }
        HilbertSpec sub(n_max);
        RandomStateStudyRow row;
        row.n_max = n_max;
        double sum = 0;
        double sum_sq = 0;
        for (int64_t i = 0; i < count; i++) {
            auto small = random_density_matrix(sub, rng);
            CMatrix big = CMatrix::Zero(d, d);
            auto ds = static_cast<Eigen::Index>(sub.dim());
            big.topLeftCorner(ds, ds) = small.elems();
            DensityMatrix rho(big);
            double f = 0;
            try {
                DensityMatrix out_a = apply_process(a, rho);
                DensityMatrix out_b = apply_process(b, rho);
                f = state_fidelity(out_a.normalized(), out_b.normalized());
            } catch (const NumericalError &) {
                // One of the outputs vanished, so the fidelity is undefined.
                row.skipped++;
                continue;
            }
            sum += f;
            sum_sq += f * f;
            row.evaluated++;
        }
        if (row.evaluated > 0) {
            double n = static_cast<double>(row.evaluated);
            row.mean = sum / n;
            row.stddev = row.evaluated > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * row.mean * row.mean) / (n - 1))) : 0;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fsfqpt
