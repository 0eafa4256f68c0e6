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

#ifndef FSFQPT_TOMOGRAPHY_H
#define FSFQPT_TOMOGRAPHY_H

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fsfqpt/fock.h"
#include "fsfqpt/fsf_model.h"
#include "fsfqpt/homodyne.h"
#include "fsfqpt/process_tensor.h"

namespace fsfqpt {

/// Choi operator of a trace-preserving map from the d-dimensional input space to the
/// output space extended by one "fail" level (index d). The heralded process is the
/// physical block; the fail level absorbs the no-herald probability.
///
/// Row/column index is out * d + in, so <j,m|C|k,n> = E_jk^mn on the physical block.
class ChoiOperator {
   public:
    ChoiOperator(const HilbertSpec &spec, CMatrix matrix);

    /// Identity over d+1 outputs for every input: Tr_out C = I.
    static ChoiOperator maximally_mixed(const HilbertSpec &spec);

    const HilbertSpec &spec() const {
        return spec_;
    }
    size_t d_in() const {
        return spec_.dim();
    }
    size_t d_out() const {
        return spec_.dim() + 1;
    }
    size_t sink() const {
        return spec_.dim();
    }
    const CMatrix &matrix() const {
        return matrix_;
    }

    CMatrix physical_block() const;
    /// Tr over the (extended) output; the identity for a trace-preserving extended map.
    CMatrix partial_trace_output() const;
    /// Tr_in[C (I (x) rho^T)]: the (d+1)-dimensional output including the fail level.
    CMatrix output_state(const CMatrix &rho_in) const;

   private:
    HilbertSpec spec_;
    CMatrix matrix_;
};

/// Physical block from the tensor; fail block I - T with T_mn = sum_j E_jj^mn.
/// Throws std::invalid_argument for non-Hermitian input.
ChoiOperator choi_from_tensor(const ProcessTensor &e);
ProcessTensor tensor_from_choi(const ChoiOperator &c, std::string label = "reconstructed");

/// Projection onto phase-covariant operators: keeps <j,m|X|k,n> only when j - m = k - n on
/// the physical block, and only diagonal input entries on the fail block.
CMatrix phase_covariant_part(const CMatrix &x, size_t d_in);

struct ReconConfig {
    int n_max = 6;
    double mu = 0.5;
    int max_iters = 150;
    double ll_tol = 1e-12;
    BinGrid grid;

    void validate() const;
};

/// Binned heralded data of one coherent probe.
struct ProbeData {
    cdouble alpha;
    BinnedHistogram histogram;
    int64_t trials_total = 0;
    int64_t heralds = 0;

    static ProbeData from_dataset(const QuadratureDataset &ds, const BinGrid &grid = {});
};

/// Outcome frequencies of one probe in the form the likelihood consumes. Counts are real
/// so that noiseless expected frequencies can be fed in directly.
struct ProbeObservation {
    cdouble alpha;
    /// bins[phase_bin * quad_bins + quad_bin].
    std::vector<double> bins;
    /// Heralds whose quadrature fell outside the window.
    double window = 0;
    /// Trials without a herald.
    double fail = 0;

    double total() const;
    static ProbeObservation from_probe_data(const ProbeData &p);
};

/// Outcome of a single heralded trial.
struct Outcome {
    enum class Kind { Bin, Window, Fail };
    Kind kind = Kind::Bin;
    int phase_bin = 0;
    int quad_bin = 0;

    static Outcome bin(int phase_bin, int quad_bin) {
        return {Kind::Bin, phase_bin, quad_bin};
    }
    static Outcome window() {
        return {Kind::Window, 0, 0};
    }
    static Outcome fail() {
        return {Kind::Fail, 0, 0};
    }
};

/// Measurement operators of the binned heralded homodyne acquisition on the extended
/// output space. With the LO phase uniform over the phase bins,
///   Pi(phase p, bin q) = U_p B_q U_p^dag / P,   B_q = int_{bin q} |x><x| dx,
/// with U_p = diag(e^{-i n theta_p}) at the bin-centre phase. The window outcome carries
/// the quadrature tails beyond the acquisition window and the fail outcome is the
/// projector on the fail level, so all outcomes sum to the identity.
class MeasurementModel {
   public:
    MeasurementModel(const HilbertSpec &spec, const BinGrid &grid);

    const HilbertSpec &spec() const {
        return spec_;
    }
    const BinGrid &grid() const {
        return grid_;
    }
    /// Real symmetric bin integral B_q, exact to Gauss-Legendre precision.
    Eigen::MatrixXd bin_integral(int quad_bin) const;
    /// I - sum_q B_q.
    const Eigen::MatrixXd &tail_integral() const {
        return tail_;
    }
    /// Outcome operator on the extended (d+1)-dimensional output space.
    CMatrix outcome_operator(const Outcome &o) const;

    /// Probabilities of all bin outcomes, in observation order, for an extended output state.
    std::vector<double> bin_probabilities(const CMatrix &output) const;
    double window_probability(const CMatrix &output) const;

    /// Rows are vec(B_q) in column-major order; used to evaluate all bins at once.
    const Eigen::MatrixXd &stacked_bins() const {
        return stacked_;
    }
    /// Phase factor e^{-i n theta_p}.
    const CVector &phase_rotation(int phase_bin) const {
        return rotations_[static_cast<size_t>(phase_bin)];
    }
    /// Average over phases of U_p T U_p^dag.
    const CMatrix &window_operator() const {
        return window_;
    }

   private:
    HilbertSpec spec_;
    BinGrid grid_;
    Eigen::MatrixXd stacked_;
    Eigen::MatrixXd tail_;
    std::vector<CVector> rotations_;
    CMatrix window_;
};

/// Tr[C (rho^T (x) Pi)] for the truncated, renormalized coherent probe |alpha>.
double predicted_probability(const ChoiOperator &c, const MeasurementModel &model, cdouble alpha, const Outcome &o);

/// Noiseless frequencies trials * p for every outcome of probe alpha under C.
ProbeObservation expected_observation(const ChoiOperator &c, const MeasurementModel &model, cdouble alpha, double trials);

/// Log-likelihood and gradient operator of binned heralded data.
class LikelihoodModel {
   public:
    LikelihoodModel(const HilbertSpec &spec, const BinGrid &grid, std::vector<ProbeObservation> observations);

    struct Evaluation {
        double log_likelihood = 0;
        /// R = (1/N) sum over outcomes of (f / p) rho^T (x) Pi with N the total trial count,
        /// projected on the phase-covariant part.
        CMatrix r;
        /// Observed outcomes whose predicted probability was floored.
        int64_t floored = 0;
    };

    Evaluation evaluate(const ChoiOperator &c) const;
    double log_likelihood(const ChoiOperator &c) const {
        return evaluate(c).log_likelihood;
    }

    /// One diluted fixed-point update. With G the phase-averaged sum of all measurement
    /// operators and R_hat = G^{-1/2} R G^{-1/2},
    ///   C' = G^{-1/2} A G^{1/2} C G^{1/2} A G^{-1/2},   A = (I + mu R_hat) / (1 + mu),
    /// followed by the normalization Tr_out C' = I.
    ChoiOperator step(const ChoiOperator &c, const CMatrix &r, double mu) const;

    /// Diagonal of G on the input space.
    const Eigen::VectorXd &input_weights() const {
        return weights_;
    }
    const MeasurementModel &measurement() const {
        return measurement_;
    }

   private:
    HilbertSpec spec_;
    MeasurementModel measurement_;
    std::vector<ProbeObservation> observations_;
    std::vector<CMatrix> probes_;
    Eigen::VectorXd weights_;
};

struct IterationRecord {
    int iteration = 0;
    double log_likelihood = 0;
    double relative_change = 0;
    double mu = 0;
};

struct ReconResult {
    ProcessTensor tensor;
    ChoiOperator choi;
    std::vector<IterationRecord> log;
    std::vector<std::string> warnings;
    bool converged = false;
};

/// Diluted iterative maximum-likelihood reconstruction starting from the maximally mixed
/// extended Choi operator. Requires at least two distinct probe amplitudes.
ReconResult mlr_reconstruct(const std::vector<ProbeData> &data, const ReconConfig &cfg);
ReconResult mlr_reconstruct(const std::vector<ProbeObservation> &observations, const ReconConfig &cfg);

/// Uhlmann fidelity of the trace-normalized physical Choi matrices.
double choi_fidelity(const ProcessTensor &a, const ProcessTensor &b);

enum class ScanParam { EtaH, EtaApd, Reflectivity };
std::string_view scan_param_name(ScanParam p);

struct ScanAxis {
    ScanParam param;
    double lo = 0;
    double hi = 1;
    int points = 21;

    std::vector<double> values() const;
};

struct FidelitySurface {
    ScanAxis x;
    ScanAxis y;
    /// values[iy * x.points + ix].
    std::vector<double> values;
    int argmax_x = 0;
    int argmax_y = 0;

    double at(int ix, int iy) const {
        return values[static_cast<size_t>(iy) * static_cast<size_t>(x.points) + static_cast<size_t>(ix)];
    }
    double max_value() const {
        return at(argmax_x, argmax_y);
    }
    double argmax_x_value() const;
    double argmax_y_value() const;
};

/// Choi fidelity between `recon` and the composed model over a 2-D parameter grid; the
/// parameters not scanned come from `base` and `eta_apd`. Grid points whose model
/// tensor vanishes score 0.
FidelitySurface fidelity_scan(
    const ProcessTensor &recon,
    const ScanAxis &x,
    const ScanAxis &y,
    const FsfParams &base,
    double eta_apd,
    HeraldKind kind = HeraldKind::Click);

struct RandomStateStudyRow {
    int n_max = 0;
    double mean = 0;
    double stddev = 0;
    int64_t evaluated = 0;
    int64_t skipped = 0;
};

/// Output-state fidelity of two processes over Hilbert-Schmidt random inputs supported on
/// photon numbers <= n_max, for each n_max listed.
std::vector<RandomStateStudyRow> random_state_fidelity_study(
    const ProcessTensor &a, const ProcessTensor &b, const std::vector<int> &n_max_list, int64_t count,
    std::mt19937_64 &rng);

}  // namespace fsfqpt

#endif
