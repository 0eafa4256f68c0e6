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

#ifndef FSFQPT_FSF_MODEL_H
#define FSFQPT_FSF_MODEL_H

#include <optional>
#include <string_view>
#include <vector>

#include "fsfqpt/fock.h"
#include "fsfqpt/process_tensor.h"

namespace fsfqpt {

enum class HeraldKind {
    /// Avalanche photodiode: theta_g = 1 - (1 - eta_apd)^g.
    Click,
    /// Ideal single-photon projector: theta_1 = 1, all others 0.
    NumberResolvingOne,
    /// Unit-efficiency bucket detector: theta_g = 1 for every g >= 1.
    IdealClick,
};

std::string_view herald_kind_name(HeraldKind kind);
/// Accepts "click", "number-resolving-1", "ideal-click".
HeraldKind parse_herald_kind(std::string_view name);

/// Phase-insensitive herald POVM element sum_{g>=1} theta_g |g><g|. No dark counts, so
/// there is no theta_0 term.
struct HeraldPovm {
    /// thetas[g - 1] is the click probability given g photons.
    std::vector<double> thetas;
    double eta_apd = 1;
    HeraldKind kind = HeraldKind::Click;

    /// theta_g for g >= 0 (0 for g = 0 and for g beyond the stored range).
    double theta(int g) const;
    int g_max() const {
        return static_cast<int>(thetas.size());
    }
};

HeraldPovm herald_povm(double eta_apd, int g_max, HeraldKind kind);

/// Parameters of the realistic filter. The multimode parameter M = eta_h / eta_h_prime is
/// stored directly; M = 0 is allowed as the limit where every herald is a false one.
class FsfParams {
   public:
    FsfParams(double reflectivity, double eta_h, double multimode, double eta_det, HilbertSpec spec);
    static FsfParams from_heralding_efficiencies(
        double reflectivity, double eta_h, double eta_h_prime, double eta_det, HilbertSpec spec);

    /// R = 0.5, eta_H = 0.45, M = 0.73, eta_det = 0.45, n_max = 6.
    static FsfParams reference_defaults();

    double reflectivity() const {
        return reflectivity_;
    }
    double eta_h() const {
        return eta_h_;
    }
    double multimode() const {
        return multimode_;
    }
    /// eta_h / M (infinite when M = 0).
    double eta_h_prime() const;
    double eta_det() const {
        return eta_det_;
    }
    const HilbertSpec &spec() const {
        return spec_;
    }

   private:
    double reflectivity_;
    double eta_h_;
    double multimode_;
    double eta_det_;
    HilbertSpec spec_;
};

/// <m+1-g, g| U |m, 1>: g photons reach the herald mode when m photons enter the filter
/// with a single-photon ancilla. Zero outside 0 <= g <= m + 1.
cdouble amp_single_ancilla(int m, int g, double reflectivity);

/// <m-g, g| U |m, 0>: same with a vacuum ancilla. Zero outside 0 <= g <= m.
cdouble amp_vacuum_ancilla(int m, int g, double reflectivity);

/// Single-photon-ancilla tensor: sum_g theta_g A'(m,g) conj(A'(n,g)) at j = m+1-g, k = n+1-g.
ProcessTensor build_tensor_e1(double reflectivity, const HeraldPovm &povm, const HilbertSpec &spec);
/// Vacuum-ancilla tensor: sum_g theta_g A''(m,g) conj(A''(n,g)) at j = m-g, k = n-g.
ProcessTensor build_tensor_e0(double reflectivity, const HeraldPovm &povm, const HilbertSpec &spec);
/// Pure loss with transmissivity eta.
ProcessTensor build_tensor_attenuation(double eta, const HilbertSpec &spec);

/// M (eta_H E_1 + (1 - eta_H) E_0) + (1 - M) eta_det R E_att(R).
/// Throws NumericalError if the result violates complete positivity or the trace bound.
ProcessTensor compose_fsf_tensor(const FsfParams &params, const HeraldPovm &povm);

struct IdealFilterResult {
    /// Un-normalized output amplitudes; norm_deficit is carried over from the input.
    PureState state;
    /// Renormalization factor 1 / |psi'|; empty when the output vanishes.
    std::optional<double> renormalization;

    bool zero_probability() const {
        return !renormalization.has_value();
    }
};

/// C_n -> R^{(n-1)/2} [R - n(1-R)] C_n.
IdealFilterResult ideal_filter_apply(const PureState &psi, double reflectivity);

/// [rho_out]_jk = sum_mn E_jk^mn rho_mn (un-normalized; trace is the success probability).
DensityMatrix apply_process(const ProcessTensor &e, const DensityMatrix &rho);
double success_probability(const ProcessTensor &e, const DensityMatrix &rho);

struct ConditionalStats {
    /// unnormalized[n][k] = E_kk^nn.
    std::vector<std::vector<double>> unnormalized;
    /// normalized[n] = P(.|n); empty when s_n == 0.
    std::vector<std::optional<std::vector<double>>> normalized;
    std::vector<double> success;

    /// P(k|n), or nullopt for an undefined row.
    std::optional<double> p(size_t k, size_t n) const;
};

ConditionalStats conditional_stats(const ProcessTensor &e);

/// Survival P(n|n) = p11^n expected from a linear-loss element.
double linear_loss_prediction(double p11, int n);

}  // namespace fsfqpt

#endif
