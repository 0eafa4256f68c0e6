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

#include "fsfqpt/fsf_model.h"

#include <cmath>
#include <limits>
#include <string>

using namespace fsfqpt;

namespace {

double binomial(int n, int k) {
    if (k < 0 || k > n) {
        return 0;
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double factorial(int n) {
    return std::tgamma(n + 1.0);
}

/// (i sqrt(1-R))^p for p >= 0.
cdouble cross_phase(double reflectivity, int p) {
    static constexpr cdouble kI{0, 1};
    cdouble base = kI * std::sqrt(1 - reflectivity);
    cdouble r = 1;
    for (int i = 0; i < p; i++) {
        r *= base;
    }
    return r;
}

void check_unit_interval(double v, const char *name) {
    if (!(v >= 0 && v <= 1)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
    }
}

}  // namespace

std::string_view fsfqpt::herald_kind_name(HeraldKind kind) {
    switch (kind) {
        case HeraldKind::Click:
            return "click";
        case HeraldKind::NumberResolvingOne:
            return "number-resolving-1";
        case HeraldKind::IdealClick:
            return "ideal-click";
    }
    return "?";
}

HeraldKind fsfqpt::parse_herald_kind(std::string_view name) {
    if (name == "click") {
        return HeraldKind::Click;
    }
    if (name == "number-resolving-1") {
        return HeraldKind::NumberResolvingOne;
    }
    if (name == "ideal-click") {
        return HeraldKind::IdealClick;
    }
    throw std::invalid_argument("unknown herald kind '" + std::string(name) + "'");
}

double HeraldPovm::theta(int g) const {
    if (g < 1 || g > g_max()) {
        return 0;
    }
    return thetas[static_cast<size_t>(g - 1)];
}

HeraldPovm fsfqpt::herald_povm(double eta_apd, int g_max, HeraldKind kind) {
    check_unit_interval(eta_apd, "eta_apd");
    if (g_max < 1) {
        throw std::invalid_argument("herald POVM needs g_max >= 1");
    }
    HeraldPovm povm;
    povm.eta_apd = eta_apd;
    povm.kind = kind;
    povm.thetas.resize(static_cast<size_t>(g_max));
    for (int g = 1; g <= g_max; g++) {
        double t = 0;
        switch (kind) {
            case HeraldKind::Click:
                t = 1 - std::pow(1 - eta_apd, g);
                break;
            case HeraldKind::NumberResolvingOne:
                t = g == 1 ? 1 : 0;
                break;
            case HeraldKind::IdealClick:
                t = 1;
                break;
        }
        povm.thetas[static_cast<size_t>(g - 1)] = t;
    }
    return povm;
}

FsfParams::FsfParams(double reflectivity, double eta_h, double multimode, double eta_det, HilbertSpec spec)
    : reflectivity_(reflectivity), eta_h_(eta_h), multimode_(multimode), eta_det_(eta_det), spec_(spec) {
    check_unit_interval(reflectivity, "R");
    check_unit_interval(eta_h, "eta_h");
    check_unit_interval(multimode, "M");
    check_unit_interval(eta_det, "eta_det");
}

FsfParams FsfParams::from_heralding_efficiencies(
    double reflectivity, double eta_h, double eta_h_prime, double eta_det, HilbertSpec spec) {
    if (!(eta_h_prime > 0) || eta_h > eta_h_prime) {
        throw std::invalid_argument("multimode heralding efficiency must satisfy 0 < eta_h <= eta_h_prime");
    }
    return FsfParams(reflectivity, eta_h, eta_h / eta_h_prime, eta_det, spec);
}

FsfParams FsfParams::reference_defaults() {
    return FsfParams(0.5, 0.45, 0.73, 0.45, HilbertSpec(6));
}

double FsfParams::eta_h_prime() const {
    if (multimode_ == 0) {
        return std::numeric_limits<double>::infinity();
    }
    return eta_h_ / multimode_;
}

cdouble fsfqpt::amp_single_ancilla(int m, int g, double reflectivity) {
    if (m < 0 || g < 0 || g > m + 1) {
        return 0;
    }
    double magnitude = std::sqrt(factorial(m - g + 1) * factorial(g) / factorial(m));
    double bracket = binomial(m, g - 1) * reflectivity - (1 - reflectivity) * binomial(m, g);
    if (g == 0) {
        // (i sqrt(1-R))^{-1} R^{m/2}: only the -(1-R) C(m,0) term survives, giving
        // <m+1, 0|U|m, 1> = i sqrt(m+1) sqrt(1-R) R^{m/2}.
        return cdouble(0, 1) * std::sqrt((m + 1.0) * (1 - reflectivity)) * std::pow(reflectivity, m / 2.0);
    }
    double scaled_bracket;
    if (g == m + 1) {
        // C(m, m+1) = 0 leaves R^{-1/2} * R = sqrt(R); finite at R = 0.
        scaled_bracket = std::sqrt(reflectivity);
    } else {
        scaled_bracket = std::pow(reflectivity, (m - g) / 2.0) * bracket;
    }
    return magnitude * cross_phase(reflectivity, g - 1) * scaled_bracket;
}

cdouble fsfqpt::amp_vacuum_ancilla(int m, int g, double reflectivity) {
    if (m < 0 || g < 0 || g > m) {
        return 0;
    }
    return std::sqrt(binomial(m, g)) * std::pow(reflectivity, (m - g) / 2.0) * cross_phase(reflectivity, g);
}

ProcessTensor fsfqpt::build_tensor_e1(double reflectivity, const HeraldPovm &povm, const HilbertSpec &spec) {
    check_unit_interval(reflectivity, "R");
    ProcessTensor t(spec, "model-e1");
    int d = static_cast<int>(spec.dim());
    // Herald photon number g reaches at most n_max + 1 (n_max input photons plus the ancilla).
    for (int g = 1; g <= spec.n_max() + 1; g++) {
        double w = povm.theta(g);
        if (w == 0) {
            continue;
        }
        for (int m = g - 1; m < d; m++) {
            cdouble am = amp_single_ancilla(m, g, reflectivity);
            for (int n = g - 1; n < d; n++) {
                int j = m + 1 - g;
                int k = n + 1 - g;
                cdouble v = w * am * std::conj(amp_single_ancilla(n, g, reflectivity));
                // Both amplitudes carry the same phase (i)^{g-1}, so the product is real.
                t(j, k, m, n) += v.real();
            }
        }
    }
    return t;
}

ProcessTensor fsfqpt::build_tensor_e0(double reflectivity, const HeraldPovm &povm, const HilbertSpec &spec) {
    check_unit_interval(reflectivity, "R");
    ProcessTensor t(spec, "model-e0");
    int d = static_cast<int>(spec.dim());
    for (int g = 1; g <= spec.n_max(); g++) {
        double w = povm.theta(g);
        if (w == 0) {
            continue;
        }
        for (int m = g; m < d; m++) {
            cdouble am = amp_vacuum_ancilla(m, g, reflectivity);
            for (int n = g; n < d; n++) {
                cdouble v = w * am * std::conj(amp_vacuum_ancilla(n, g, reflectivity));
                t(m - g, n - g, m, n) += v.real();
            }
        }
    }
    return t;
}

ProcessTensor fsfqpt::build_tensor_attenuation(double eta, const HilbertSpec &spec) {
    check_unit_interval(eta, "eta");
    ProcessTensor t(spec, "attenuation");
    int d = static_cast<int>(spec.dim());
    for (int m = 0; m < d; m++) {
        for (int n = 0; n < d; n++) {
            for (int j = 0; j <= m; j++) {
                int lost = m - j;
                int k = n - lost;
                if (k < 0) {
                    continue;
                }
                double v = std::sqrt(factorial(m) * factorial(n) / (factorial(j) * factorial(k))) *
                           std::pow(eta, (j + k) / 2.0) * std::pow(1 - eta, lost) / factorial(lost);
                t(j, k, m, n) = v;
            }
        }
    }
    return t;
}

ProcessTensor fsfqpt::compose_fsf_tensor(const FsfParams &params, const HeraldPovm &povm) {
    const auto &spec = params.spec();
    double r = params.reflectivity();
    double mm = params.multimode();
    double eh = params.eta_h();

    ProcessTensor out(spec, "model");
    if (mm * eh != 0) {
        out += (mm * eh) * build_tensor_e1(r, povm, spec);
    }
    if (mm * (1 - eh) != 0) {
        out += (mm * (1 - eh)) * build_tensor_e0(r, povm, spec);
    }
    if ((1 - mm) * params.eta_det() * r != 0) {
        out += ((1 - mm) * params.eta_det() * r) * build_tensor_attenuation(r, spec);
    }
    auto diag = diagnose(out);
    if (!diag.ok()) {
        throw NumericalError("composed FSF tensor violates its contracts: " + diag.describe());
    }
    return out;
}

IdealFilterResult fsfqpt::ideal_filter_apply(const PureState &psi, double reflectivity) {
    check_unit_interval(reflectivity, "R");
    IdealFilterResult out;
    out.state.norm_deficit = psi.norm_deficit;
    out.state.coeffs = psi.coeffs;
    for (Eigen::Index n = 0; n < psi.coeffs.size(); n++) {
        double dn = static_cast<double>(n);
        // n = 0 gives R^{-1/2} R = sqrt(R); written that way to avoid 0^{-1/2} at R = 0.
        double factor = n == 0 ? std::sqrt(reflectivity)
                               : std::pow(reflectivity, (dn - 1) / 2) * (reflectivity - dn * (1 - reflectivity));
        out.state.coeffs(n) *= factor;
    }
    double norm = out.state.coeffs.norm();
    if (norm > 1e-300) {
        out.renormalization = 1 / norm;
    }
    return out;
}

DensityMatrix fsfqpt::apply_process(const ProcessTensor &e, const DensityMatrix &rho) {
    size_t d = e.dim();
    if (rho.dim() != d) {
        throw std::invalid_argument("state and process dimensions differ");
    }
    CMatrix out = CMatrix::Zero(d, d);
    const auto &r = rho.elems();
    for (size_t j = 0; j < d; j++) {
        for (size_t k = 0; k < d; k++) {
            cdouble acc = 0;
            for (size_t m = 0; m < d; m++) {
                for (size_t n = 0; n < d; n++) {
                    acc += e(j, k, m, n) * r(m, n);
                }
            }
            out(j, k) = acc;
        }
    }
    out = (out + out.adjoint()) / 2;
    // The un-normalized output of a heralded process can have zero trace; that is not a
    // density matrix, so report it as a numerical condition rather than build one.
    double tr = out.trace().real();
    if (!(tr > 0)) {
        throw NumericalError("process output has zero trace (the herald never fires for this input)");
    }
    return DensityMatrix(std::move(out));
}

double fsfqpt::success_probability(const ProcessTensor &e, const DensityMatrix &rho) {
    size_t d = e.dim();
    if (rho.dim() != d) {
        throw std::invalid_argument("state and process dimensions differ");
    }
    double s = 0;
    for (size_t k = 0; k < d; k++) {
        for (size_t m = 0; m < d; m++) {
            for (size_t n = 0; n < d; n++) {
                s += (e(k, k, m, n) * rho.elems()(m, n)).real();
            }
        }
    }
    return s;
}

std::optional<double> ConditionalStats::p(size_t k, size_t n) const {
    if (n >= normalized.size() || !normalized[n]) {
        return std::nullopt;
    }
    return (*normalized[n])[k];
}

ConditionalStats fsfqpt::conditional_stats(const ProcessTensor &e) {
    size_t d = e.dim();
    ConditionalStats stats;
    for (size_t n = 0; n < d; n++) {
        std::vector<double> row(d);
        double s = 0;
        for (size_t k = 0; k < d; k++) {
            row[k] = e(k, k, n, n).real();
            s += row[k];
        }
        stats.success.push_back(s);
        if (s > 0) {
            std::vector<double> p(d);
            for (size_t k = 0; k < d; k++) {
                p[k] = row[k] / s;
            }
            stats.normalized.emplace_back(std::move(p));
        } else {
            stats.normalized.emplace_back(std::nullopt);
        }
        stats.unnormalized.push_back(std::move(row));
    }
    return stats;
}

double fsfqpt::linear_loss_prediction(double p11, int n) {
    check_unit_interval(p11, "P(1|1)");
    if (n < 0) {
        throw std::invalid_argument("photon number must be non-negative");
    }
    return std::pow(p11, n);
}
