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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsfqpt/fock.h"
#include "fsfqpt/fsf_model.h"
#include "fsfqpt/homodyne.h"
#include "fsfqpt/process_tensor.h"
#include "fsfqpt/tomography.h"
#include "oracles.h"

using namespace fsfqpt;

namespace {

const HilbertSpec kSpec(6);
constexpr double kEtaApd = 0.45;

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

HeraldPovm click(double eta = kEtaApd) {
    return herald_povm(eta, kSpec.n_max() + 1, HeraldKind::Click);
}

// Shared closed-loop run at the reference parameters.
struct ClosedLoop {
    ProcessTensor model;
    std::vector<ProbeSimulation> sims;
    std::vector<ProbeData> data;
    ReconResult recon;
    double sim_seconds = 0;
    double recon_seconds = 0;
};

ClosedLoop run_closed_loop(const ProcessTensor &model, uint64_t seed) {
    ClosedLoop out{model, {}, {}, ReconResult{model, ChoiOperator::maximally_mixed(kSpec), {}, {}, false}, 0, 0};
    auto t0 = Clock::now();
    auto plan = ProbePlan::reference_defaults();
    plan.seed = seed;
    out.sims = simulate_plan(model, plan);
    for (const auto &s : out.sims) {
        if (s.dataset) {
            out.data.push_back(ProbeData::from_dataset(*s.dataset));
        }
    }
    out.sim_seconds = seconds_since(t0);
    t0 = Clock::now();
    ReconConfig cfg;
    cfg.mu = 0.5;
    cfg.max_iters = 150;
    out.recon = mlr_reconstruct(out.data, cfg);
    out.recon_seconds = seconds_since(t0);
    return out;
}

Verdict amplitude_oracle() {
    auto t0 = Clock::now();
    double worst = 0;
    for (double r : {0.1, 0.3, 0.5, 2.0 / 3.0, 0.9}) {
        for (int m = 0; m <= 6; m++) {
            CMatrix one = oracle::exponential_sector(r, m + 1);
            for (int g = 0; g <= m + 1; g++) {
                worst = std::max(worst, std::abs(amp_single_ancilla(m, g, r) - one(g, 1)));
            }
            CMatrix zero = oracle::exponential_sector(r, m);
            for (int g = 0; g <= m; g++) {
                worst = std::max(worst, std::abs(amp_vacuum_ancilla(m, g, r) - zero(g, 0)));
            }
        }
    }
    double t = seconds_since(t0);
    return {worst < 1e-10 && t < 10, "max deviation " + fmt("%.2e", worst) + ", " + fmt("%.3f", t) + " s"};
}

Verdict null_structure() {
    auto t0 = Clock::now();
    double worst = 0;
    auto povm = herald_povm(1.0, 7, HeraldKind::NumberResolvingOne);
    for (int n = 1; n <= 5; n++) {
        double r = n / (n + 1.0);
        auto e = compose_fsf_tensor(FsfParams(r, 1.0, 1.0, 0.45, kSpec), povm);
        worst = std::max(worst, std::abs(e(n, n, n, n)));
    }
    double t = seconds_since(t0);
    return {worst < 1e-12 && t < 1, "max |E_nn^nn| " + fmt("%.2e", worst) + ", " + fmt("%.3f", t) + " s"};
}

Verdict attenuation_oracle() {
    double worst = 0;
    double trace_dev = 0;
    for (double eta : {0.25, 0.5, 0.9}) {
        auto att = build_tensor_attenuation(eta, kSpec);
        worst = std::max(worst, oracle::max_abs_diff(att, oracle::kraus_loss(eta, kSpec)));
        for (double s : att.layer_success()) {
            trace_dev = std::max(trace_dev, std::abs(s - 1));
        }
    }
    return {worst < 1e-12 && trace_dev < 1e-12,
            "max deviation " + fmt("%.2e", worst) + ", trace deviation " + fmt("%.2e", trace_dev)};
}

Verdict contracts() {
    std::mt19937_64 rng(20260401);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> rs, ehs, ms;
    for (int i = 0; i < 5; i++) {
        rs.push_back(u(rng));
        ehs.push_back(u(rng));
        ms.push_back(u(rng));
    }
    double min_eig = 1;
    double s_lo = 1;
    double s_hi = 0;
    int count = 0;
    for (double r : rs) {
        for (double eh : ehs) {
            for (double m : ms) {
                auto e = compose_fsf_tensor(FsfParams(r, eh, m, u(rng), kSpec), click(u(rng)));
                min_eig = std::min(min_eig, min_eigenvalue(e.choi_matrix()));
                for (double s : e.layer_success()) {
                    s_lo = std::min(s_lo, s);
                    s_hi = std::max(s_hi, s);
                }
                count++;
            }
        }
    }
    return {min_eig >= -1e-8 && s_lo >= 0 && s_hi <= 1,
            std::to_string(count) + " tensors, min Choi eigenvalue " + fmt("%.2e", min_eig) + ", s_n in [" +
                fmt("%.4f", s_lo) + ", " + fmt("%.4f", s_hi) + "]"};
}

Verdict closed_loop_fidelity(const ClosedLoop &cl) {
    double f = choi_fidelity(cl.recon.tensor, cl.model);
    double t = cl.sim_seconds + cl.recon_seconds;
    return {f >= 0.95 && t <= 1800, "fidelity " + fmt("%.4f", f) + " after " + std::to_string(cl.recon.log.size()) +
                                        " iterations, " + fmt("%.1f", t) + " s"};
}

Verdict conditional_statistics(const ClosedLoop &cl) {
    auto model = conditional_stats(cl.model);
    auto rec = conditional_stats(cl.recon.tensor);
    if (!model.p(1, 1) || !rec.p(1, 1)) {
        return {false, "P(1|1) undefined"};
    }
    double p11 = *rec.p(1, 1);
    double p11_model = *model.p(1, 1);
    bool ok = std::abs(p11 - p11_model) <= 0.03 && std::abs(p11 - 0.101) <= 0.05;
    std::string detail = "P(1|1) " + fmt("%.4f", p11) + " (model " + fmt("%.4f", p11_model) + ")";
    for (int n = 2; n <= 4; n++) {
        auto pnn = rec.p(static_cast<size_t>(n), static_cast<size_t>(n));
        double bound = 3 * linear_loss_prediction(p11, n);
        ok = ok && pnn && *pnn >= bound;
        detail += ", P(" + std::to_string(n) + "|" + std::to_string(n) + ") " + fmt("%.4f", pnn.value_or(NAN)) +
                  " >= " + fmt("%.4f", bound);
    }
    return {ok, detail};
}

Verdict success_curve(const ClosedLoop &cl) {
    auto single = compose_fsf_tensor(FsfParams(0.5, 0.45, 1.0, 0.45, kSpec), click());
    double worst_z = 0;
    int below = 0;
    int probes = 0;
    double prev_gap = 0;
    double prev_x = 0;
    double crossing = NAN;
    for (const auto &s : cl.sims) {
        if (!s.dataset) {
            return {false, "a probe starved"};
        }
        const auto &ds = *s.dataset;
        double p = s.success_model;
        double sigma = std::sqrt(p * (1 - p) / static_cast<double>(ds.trials_total));
        worst_z = std::max(worst_z, std::abs(ds.success_measured() - p) / sigma);
        auto rho = DensityMatrix::from_pure(coherent_state(ds.probe, kSpec).coeffs);
        double gap = p - success_probability(single, rho);
        double x = std::norm(ds.probe);
        below += gap > 0 ? 1 : 0;
        if (probes > 0 && prev_gap > 0 && gap <= 0 && std::isnan(crossing)) {
            crossing = prev_x + (x - prev_x) * prev_gap / (prev_gap - gap);
        }
        prev_gap = gap;
        prev_x = x;
        probes++;
    }
    std::string detail = "max |z| vs multimode model " + fmt("%.2f", worst_z) + " over " + std::to_string(probes) +
                         " probes; single-mode curve below at " + std::to_string(below) + " of " +
                         std::to_string(probes) + " probes";
    if (!std::isnan(crossing)) {
        detail += ", curves cross near |alpha|^2 = " + fmt("%.2f", crossing);
    }
    return {worst_z <= 4 && below == probes, detail};
}

Verdict scan_peak(const ClosedLoop &cl) {
    auto base = FsfParams::reference_defaults();
    ScanAxis eh{ScanParam::EtaH, 0, 1, 21};
    auto a = fidelity_scan(cl.recon.tensor, eh, {ScanParam::EtaApd, 0, 1, 21}, base, kEtaApd);
    auto b = fidelity_scan(cl.recon.tensor, eh, {ScanParam::Reflectivity, 0.2, 0.8, 21}, base, kEtaApd);
    auto within = [](const ScanAxis &ax, double got, double want) {
        double cell = (ax.hi - ax.lo) / (ax.points - 1);
        return std::abs(got - want) <= cell + 1e-12;
    };
    bool ok = within(a.x, a.argmax_x_value(), 0.45) && within(a.y, a.argmax_y_value(), kEtaApd) &&
              within(b.x, b.argmax_x_value(), 0.45) && within(b.y, b.argmax_y_value(), 0.5);
    return {ok, "(eta_h, eta_apd) peak at (" + fmt("%.2f", a.argmax_x_value()) + ", " +
                    fmt("%.2f", a.argmax_y_value()) + "), (eta_h, R) peak at (" + fmt("%.2f", b.argmax_x_value()) +
                    ", " + fmt("%.2f", b.argmax_y_value()) + ")"};
}

Verdict random_state_study(const ClosedLoop &cl) {
    auto att = build_tensor_attenuation(0.5, kSpec);
    std::vector<int> n_list{1, 2, 3, 4, 5, 6};
    std::mt19937_64 rng_a(77);
    std::mt19937_64 rng_b(77);
    auto vs_model = random_state_fidelity_study(cl.recon.tensor, cl.model, n_list, 10000, rng_a);
    auto vs_att = random_state_fidelity_study(cl.recon.tensor, att, n_list, 10000, rng_b);
    bool ok = true;
    double lo = 1;
    double margin = 1;
    for (size_t i = 0; i < n_list.size(); i++) {
        ok = ok && vs_model[i].mean >= 0.98 && vs_model[i].mean > vs_att[i].mean && vs_model[i].skipped == 0;
        lo = std::min(lo, vs_model[i].mean);
        margin = std::min(margin, vs_model[i].mean - vs_att[i].mean);
    }
    return {ok, "min mean fidelity vs model " + fmt("%.4f", lo) + ", min margin over attenuation " +
                    fmt("%.4f", margin)};
}

Verdict maxlik_properties(const std::vector<const ClosedLoop *> &runs) {
    double worst_drop = 0;
    for (const auto *cl : runs) {
        for (size_t i = 1; i < cl->recon.log.size(); i++) {
            worst_drop = std::max(worst_drop, cl->recon.log[i - 1].log_likelihood - cl->recon.log[i].log_likelihood);
        }
    }
    BinGrid grid;
    MeasurementModel m(kSpec, grid);
    double worst_move = 0;
    for (const auto *cl : runs) {
        auto c = choi_from_tensor(cl->model);
        std::vector<ProbeObservation> obs;
        for (auto a : ProbePlan::reference_defaults().amplitudes) {
            obs.push_back(expected_observation(c, m, a, 1e6));
        }
        LikelihoodModel lm(kSpec, grid, obs);
        auto next = lm.step(c, lm.evaluate(c).r, 0.5);
        worst_move = std::max(worst_move, (next.matrix() - c.matrix()).cwiseAbs().maxCoeff());
    }
    return {worst_drop <= 0 && worst_move <= 1e-8,
            "largest log-likelihood drop " + fmt("%.2e", worst_drop) + ", fixed-point deviation " +
                fmt("%.2e", worst_move)};
}

}  // namespace

// Usage: acceptance [--expect-fail N]...
// The exit status is zero when the failing criteria are exactly the expected ones.
int main(int argc, char **argv) {
    std::set<int> expected;
    for (int i = 1; i < argc; i++) {
        if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
            expected.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--expect-fail N]...\n", argv[0]);
            return 2;
        }
    }

    std::set<int> failed;
    auto report = [&](int n, const std::string &name, const std::function<Verdict()> &check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) {
            failed.insert(n);
        }
        std::printf("%s criterion %d: %s: %s\n", v.pass ? "PASS" : "FAIL", n, name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "amplitude oracle", amplitude_oracle);
    report(2, "null structure", null_structure);
    report(3, "attenuation oracle", attenuation_oracle);
    report(4, "CP and trace contracts", contracts);

    auto model = compose_fsf_tensor(FsfParams::reference_defaults(), click());
    auto loop = run_closed_loop(model, 1);
    auto att_loop = run_closed_loop(build_tensor_attenuation(0.5, kSpec), 2);

    report(5, "closed-loop fidelity", [&] { return closed_loop_fidelity(loop); });
    report(6, "conditional statistics", [&] { return conditional_statistics(loop); });
    report(7, "success-probability curve", [&] { return success_curve(loop); });
    report(8, "fidelity-surface peak", [&] { return scan_peak(loop); });
    report(9, "random-state study", [&] { return random_state_study(loop); });
    report(10, "likelihood properties", [&] { return maxlik_properties({&loop, &att_loop}); });

    for (int n : expected) {
        std::printf("expected failure: criterion %d%s\n", n, failed.count(n) ? "" : " (but it passed)");
    }
    return failed == expected ? 0 : 1;
}
