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

#include "commands.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "fsfqpt/fsf_model.h"
#include "fsfqpt/homodyne.h"
#include "fsfqpt/process_tensor.h"
#include "fsfqpt/sha256.h"
#include "fsfqpt/tomography.h"

namespace fs = std::filesystem;

namespace fsfqpt::cli {

namespace {

constexpr const char *kModelFile = "model.tensor.json";
constexpr const char *kReconFile = "reconstructed.tensor.json";
constexpr const char *kManifestFile = "manifest.txt";
constexpr double kLossReference = 0.5;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_file(const fs::path &path, const std::string &content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw DataError("cannot write " + path.string());
    }
    f << content;
    if (!f) {
        throw DataError("failed writing " + path.string());
    }
}

ProcessTensor load_tensor(const fs::path &path) {
    if (!fs::exists(path)) {
        throw DataError("tensor file not found: " + path.string());
    }
    try {
        return read_tensor_file(path);
    } catch (const ParseError &e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

fs::path out_dir(const RunConfig &cfg) {
    return fs::path(cfg.output_dir);
}

std::string params_line(const RunConfig &cfg) {
    return "R=" + num(cfg.reflectivity) + " eta_h=" + num(cfg.eta_h) + " M=" + num(cfg.multimode) +
           " eta_det=" + num(cfg.eta_det) + " eta_apd=" + num(cfg.eta_apd) +
           " herald=" + std::string(herald_kind_name(cfg.herald)) + " n_max=" + std::to_string(cfg.n_max);
}

// Rows n, columns k; "-" marks an undefined row.
std::string conditional_table(const ConditionalStats &s) {
    std::ostringstream os;
    size_t d = s.success.size();
    os << "n\\k";
    for (size_t k = 0; k < d; k++) {
        os << "\t" << k;
    }
    os << "\n";
    for (size_t n = 0; n < d; n++) {
        os << n;
        for (size_t k = 0; k < d; k++) {
            auto p = s.p(k, n);
            os << "\t" << (p ? num(*p) : "-");
        }
        os << "\n";
    }
    return os.str();
}

std::string conditional_csv(const ConditionalStats &s) {
    std::ostringstream os;
    os << "n,k,p_k_given_n\n";
    size_t d = s.success.size();
    for (size_t n = 0; n < d; n++) {
        for (size_t k = 0; k < d; k++) {
            auto p = s.p(k, n);
            os << n << "," << k << "," << (p ? num(*p) : "") << "\n";
        }
    }
    return os.str();
}

std::string surface_csv(const FidelitySurface &s) {
    std::ostringstream os;
    os << scan_param_name(s.x.param) << "," << scan_param_name(s.y.param) << ",fidelity\n";
    auto xs = s.x.values();
    auto ys = s.y.values();
    for (int iy = 0; iy < s.y.points; iy++) {
        for (int ix = 0; ix < s.x.points; ix++) {
            os << num(xs[static_cast<size_t>(ix)]) << "," << num(ys[static_cast<size_t>(iy)]) << ","
               << num(s.at(ix, iy)) << "\n";
        }
    }
    return os.str();
}

std::string surface_argmax(const FidelitySurface &s) {
    return std::string(scan_param_name(s.x.param)) + "=" + num(s.argmax_x_value()) + " (index " +
           std::to_string(s.argmax_x) + "), " + std::string(scan_param_name(s.y.param)) + "=" +
           num(s.argmax_y_value()) + " (index " + std::to_string(s.argmax_y) + "), fidelity " + num(s.max_value());
}

struct ScanPair {
    FidelitySurface detector;
    FidelitySurface reflectivity;
};

ScanPair run_scans(const ProcessTensor &recon, const RunConfig &cfg) {
    auto base = cfg.params();
    int n = cfg.scan_points;
    return ScanPair{
        fidelity_scan(recon, {ScanParam::EtaH, 0, 1, n}, {ScanParam::EtaApd, 0, 1, n}, base, cfg.eta_apd, cfg.herald),
        fidelity_scan(
            recon, {ScanParam::EtaH, 0, 1, n}, {ScanParam::Reflectivity, 0.2, 0.8, n}, base, cfg.eta_apd, cfg.herald)};
}

void write_scans(const ScanPair &s, const fs::path &dir, std::ostream &report) {
    write_file(dir / "scan_eta_h_eta_apd.csv", surface_csv(s.detector));
    write_file(dir / "scan_eta_h_R.csv", surface_csv(s.reflectivity));
    report << "scan (eta_h, eta_apd) argmax: " << surface_argmax(s.detector) << "\n";
    report << "scan (eta_h, R) argmax: " << surface_argmax(s.reflectivity) << "\n";
}

}  // namespace

RunConfig load_config(const Options &opt) {
    RunConfig cfg = opt.config.empty() ? RunConfig{} : read_config_file(opt.config);
    if (opt.ideal) {
        cfg.make_ideal();
    }
    if (opt.seed) {
        cfg.seed = *opt.seed;
    }
    if (opt.out) {
        cfg.output_dir = *opt.out;
    }
    if (opt.iters) {
        cfg.max_iters = *opt.iters;
    }
    if (opt.mu) {
        cfg.mu = *opt.mu;
    }
    if (opt.nmax) {
        cfg.n_max = *opt.nmax;
    }
    cfg.validate();
    return cfg;
}

void cmd_model(const Options &opt, std::ostream &out) {
    RunConfig cfg = load_config(opt);
    ProcessTensor e = compose_fsf_tensor(cfg.params(), cfg.povm());
    fs::path dir = out_dir(cfg);
    fs::create_directories(dir);
    write_tensor_file(dir / kModelFile, e);

    std::ostringstream cfg_text;
    write_config(cfg_text, cfg);
    write_file(dir / "config.txt", cfg_text.str());

    auto stats = conditional_stats(e);
    std::ostringstream os;
    os << "model tensor: " << (dir / kModelFile).string() << "\n";
    os << "parameters: " << params_line(cfg) << "\n\n";
    os << "layer success s_n\n";
    for (size_t n = 0; n < stats.success.size(); n++) {
        os << "  s_" << n << " = " << num(stats.success[n]) << "\n";
    }
    os << "\nconditional statistics P(k|n)\n" << conditional_table(stats);
    if (auto p11 = stats.p(1, 1)) {
        os << "\nP(1|1) = " << num(*p11) << "\n";
    }
    write_file(dir / "model_summary.txt", os.str());
    write_file(dir / "model_conditional.csv", conditional_csv(stats));
    out << os.str();
}

void cmd_simulate(const Options &opt, std::ostream &out) {
    RunConfig cfg = load_config(opt);
    fs::path dir = out_dir(cfg);
    fs::path tensor_path = opt.tensor ? fs::path(*opt.tensor) : dir / kModelFile;
    ProcessTensor e = load_tensor(tensor_path);
    if (e.spec().n_max() != cfg.n_max) {
        throw DataError("tensor n_max " + std::to_string(e.spec().n_max()) + " differs from config n_max " +
                        std::to_string(cfg.n_max));
    }
    ProbePlan plan = cfg.plan();
    fs::path data_dir = opt.data ? fs::path(*opt.data) : dir / "data";
    fs::create_directories(data_dir);

    // Single-mode reference: same filter with a perfectly mode-matched ancilla.
    FsfParams single(cfg.reflectivity, cfg.eta_h, 1.0, cfg.eta_det, HilbertSpec(cfg.n_max));
    ProcessTensor e_single = compose_fsf_tensor(single, cfg.povm());

    Manifest manifest;
    manifest.tensor_file = fs::absolute(tensor_path).lexically_normal().string();
    manifest.tensor_sha256 = sha256_file(tensor_path);
    manifest.plan = plan;

    std::ostringstream table;
    table << "alpha,alpha_sq,trials,heralds,success_measured,sigma_binomial,success_model,success_single_mode,status\n";
    auto sims = simulate_plan(e, plan);
    int skipped = 0;
    for (size_t i = 0; i < sims.size(); i++) {
        const auto &sim = sims[i];
        cdouble alpha = plan.amplitudes[i];
        ManifestEntry entry;
        entry.index = i;
        entry.alpha = alpha;
        entry.seed = plan.probe_seed(i);
        entry.success_model = sim.success_model;
        auto rho = DensityMatrix::from_pure(coherent_state(alpha, e.spec()).coeffs);
        double p_single = success_probability(e_single, rho);
        if (sim.dataset) {
            char name[32];
            std::snprintf(name, sizeof name, "probe_%02zu.dat", i);
            fs::path file = data_dir / name;
            write_dataset_file(file, *sim.dataset);
            entry.file = name;
            entry.sha256 = sha256_file(file);
            entry.trials_total = sim.dataset->trials_total;
            entry.heralds = sim.dataset->heralds;
            entry.success_measured = sim.dataset->success_measured();
        } else {
            entry.status = "skipped";
            entry.reason = sim.diagnostic;
            skipped++;
            out << "warning: probe " << i << " skipped (" << sim.diagnostic << ")\n";
        }
        double p = entry.success_measured;
        double sigma = entry.trials_total > 0 ? std::sqrt(p * (1 - p) / static_cast<double>(entry.trials_total)) : 0;
        table << num(alpha.real()) << "," << num(std::norm(alpha)) << "," << entry.trials_total << "," << entry.heralds
              << "," << num(p) << "," << num(sigma) << "," << num(sim.success_model) << "," << num(p_single) << ","
              << entry.status << "\n";
        manifest.probes.push_back(std::move(entry));
    }
    std::ostringstream mtext;
    write_manifest(mtext, manifest);
    write_file(data_dir / kManifestFile, mtext.str());
    write_file(data_dir / "success_vs_intensity.csv", table.str());
    out << "simulated " << sims.size() - static_cast<size_t>(skipped) << " of " << sims.size() << " probes into "
        << data_dir.string() << "\n";
    out << "manifest sha256 " << sha256_file(data_dir / kManifestFile) << "\n";
}

void cmd_reconstruct(const Options &opt, std::ostream &out) {
    RunConfig cfg = load_config(opt);
    fs::path dir = out_dir(cfg);
    fs::path data_dir = opt.data ? fs::path(*opt.data) : dir / "data";
    fs::path manifest_path = data_dir / kManifestFile;
    if (!fs::exists(manifest_path)) {
        throw DataError("manifest not found: " + manifest_path.string());
    }
    Manifest manifest;
    try {
        std::ifstream in(manifest_path);
        manifest = read_manifest(in);
    } catch (const ParseError &e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }

    ReconConfig rc = cfg.recon();
    std::vector<ProbeData> data;
    for (const auto &entry : manifest.probes) {
        if (entry.status != "ok") {
            continue;
        }
        fs::path file = data_dir / entry.file;
        if (!fs::exists(file)) {
            throw DataError("dataset file missing: " + file.string());
        }
        if (sha256_file(file) != entry.sha256) {
            throw DataError("dataset hash differs from manifest: " + file.string());
        }
        QuadratureDataset ds;
        try {
            ds = read_dataset_file(file);
        } catch (const ParseError &e) {
            throw DataError(file.string() + ": " + e.what());
        }
        if (ds.heralds != entry.heralds || ds.trials_total != entry.trials_total || ds.probe != entry.alpha) {
            throw DataError("dataset contents disagree with manifest: " + file.string());
        }
        data.push_back(ProbeData::from_dataset(ds, rc.grid));
    }

    ReconResult result = [&] {
        try {
            return mlr_reconstruct(data, rc);
        } catch (const std::invalid_argument &e) {
            throw DataError(e.what());
        }
    }();
    fs::create_directories(dir);
    write_tensor_file(dir / kReconFile, result.tensor);

    std::ostringstream log;
    log << "iteration,log_likelihood,relative_change,mu\n";
    for (const auto &row : result.log) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.6e,%.6g\n", row.iteration, row.log_likelihood, row.relative_change,
                      row.mu);
        log << buf;
    }
    write_file(dir / "iterations.csv", log.str());

    std::ostringstream os;
    os << "reconstructed tensor: " << (dir / kReconFile).string() << "\n";
    os << "probes used: " << data.size() << "\n";
    os << "iterations: " << result.log.size() << (result.converged ? " (converged)" : "") << "\n";
    if (!result.log.empty()) {
        os << "final log-likelihood: " << num(result.log.back().log_likelihood) << "\n";
    }
    os << "diagnostics: " << diagnose(result.tensor).describe() << "\n";

    // Compare with the generating tensor when it is available and unchanged.
    fs::path model_path = opt.tensor ? fs::path(*opt.tensor) : fs::path(manifest.tensor_file);
    if (fs::exists(model_path) && (opt.tensor || sha256_file(model_path) == manifest.tensor_sha256)) {
        ProcessTensor model = load_tensor(model_path);
        if (model.spec() == result.tensor.spec()) {
            os << "choi fidelity vs " << model_path.string() << ": " << num(choi_fidelity(result.tensor, model)) << "\n";
        }
    }
    for (const auto &w : result.warnings) {
        os << "warning: " << w << "\n";
    }
    write_file(dir / "reconstruct_summary.txt", os.str());
    out << os.str();
}

void cmd_analyze(const Options &opt, std::ostream &out) {
    RunConfig cfg = load_config(opt);
    fs::path dir = out_dir(cfg);
    ProcessTensor recon = load_tensor(opt.tensor ? fs::path(*opt.tensor) : dir / kReconFile);
    ProcessTensor model = load_tensor(opt.model ? fs::path(*opt.model) : dir / kModelFile);
    if (!(recon.spec() == model.spec())) {
        throw DataError("reconstructed and model tensors differ in dimension");
    }
    if (recon.spec().n_max() != cfg.n_max) {
        throw DataError("tensor n_max differs from config n_max");
    }
    size_t d = recon.dim();
    std::ostringstream os;
    os << "model parameters: " << params_line(cfg) << "\n";
    os << "choi fidelity: " << num(choi_fidelity(recon, model)) << "\n\n";

    auto sr = conditional_stats(recon);
    auto sm = conditional_stats(model);
    write_file(dir / "conditional_reconstructed.csv", conditional_csv(sr));
    write_file(dir / "conditional_model.csv", conditional_csv(sm));
    os << "P(k|n), reconstructed\n" << conditional_table(sr) << "\nP(k|n), model\n" << conditional_table(sm) << "\n";

    std::ostringstream diag;
    diag << "n,k,e_kknn_reconstructed,e_kknn_model\n";
    for (size_t n = 0; n < d; n++) {
        for (size_t k = 0; k < d; k++) {
            diag << n << "," << k << "," << num(sr.unnormalized[n][k]) << "," << num(sm.unnormalized[n][k]) << "\n";
        }
    }
    write_file(dir / "diagonal_elements.csv", diag.str());

    std::ostringstream surv;
    surv << "n,p_nn_reconstructed,p_nn_model,linear_loss_p11_pow_n\n";
    auto p11 = sr.p(1, 1);
    os << "survival P(n|n) vs linear loss P(1|1)^n\n";
    for (size_t n = 1; n < d; n++) {
        auto pr = sr.p(n, n);
        auto pm = sm.p(n, n);
        std::string lin = p11 ? num(linear_loss_prediction(*p11, static_cast<int>(n))) : "";
        surv << n << "," << (pr ? num(*pr) : "") << "," << (pm ? num(*pm) : "") << "," << lin << "\n";
        os << "  n=" << n << ": reconstructed " << (pr ? num(*pr) : "-") << ", model " << (pm ? num(*pm) : "-")
           << ", linear loss " << (lin.empty() ? "-" : lin) << "\n";
    }
    write_file(dir / "survival.csv", surv.str());
    os << "\n";

    write_scans(run_scans(recon, cfg), dir, os);

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> cutoffs;
    for (int n = 1; n <= cfg.n_max; n++) {
        cutoffs.push_back(n);
    }
    ProcessTensor att = build_tensor_attenuation(kLossReference, recon.spec());
    auto vs_model = random_state_fidelity_study(recon, model, cutoffs, cfg.study_states, rng);
    auto vs_att = random_state_fidelity_study(recon, att, cutoffs, cfg.study_states, rng);
    std::ostringstream study;
    study << "n_max,mean_vs_model,std_vs_model,mean_vs_attenuation,std_vs_attenuation,skipped\n";
    os << "\nrandom-state output fidelity (" << cfg.study_states << " states per cutoff)\n";
    for (size_t i = 0; i < vs_model.size(); i++) {
        const auto &a = vs_model[i];
        const auto &b = vs_att[i];
        study << a.n_max << "," << num(a.mean) << "," << num(a.stddev) << "," << num(b.mean) << "," << num(b.stddev)
              << "," << a.skipped + b.skipped << "\n";
        os << "  n_max=" << a.n_max << ": vs model " << num(a.mean) << " +- " << num(a.stddev) << ", vs attenuation "
           << num(b.mean) << " +- " << num(b.stddev) << "\n";
    }
    write_file(dir / "random_state_fidelity.csv", study.str());
    write_file(dir / "analysis_summary.txt", os.str());
    out << os.str();
}

void cmd_scan(const Options &opt, std::ostream &out) {
    RunConfig cfg = load_config(opt);
    fs::path dir = out_dir(cfg);
    ProcessTensor recon = load_tensor(opt.tensor ? fs::path(*opt.tensor) : dir / kReconFile);
    if (recon.spec().n_max() != cfg.n_max) {
        throw DataError("tensor n_max differs from config n_max");
    }
    write_scans(run_scans(recon, cfg), dir, out);
}

}  // namespace fsfqpt::cli
