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

#include "fsfqpt/homodyne.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fsfqpt/fsf_model.h"

using namespace fsfqpt;

namespace {

std::string format_double(const char *fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string exact(double v) {
    return format_double("%.17g", v);
}

/// Line-oriented reader that remembers the line number for error messages.
class LineReader {
   public:
    explicit LineReader(std::istream &in) : in_(in) {
    }

    /// Next non-comment line, or nullopt at end of input.
    std::optional<std::string> next() {
        std::string line;
        while (std::getline(in_, line)) {
            line_no_++;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty() || line[0] == '#') {
                continue;
            }
            return line;
        }
        return std::nullopt;
    }

    std::string require(const char *what) {
        auto line = next();
        if (!line) {
            fail(std::string("unexpected end of file, expected ") + what);
        }
        return *line;
    }

    [[noreturn]] void fail(const std::string &msg) const {
        throw ParseError("line " + std::to_string(line_no_) + ": " + msg);
    }

    int line_no() const {
        return line_no_;
    }

   private:
    std::istream &in_;
    int line_no_ = 0;
};

/// Parses "key v1 v2 ..." and checks the key.
std::vector<std::string> keyed_fields(LineReader &r, const char *key, size_t n_values) {
    std::istringstream ss(r.require(key));
    std::string k;
    ss >> k;
    if (k != key) {
        r.fail("expected '" + std::string(key) + "', found '" + k + "'");
    }
    std::vector<std::string> out;
    std::string v;
    while (ss >> v) {
        out.push_back(v);
    }
    if (out.size() != n_values) {
        r.fail("'" + std::string(key) + "' expects " + std::to_string(n_values) + " value(s)");
    }
    return out;
}

double parse_double(LineReader &r, const std::string &s) {
    char *end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) {
        r.fail("not a finite number: '" + s + "'");
    }
    return v;
}

int64_t parse_int(LineReader &r, const std::string &s) {
    char *end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0') {
        r.fail("not an integer: '" + s + "'");
    }
    return v;
}

uint64_t parse_uint(LineReader &r, const std::string &s) {
    char *end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || s[0] == '-') {
        r.fail("not an unsigned integer: '" + s + "'");
    }
    return v;
}

}  // namespace

ProbePlan ProbePlan::linear(double lo, double hi, int n_probes, int64_t samples_per_probe, uint64_t seed) {
    if (n_probes < 1) {
        throw std::invalid_argument("need at least one probe");
    }
    ProbePlan plan;
    plan.samples_per_probe = samples_per_probe;
    plan.seed = seed;
    for (int i = 0; i < n_probes; i++) {
        double a = n_probes == 1 ? lo : lo + (hi - lo) * i / (n_probes - 1);
        plan.amplitudes.emplace_back(a, 0.0);
    }
    return plan;
}

ProbePlan ProbePlan::reference_defaults() {
    return linear(0.1, 1.5, 20, 20000, 1);
}

void ProbePlan::validate(const HilbertSpec &spec) const {
    if (amplitudes.empty()) {
        throw std::invalid_argument("probe plan has no amplitudes");
    }
    if (samples_per_probe < 1000) {
        throw std::invalid_argument("samples_per_probe must be at least 1000");
    }
    if (phase_grid < 1) {
        throw std::invalid_argument("phase_grid must be positive");
    }
    for (auto a : amplitudes) {
        coherent_state(a, spec);
    }
}

std::vector<double> ProbePlan::phases() const {
    std::vector<double> out;
    for (int i = 0; i < phase_grid; i++) {
        out.push_back((i + 0.5) * std::numbers::pi / phase_grid);
    }
    return out;
}

uint64_t ProbePlan::probe_seed(size_t index) const {
    std::seed_seq seq{
        static_cast<uint32_t>(seed & 0xffffffffu),
        static_cast<uint32_t>(seed >> 32),
        static_cast<uint32_t>(index & 0xffffffffu),
        static_cast<uint32_t>(static_cast<uint64_t>(index) >> 32)};
    uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<uint64_t>(words[1]) << 32) | words[0];
}

double BinGrid::phase_width() const {
    return std::numbers::pi / phase_bins;
}

double BinGrid::quad_width() const {
    return (x_max - x_min) / quad_bins;
}

double BinGrid::phase_center(int bin) const {
    return (bin + 0.5) * phase_width();
}

double BinGrid::quad_edge(int edge) const {
    return x_min + (x_max - x_min) * edge / quad_bins;
}

double BinGrid::quad_center(int bin) const {
    return (quad_edge(bin) + quad_edge(bin + 1)) / 2;
}

std::optional<int> BinGrid::quad_bin(double x) const {
    if (!(x >= x_min && x <= x_max)) {
        return std::nullopt;
    }
    int b = static_cast<int>(std::floor((x - x_min) / (x_max - x_min) * quad_bins));
    b = std::clamp(b, 0, quad_bins - 1);
    // Correct for rounding in the division so bin membership matches the edges exactly.
    if (x < quad_edge(b)) {
        b--;
    } else if (b + 1 < quad_bins && x >= quad_edge(b + 1)) {
        b++;
    }
    return b;
}

int BinGrid::phase_bin(double theta) const {
    constexpr double pi = std::numbers::pi;
    if (theta == pi) {
        return phase_bins - 1;
    }
    double folded = std::fmod(theta, pi);
    if (folded < 0) {
        folded += pi;
    }
    int b = static_cast<int>(std::floor(folded / pi * phase_bins));
    return std::clamp(b, 0, phase_bins - 1);
}

int64_t BinnedHistogram::total() const {
    int64_t t = underflow + overflow;
    for (auto c : counts) {
        t += c;
    }
    return t;
}

QuadratureSampler::QuadratureSampler(const DensityMatrix &rho, double theta) {
    xs_.resize(kSamplerGridPoints);
    for (int i = 0; i < kSamplerGridPoints; i++) {
        xs_[i] = -kQuadratureWindow + 2 * kQuadratureWindow * i / (kSamplerGridPoints - 1);
    }
    auto pdf = quadrature_pdf(rho, theta, xs_);
    cdf_.assign(xs_.size(), 0.0);
    for (size_t i = 1; i < xs_.size(); i++) {
        cdf_[i] = cdf_[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (xs_[i] - xs_[i - 1]);
    }
    double total = cdf_.back();
    if (!(total > 0)) {
        throw NumericalError("quadrature distribution has no mass inside the acquisition window");
    }
    for (auto &c : cdf_) {
        c /= total;
    }
}

double QuadratureSampler::sample(std::mt19937_64 &rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) {
        return xs_.front();
    }
    if (it == cdf_.end()) {
        return xs_.back();
    }
    size_t i = static_cast<size_t>(it - cdf_.begin());
    double c0 = cdf_[i - 1];
    double c1 = cdf_[i];
    double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
}

double QuadratureSampler::cdf(double x) const {
    if (x <= xs_.front()) {
        return 0;
    }
    if (x >= xs_.back()) {
        return 1;
    }
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    size_t i = static_cast<size_t>(it - xs_.begin());
    double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
}

ProbeSimulation fsfqpt::simulate_probe(
    const ProcessTensor &e, cdouble alpha, const ProbePlan &plan, std::mt19937_64 &rng) {
    auto probe = coherent_state(alpha, e.spec());
    auto rho_in = DensityMatrix::from_pure(probe.coeffs);

    ProbeSimulation out;
    double p = success_probability(e, rho_in);
    out.success_model = p;
    if (!(p >= kMinSuccessProbability)) {
        out.diagnostic = "herald_starvation";
        return out;
    }
    auto rho_out = apply_process(e, rho_in).normalized();

    QuadratureDataset ds;
    ds.probe = alpha;
    ds.trials_total = static_cast<int64_t>(std::ceil(static_cast<double>(plan.samples_per_probe) / p));
    ds.heralds = std::binomial_distribution<int64_t>(ds.trials_total, std::min(p, 1.0))(rng);

    auto phases = plan.phases();
    std::vector<QuadratureSampler> samplers;
    samplers.reserve(phases.size());
    for (double th : phases) {
        samplers.emplace_back(rho_out, th);
    }
    std::uniform_int_distribution<size_t> pick_phase(0, phases.size() - 1);
    ds.records.reserve(static_cast<size_t>(ds.heralds));
    for (int64_t h = 0; h < ds.heralds; h++) {
        size_t ph = pick_phase(rng);
        double x = samplers[ph].sample(rng);
        ds.records.push_back({round_to_file_precision(phases[ph]), round_to_file_precision(x)});
    }
    out.dataset = std::move(ds);
    return out;
}

std::vector<ProbeSimulation> fsfqpt::simulate_plan(const ProcessTensor &e, const ProbePlan &plan) {
    plan.validate(e.spec());
    std::vector<ProbeSimulation> out;
    for (size_t i = 0; i < plan.amplitudes.size(); i++) {
        auto rng = plan.probe_rng(i);
        auto sim = simulate_probe(e, plan.amplitudes[i], plan, rng);
        if (sim.dataset) {
            sim.dataset->seed = plan.probe_seed(i);
        }
        out.push_back(std::move(sim));
    }
    return out;
}

BinnedHistogram fsfqpt::bin_dataset(const QuadratureDataset &ds, const BinGrid &grid) {
    BinnedHistogram h;
    h.grid = grid;
    h.counts.assign(static_cast<size_t>(grid.phase_bins) * static_cast<size_t>(grid.quad_bins), 0);
    for (const auto &rec : ds.records) {
        auto qb = grid.quad_bin(rec.x);
        if (!qb) {
            if (rec.x < grid.x_min) {
                h.underflow++;
            } else {
                h.overflow++;
            }
            continue;
        }
        int pb = grid.phase_bin(rec.theta);
        h.counts[static_cast<size_t>(pb) * static_cast<size_t>(grid.quad_bins) + static_cast<size_t>(*qb)]++;
    }
    return h;
}

double fsfqpt::round_to_file_precision(double v) {
    return std::strtod(format_double("%.8e", v).c_str(), nullptr);
}

void fsfqpt::write_dataset(std::ostream &out, const QuadratureDataset &ds) {
    out << "# fsfqpt heralded quadrature dataset\n";
    out << "version 1\n";
    out << "alpha " << exact(ds.probe.real()) << " " << exact(ds.probe.imag()) << "\n";
    out << "seed " << ds.seed << "\n";
    out << "trials_total " << ds.trials_total << "\n";
    out << "heralds " << ds.heralds << "\n";
    out << "records " << ds.records.size() << "\n";
    char buf[80];
    for (const auto &r : ds.records) {
        std::snprintf(buf, sizeof(buf), "%.8e %.8e\n", r.theta, r.x);
        out << buf;
    }
    out << "end\n";
}

QuadratureDataset fsfqpt::read_dataset(std::istream &in) {
    LineReader r(in);
    QuadratureDataset ds;
    if (parse_int(r, keyed_fields(r, "version", 1)[0]) != 1) {
        r.fail("unsupported dataset version");
    }
    auto a = keyed_fields(r, "alpha", 2);
    ds.probe = cdouble(parse_double(r, a[0]), parse_double(r, a[1]));
    ds.seed = parse_uint(r, keyed_fields(r, "seed", 1)[0]);
    ds.trials_total = parse_int(r, keyed_fields(r, "trials_total", 1)[0]);
    ds.heralds = parse_int(r, keyed_fields(r, "heralds", 1)[0]);
    int64_t n = parse_int(r, keyed_fields(r, "records", 1)[0]);
    if (n != ds.heralds) {
        r.fail("record count " + std::to_string(n) + " differs from herald count " + std::to_string(ds.heralds));
    }
    if (ds.trials_total < ds.heralds || ds.heralds < 0) {
        r.fail("herald count exceeds trial count");
    }
    ds.records.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; i++) {
        std::string line = r.require("a quadrature record");
        std::istringstream ss(line);
        std::string t, x, extra;
        if (!(ss >> t >> x) || (ss >> extra)) {
            r.fail("expected '<theta> <x>' record");
        }
        ds.records.push_back({parse_double(r, t), parse_double(r, x)});
    }
    auto tail = r.require("'end'");
    if (tail != "end") {
        r.fail("expected 'end', found '" + tail + "'");
    }
    return ds;
}

void fsfqpt::write_dataset_file(const std::filesystem::path &path, const QuadratureDataset &ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_dataset(out, ds);
}

QuadratureDataset fsfqpt::read_dataset_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open dataset file " + path.string());
    }
    return read_dataset(in);
}

void fsfqpt::write_manifest(std::ostream &out, const Manifest &m) {
    out << "# fsfqpt run manifest\n";
    out << "version 1\n";
    out << "tensor_file " << m.tensor_file << "\n";
    out << "tensor_sha256 " << m.tensor_sha256 << "\n";
    out << "seed " << m.plan.seed << "\n";
    out << "samples_per_probe " << m.plan.samples_per_probe << "\n";
    out << "phase_grid " << m.plan.phase_grid << "\n";
    out << "probes " << m.probes.size() << "\n";
    for (const auto &p : m.probes) {
        out << "probe index=" << p.index << " alpha_re=" << exact(p.alpha.real()) << " alpha_im=" << exact(p.alpha.imag())
            << " seed=" << p.seed << " file=" << (p.file.empty() ? "-" : p.file)
            << " sha256=" << (p.sha256.empty() ? "-" : p.sha256) << " trials=" << p.trials_total
            << " heralds=" << p.heralds << " success_measured=" << exact(p.success_measured)
            << " success_model=" << exact(p.success_model) << " status=" << p.status
            << " reason=" << (p.reason.empty() ? "-" : p.reason) << "\n";
    }
    out << "end\n";
}

Manifest fsfqpt::read_manifest(std::istream &in) {
    LineReader r(in);
    Manifest m;
    if (parse_int(r, keyed_fields(r, "version", 1)[0]) != 1) {
        r.fail("unsupported manifest version");
    }
    m.tensor_file = keyed_fields(r, "tensor_file", 1)[0];
    m.tensor_sha256 = keyed_fields(r, "tensor_sha256", 1)[0];
    m.plan.seed = parse_uint(r, keyed_fields(r, "seed", 1)[0]);
    m.plan.samples_per_probe = parse_int(r, keyed_fields(r, "samples_per_probe", 1)[0]);
    m.plan.phase_grid = static_cast<int>(parse_int(r, keyed_fields(r, "phase_grid", 1)[0]));
    int64_t n = parse_int(r, keyed_fields(r, "probes", 1)[0]);
    auto dash = [](const std::string &s) {
        return s == "-" ? std::string() : s;
    };
    for (int64_t i = 0; i < n; i++) {
        std::istringstream ss(r.require("a probe line"));
        std::string head;
        ss >> head;
        if (head != "probe") {
            r.fail("expected 'probe', found '" + head + "'");
        }
        std::map<std::string, std::string> kv;
        std::string tok;
        while (ss >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) {
                r.fail("malformed probe field '" + tok + "'");
            }
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        auto get = [&](const char *key) -> const std::string & {
            auto it = kv.find(key);
            if (it == kv.end()) {
                r.fail(std::string("probe line lacks '") + key + "'");
            }
            return it->second;
        };
        ManifestEntry e;
        e.index = static_cast<size_t>(parse_int(r, get("index")));
        e.alpha = cdouble(parse_double(r, get("alpha_re")), parse_double(r, get("alpha_im")));
        e.seed = parse_uint(r, get("seed"));
        e.file = dash(get("file"));
        e.sha256 = dash(get("sha256"));
        e.trials_total = parse_int(r, get("trials"));
        e.heralds = parse_int(r, get("heralds"));
        e.success_measured = parse_double(r, get("success_measured"));
        e.success_model = parse_double(r, get("success_model"));
        e.status = get("status");
        e.reason = dash(get("reason"));
        if (e.status != "ok" && e.status != "skipped") {
            r.fail("unknown probe status '" + e.status + "'");
        }
        m.plan.amplitudes.push_back(e.alpha);
        m.probes.push_back(std::move(e));
    }
    auto tail = r.require("'end'");
    if (tail != "end") {
        r.fail("expected 'end', found '" + tail + "'");
    }
    return m;
}
