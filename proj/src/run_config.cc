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

#include "fsfqpt/run_config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

namespace fsfqpt {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string &text, const std::string &key) {
    T v{};
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
}

struct Key {
    std::string name;
    std::string help;
    std::function<std::string(const RunConfig &)> get;
    std::function<void(RunConfig &, const std::string &)> set;
};

template <typename T>
Key number_key(std::string name, std::string help, T RunConfig::*field) {
    Key k;
    k.name = name;
    k.help = std::move(help);
    k.get = [field](const RunConfig &c) {
        if constexpr (std::is_floating_point_v<T>) {
            return fmt_double(c.*field);
        } else {
            return std::to_string(c.*field);
        }
    };
    k.set = [field, name](RunConfig &c, const std::string &v) { c.*field = parse_number<T>(v, name); };
    return k;
}

template <typename T>
Key grid_key(std::string name, std::string help, T BinGrid::*field) {
    Key k;
    k.name = name;
    k.help = std::move(help);
    k.get = [field](const RunConfig &c) {
        if constexpr (std::is_floating_point_v<T>) {
            return fmt_double(c.grid.*field);
        } else {
            return std::to_string(c.grid.*field);
        }
    };
    k.set = [field, name](RunConfig &c, const std::string &v) { c.grid.*field = parse_number<T>(v, name); };
    return k;
}

const std::vector<Key> &keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> t;
        t.push_back(number_key("reflectivity", "beam-splitter reflectivity R, in [0, 1]", &RunConfig::reflectivity));
        t.push_back(number_key("eta_h", "ancilla heralding efficiency, in [0, 1]", &RunConfig::eta_h));
        t.push_back(number_key("multimode", "multimode parameter M, in [0, 1]", &RunConfig::multimode));
        t.push_back(number_key("eta_det", "detection efficiency of the false-herald branch, in [0, 1]", &RunConfig::eta_det));
        t.push_back(number_key("eta_apd", "herald detector efficiency, in [0, 1]", &RunConfig::eta_apd));
        t.push_back(Key{
            "herald",
            "herald detector: click, number-resolving-1 or ideal-click",
            [](const RunConfig &c) { return std::string(herald_kind_name(c.herald)); },
            [](RunConfig &c, const std::string &v) {
                try {
                    c.herald = parse_herald_kind(v);
                } catch (const std::invalid_argument &e) {
                    throw ConfigError(std::string("key 'herald': ") + e.what());
                }
            }});
        t.push_back(number_key("n_max", "Fock-space cutoff, at least 1", &RunConfig::n_max));
        t.push_back(number_key("probes", "number of coherent probes", &RunConfig::probes));
        t.push_back(number_key("alpha_min", "smallest probe amplitude", &RunConfig::alpha_min));
        t.push_back(number_key("alpha_max", "largest probe amplitude, at most 2", &RunConfig::alpha_max));
        t.push_back(number_key("samples_per_probe", "heralded samples per probe, at least 1000", &RunConfig::samples_per_probe));
        t.push_back(number_key("phase_grid", "local-oscillator phases used by the simulator", &RunConfig::phase_grid));
        t.push_back(number_key("mu", "dilution of the likelihood iteration, in (0, 1]", &RunConfig::mu));
        t.push_back(number_key("max_iters", "iteration cap of the reconstruction", &RunConfig::max_iters));
        t.push_back(number_key("ll_tol", "relative log-likelihood change that stops the iteration", &RunConfig::ll_tol));
        t.push_back(grid_key("phase_bins", "phase bins over [0, pi]", &BinGrid::phase_bins));
        t.push_back(grid_key("quad_bins", "quadrature bins over the window", &BinGrid::quad_bins));
        t.push_back(grid_key("x_min", "lower edge of the quadrature window", &BinGrid::x_min));
        t.push_back(grid_key("x_max", "upper edge of the quadrature window", &BinGrid::x_max));
        t.push_back(number_key("scan_points", "points per axis of the fidelity scans, at least 2", &RunConfig::scan_points));
        t.push_back(number_key("study_states", "random input states per cutoff in the state study", &RunConfig::study_states));
        t.push_back(number_key("seed", "master seed", &RunConfig::seed));
        t.push_back(Key{
            "output_dir",
            "directory receiving all outputs",
            [](const RunConfig &c) { return c.output_dir; },
            [](RunConfig &c, const std::string &v) {
                if (v.empty()) {
                    throw ConfigError("key 'output_dir': empty path");
                }
                c.output_dir = v;
            }});
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::make_ideal() {
    eta_h = 1;
    multimode = 1;
    herald = HeraldKind::NumberResolvingOne;
}

void RunConfig::validate() const {
    auto unit = [](const char *key, double v) {
        if (!(v >= 0 && v <= 1)) {
            throw ConfigError(std::string("key '") + key + "' must lie in [0, 1], got " + fmt_double(v));
        }
    };
    unit("reflectivity", reflectivity);
    unit("eta_h", eta_h);
    unit("multimode", multimode);
    unit("eta_det", eta_det);
    unit("eta_apd", eta_apd);
    if (n_max < 1) {
        throw ConfigError("key 'n_max' must be at least 1");
    }
    if (probes < 1) {
        throw ConfigError("key 'probes' must be at least 1");
    }
    if (!(alpha_min >= 0) || !(alpha_max >= alpha_min) || alpha_max > 2) {
        throw ConfigError("probe amplitudes need 0 <= alpha_min <= alpha_max <= 2");
    }
    if (samples_per_probe < 1000) {
        throw ConfigError("key 'samples_per_probe' must be at least 1000");
    }
    if (phase_grid < 1) {
        throw ConfigError("key 'phase_grid' must be at least 1");
    }
    if (max_iters < 1) {
        throw ConfigError("key 'max_iters' must be at least 1");
    }
    if (scan_points < 2) {
        throw ConfigError("key 'scan_points' must be at least 2");
    }
    if (study_states < 1) {
        throw ConfigError("key 'study_states' must be at least 1");
    }
    try {
        recon().validate();
        plan().validate(HilbertSpec(n_max));
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
}

FsfParams RunConfig::params() const {
    return FsfParams(reflectivity, eta_h, multimode, eta_det, HilbertSpec(n_max));
}

HeraldPovm RunConfig::povm() const {
    return herald_povm(eta_apd, n_max + 1, herald);
}

ProbePlan RunConfig::plan() const {
    ProbePlan p = ProbePlan::linear(alpha_min, alpha_max, probes, samples_per_probe, seed);
    p.phase_grid = phase_grid;
    return p;
}

ReconConfig RunConfig::recon() const {
    ReconConfig r;
    r.n_max = n_max;
    r.mu = mu;
    r.max_iters = max_iters;
    r.ll_tol = ll_tol;
    r.grid = grid;
    return r;
}

RunConfig read_config(std::istream &in) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        const auto &table = keys();
        auto it = std::find_if(table.begin(), table.end(), [&](const Key &k) { return k.name == key; });
        if (it == table.end()) {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        try {
            it->set(cfg, value);
        } catch (const ConfigError &e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig read_config_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return read_config(in);
}

void write_config(std::ostream &out, const RunConfig &cfg) {
    out << "# fsfqpt run configuration\n";
    for (const auto &k : keys()) {
        out << "# " << k.help << "\n" << k.name << " = " << k.get(cfg) << "\n";
    }
}

std::string config_schema() {
    RunConfig defaults;
    std::ostringstream os;
    os << "key-value configuration; '#' starts a comment, keys may appear in any order\n";
    for (const auto &k : keys()) {
        os << "  " << k.name << " (default " << k.get(defaults) << "): " << k.help << "\n";
    }
    return os.str();
}

}  // namespace fsfqpt
