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

#ifndef FSFQPT_RUN_CONFIG_H
#define FSFQPT_RUN_CONFIG_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fsfqpt/fsf_model.h"
#include "fsfqpt/homodyne.h"
#include "fsfqpt/tomography.h"

namespace fsfqpt {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a pipeline run depends on. Defaults reproduce the reference experiment.
///
/// File form: one `key = value` per line, `#` starts a comment. See config_schema().
struct RunConfig {
    // Filter model.
    double reflectivity = 0.5;
    double eta_h = 0.45;
    double multimode = 0.73;
    double eta_det = 0.45;
    double eta_apd = 0.45;
    HeraldKind herald = HeraldKind::Click;
    int n_max = 6;

    // Acquisition.
    int probes = 20;
    double alpha_min = 0.1;
    double alpha_max = 1.5;
    int64_t samples_per_probe = 20000;
    int phase_grid = 30;

    // Reconstruction.
    double mu = 0.5;
    int max_iters = 150;
    double ll_tol = 1e-12;
    BinGrid grid;

    // Analysis.
    int scan_points = 21;
    int64_t study_states = 10000;

    uint64_t seed = 1;
    std::string output_dir = "fsfqpt-out";

    /// Unit heralding efficiency, single-mode ancilla and a number-resolving herald.
    void make_ideal();

    /// Throws ConfigError naming the offending key.
    void validate() const;

    FsfParams params() const;
    HeraldPovm povm() const;
    ProbePlan plan() const;
    ReconConfig recon() const;

    bool operator==(const RunConfig &other) const = default;
};

/// Parses the key-value form; unknown keys, duplicates and malformed values throw ConfigError
/// with the line number. Keys not present keep their defaults.
RunConfig read_config(std::istream &in);
RunConfig read_config_file(const std::filesystem::path &path);
/// Writes every key with enough digits to read back the identical configuration.
void write_config(std::ostream &out, const RunConfig &cfg);

/// Human-readable description of every key, its default and its range.
std::string config_schema();

}  // namespace fsfqpt

#endif
