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

#ifndef FSFQPT_HOMODYNE_H
#define FSFQPT_HOMODYNE_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fsfqpt/fock.h"
#include "fsfqpt/process_tensor.h"

namespace fsfqpt {

/// Number of points of the inverse-CDF grid over the quadrature window.
inline constexpr int kSamplerGridPoints = 2401;
/// Heralding probabilities below this starve the probe and it is skipped.
inline constexpr double kMinSuccessProbability = 1e-6;

struct ProbePlan {
    std::vector<cdouble> amplitudes;
    /// Heralded samples requested per probe (at least 1000).
    int64_t samples_per_probe = 20000;
    /// Number of LO phases, placed at (i + 1/2) pi / phase_grid.
    int phase_grid = 30;
    uint64_t seed = 1;

    /// n_probes real amplitudes evenly spaced over [lo, hi].
    static ProbePlan linear(double lo, double hi, int n_probes, int64_t samples_per_probe, uint64_t seed);
    /// 20 probes, |alpha| from 0.1 to 1.5, 2e4 heralds each.
    static ProbePlan reference_defaults();

    /// Checks the plan invariants, including the coherent-state truncation gate.
    void validate(const HilbertSpec &spec) const;
    std::vector<double> phases() const;
    /// 64-bit seed of probe `index`, derived from (seed, index) through std::seed_seq.
    uint64_t probe_seed(size_t index) const;
    std::mt19937_64 probe_rng(size_t index) const {
        return std::mt19937_64(probe_seed(index));
    }
};

struct QuadratureDataset {
    cdouble probe;
    uint64_t seed = 0;
    int64_t trials_total = 0;
    int64_t heralds = 0;
    std::vector<QuadraturePoint> records;

    double success_measured() const {
        return trials_total > 0 ? static_cast<double>(heralds) / static_cast<double>(trials_total) : 0;
    }

    bool operator==(const QuadratureDataset &other) const = default;
};

/// Fixed acquisition binning: 30 phase bins over [0, pi] and 601 quadrature bins over [-5, 5].
struct BinGrid {
    int phase_bins = 30;
    int quad_bins = 601;
    double x_min = -kQuadratureWindow;
    double x_max = kQuadratureWindow;

    double phase_width() const;
    double quad_width() const;
    double phase_center(int bin) const;
    double quad_edge(int edge) const;
    double quad_center(int bin) const;
    /// Half-open bins with the last one closed; returns nullopt outside [x_min, x_max].
    std::optional<int> quad_bin(double x) const;
    /// Phases are folded into [0, pi) first; theta = pi lands in the last bin.
    int phase_bin(double theta) const;

    bool operator==(const BinGrid &other) const = default;
};

struct BinnedHistogram {
    BinGrid grid;
    /// counts[phase_bin * quad_bins + quad_bin].
    std::vector<int64_t> counts;
    int64_t underflow = 0;
    int64_t overflow = 0;

    int64_t count(int phase_bin, int quad_bin) const {
        return counts[static_cast<size_t>(phase_bin) * static_cast<size_t>(grid.quad_bins) +
                      static_cast<size_t>(quad_bin)];
    }
    int64_t total() const;
};

/// Inverse-CDF sampler of the quadrature marginal of a fixed state at a fixed phase.
/// The density is tabulated on kSamplerGridPoints points over the window, integrated by
/// the trapezoid rule and inverted by linear interpolation; mass outside the window is
/// renormalized away.
class QuadratureSampler {
   public:
    QuadratureSampler(const DensityMatrix &rho, double theta);
    double sample(std::mt19937_64 &rng) const;
    /// Value of the tabulated, window-renormalized CDF at x.
    double cdf(double x) const;

   private:
    std::vector<double> xs_;
    std::vector<double> cdf_;
};

/// Outcome of simulating one probe; `dataset` is empty when the herald starved.
struct ProbeSimulation {
    std::optional<QuadratureDataset> dataset;
    double success_model = 0;
    std::string diagnostic;
};

/// Heralded homodyne acquisition for probe |alpha>: the herald fires with probability
/// p = Tr E(|alpha><alpha|) out of ceil(samples_per_probe / p) trials, and each herald yields
/// (theta, x) with theta uniform on the plan's phase grid.
ProbeSimulation simulate_probe(const ProcessTensor &e, cdouble alpha, const ProbePlan &plan, std::mt19937_64 &rng);

/// Runs every probe of the plan, each on its own stream; datasets carry their probe seed.
std::vector<ProbeSimulation> simulate_plan(const ProcessTensor &e, const ProbePlan &plan);

BinnedHistogram bin_dataset(const QuadratureDataset &ds, const BinGrid &grid = {});

/// Rounds to the 9 significant digits used by the dataset format.
double round_to_file_precision(double v);

void write_dataset(std::ostream &out, const QuadratureDataset &ds);
/// Throws ParseError (carrying the line number) on malformed or truncated input.
QuadratureDataset read_dataset(std::istream &in);
void write_dataset_file(const std::filesystem::path &path, const QuadratureDataset &ds);
QuadratureDataset read_dataset_file(const std::filesystem::path &path);

/// One line of a run manifest.
struct ManifestEntry {
    size_t index = 0;
    cdouble alpha;
    uint64_t seed = 0;
    /// Empty for skipped probes.
    std::string file;
    std::string sha256;
    int64_t trials_total = 0;
    int64_t heralds = 0;
    double success_measured = 0;
    double success_model = 0;
    /// "ok" or "skipped".
    std::string status = "ok";
    std::string reason;

    bool operator==(const ManifestEntry &other) const = default;
};

struct Manifest {
    std::string tensor_file;
    std::string tensor_sha256;
    ProbePlan plan;
    std::vector<ManifestEntry> probes;
};

void write_manifest(std::ostream &out, const Manifest &m);
Manifest read_manifest(std::istream &in);

}  // namespace fsfqpt

#endif
