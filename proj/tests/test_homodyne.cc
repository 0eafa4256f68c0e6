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

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "fsfqpt/fsf_model.h"

using namespace fsfqpt;

namespace {

const HilbertSpec kSpec(6);

ProcessTensor reference_model() {
    return compose_fsf_tensor(FsfParams::reference_defaults(), herald_povm(0.45, 7, HeraldKind::Click));
}

double window_integral(const DensityMatrix &rho, double theta, double lo, double hi) {
    auto f = [&](double x) { return quadrature_pdf(rho, theta, x); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-12);
}

QuadratureDataset small_dataset() {
    QuadratureDataset ds;
    ds.probe = cdouble(0.35, -0.125);
    ds.seed = 77;
    ds.trials_total = 10;
    ds.heralds = 3;
    ds.records = {{0.1, -1.5}, {1.2, 0.0}, {3.0, 4.99999}};
    return ds;
}

}  // namespace

TEST(ProbePlan, Defaults) {
    auto p = ProbePlan::reference_defaults();
    ASSERT_EQ(p.amplitudes.size(), 20u);
    EXPECT_DOUBLE_EQ(p.amplitudes.front().real(), 0.1);
    EXPECT_DOUBLE_EQ(p.amplitudes.back().real(), 1.5);
    EXPECT_EQ(p.samples_per_probe, 20000);
    auto ph = p.phases();
    ASSERT_EQ(ph.size(), 30u);
    EXPECT_NEAR(ph[0], std::numbers::pi / 60, 1e-15);
    EXPECT_NO_THROW(p.validate(kSpec));
}

TEST(ProbePlan, Validation) {
    auto p = ProbePlan::reference_defaults();
    p.samples_per_probe = 999;
    EXPECT_THROW(p.validate(kSpec), std::invalid_argument);
    p = ProbePlan::reference_defaults();
    p.amplitudes.push_back(1.9);
    EXPECT_THROW(p.validate(kSpec), std::invalid_argument);
    p.amplitudes.clear();
    EXPECT_THROW(p.validate(kSpec), std::invalid_argument);
}

TEST(ProbePlan, SeedsAreDistinctAndStable) {
    auto p = ProbePlan::reference_defaults();
    std::set<uint64_t> seeds;
    for (size_t i = 0; i < 20; i++) {
        seeds.insert(p.probe_seed(i));
        EXPECT_EQ(p.probe_seed(i), ProbePlan::reference_defaults().probe_seed(i));
    }
    EXPECT_EQ(seeds.size(), 20u);
    auto q = p;
    q.seed = 2;
    EXPECT_NE(q.probe_seed(0), p.probe_seed(0));
}

TEST(BinGrid, Edges) {
    BinGrid g;
    EXPECT_EQ(g.quad_bin(-5.0), 0);
    EXPECT_EQ(g.quad_bin(5.0), 600);
    EXPECT_FALSE(g.quad_bin(5.0000001).has_value());
    EXPECT_FALSE(g.quad_bin(-5.0000001).has_value());
    EXPECT_EQ(g.quad_bin(0.0), 300);
    EXPECT_EQ(g.quad_bin(g.quad_edge(17)), 17);
    EXPECT_EQ(g.phase_bin(0.0), 0);
    EXPECT_EQ(g.phase_bin(std::numbers::pi), 29);
    EXPECT_EQ(g.phase_bin(std::numbers::pi + 0.01), 0);
    for (int b = 0; b < 30; b++) {
        EXPECT_EQ(g.phase_bin(g.phase_center(b)), b);
    }
    EXPECT_NEAR(g.quad_center(300), 0.0, 1e-12);
}

TEST(Sampler, CdfMatchesIntegratedDensity) {
    auto rho = DensityMatrix::from_pure(coherent_state(0.9, kSpec).coeffs);
    QuadratureSampler s(rho, 0.7);
    double mass = window_integral(rho, 0.7, -5, 5);
    for (double x : {-2.0, -0.3, 0.5, 1.9, 3.1}) {
        EXPECT_NEAR(s.cdf(x), window_integral(rho, 0.7, -5, x) / mass, 2e-5) << x;
    }
    EXPECT_NEAR(s.cdf(-5), 0.0, 1e-15);
    EXPECT_NEAR(s.cdf(5), 1.0, 1e-15);
}

TEST(Sampler, ChiSquareGoodnessOfFit) {
    CMatrix mix = CMatrix::Zero(7, 7);
    mix(0, 0) = 0.3;
    mix(2, 2) = 0.5;
    mix(1, 1) = 0.2;
    mix(0, 1) = mix(1, 0) = 0.2;
    DensityMatrix rho(mix);
    double theta = 1.1;
    QuadratureSampler s(rho, theta);
    std::mt19937_64 rng(123);
    const int n = 40000;
    const int bins = 40;
    std::vector<int> counts(bins, 0);
    for (int i = 0; i < n; i++) {
        double x = s.sample(rng);
        ASSERT_GE(x, -5.0);
        ASSERT_LE(x, 5.0);
        int b = std::min(bins - 1, static_cast<int>((x + 5) / 10 * bins));
        counts[static_cast<size_t>(b)]++;
    }
    double mass = window_integral(rho, theta, -5, 5);
    double chi2 = 0;
    int dof = -1;
    double pooled_expect = 0;
    int pooled_count = 0;
    for (int b = 0; b < bins; b++) {
        double lo = -5 + 10.0 * b / bins;
        double expect = n * window_integral(rho, theta, lo, lo + 10.0 / bins) / mass;
        if (expect < 5) {
            pooled_expect += expect;
            pooled_count += counts[static_cast<size_t>(b)];
            continue;
        }
        chi2 += std::pow(counts[static_cast<size_t>(b)] - expect, 2) / expect;
        dof++;
    }
    if (pooled_expect > 0) {
        chi2 += std::pow(pooled_count - pooled_expect, 2) / pooled_expect;
        dof++;
    }
    boost::math::chi_squared dist(dof);
    double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    EXPECT_GT(p_value, 1e-3) << "chi2 " << chi2 << " dof " << dof;
}

TEST(Simulation, HeraldStatistics) {
    auto e = reference_model();
    auto plan = ProbePlan::reference_defaults();
    plan.samples_per_probe = 5000;
    std::mt19937_64 rng(4);
    auto sim = simulate_probe(e, 1.0, plan, rng);
    ASSERT_TRUE(sim.dataset.has_value());
    const auto &ds = *sim.dataset;
    double p = sim.success_model;
    EXPECT_NEAR(p, success_probability(e, DensityMatrix::from_pure(coherent_state(1.0, kSpec).coeffs)), 1e-15);
    EXPECT_EQ(ds.trials_total, static_cast<int64_t>(std::ceil(5000 / p)));
    EXPECT_EQ(static_cast<int64_t>(ds.records.size()), ds.heralds);
    double sigma = std::sqrt(ds.trials_total * p * (1 - p));
    EXPECT_LT(std::abs(ds.heralds - ds.trials_total * p), 5 * sigma);
    BinGrid grid;
    for (const auto &r : ds.records) {
        EXPECT_LE(std::abs(r.x), 5.0);
        EXPECT_GE(r.theta, 0.0);
        EXPECT_LT(r.theta, std::numbers::pi);
        EXPECT_NEAR(r.theta, grid.phase_center(grid.phase_bin(r.theta)), 1e-8);
    }
}

TEST(Simulation, DeterministicPerSeed) {
    auto e = reference_model();
    auto plan = ProbePlan::linear(0.2, 1.2, 3, 2000, 99);
    auto a = simulate_plan(e, plan);
    auto b = simulate_plan(e, plan);
    ASSERT_EQ(a.size(), 3u);
    for (size_t i = 0; i < a.size(); i++) {
        ASSERT_TRUE(a[i].dataset && b[i].dataset);
        EXPECT_TRUE(*a[i].dataset == *b[i].dataset);
        EXPECT_EQ(a[i].dataset->seed, plan.probe_seed(i));
    }
    plan.seed = 100;
    auto c = simulate_plan(e, plan);
    EXPECT_FALSE(*a[0].dataset == *c[0].dataset);
}

TEST(Simulation, HeraldStarvation) {
    ProcessTensor dead(kSpec, "dead");
    auto plan = ProbePlan::reference_defaults();
    std::mt19937_64 rng(1);
    auto sim = simulate_probe(dead, 0.5, plan, rng);
    EXPECT_FALSE(sim.dataset.has_value());
    EXPECT_EQ(sim.diagnostic, "herald_starvation");
}

TEST(Binning, CountsEveryRecord) {
    QuadratureDataset ds = small_dataset();
    ds.records.push_back({0.2, 7.0});
    ds.records.push_back({0.2, -6.0});
    ds.heralds = 5;
    auto h = bin_dataset(ds);
    EXPECT_EQ(h.total(), 5);
    EXPECT_EQ(h.overflow, 1);
    EXPECT_EQ(h.underflow, 1);
    BinGrid g;
    EXPECT_EQ(h.count(g.phase_bin(0.1), *g.quad_bin(-1.5)), 1);
}

TEST(DatasetFormat, RoundTrip) {
    auto ds = small_dataset();
    std::stringstream ss;
    write_dataset(ss, ds);
    auto back = read_dataset(ss);
    EXPECT_TRUE(back == ds);
    EXPECT_EQ(round_to_file_precision(0.123456789123), 0.12345678900000000);
}

TEST(DatasetFormat, RejectsMalformedInput) {
    std::stringstream full;
    write_dataset(full, small_dataset());
    std::string text = full.str();

    std::stringstream truncated(text.substr(0, text.rfind("end")));
    EXPECT_THROW(read_dataset(truncated), ParseError);

    std::string bad = text;
    bad.replace(bad.find("records 3"), 9, "records 4");
    std::stringstream miscount(bad);
    try {
        read_dataset(miscount);
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
    }

    std::string garbage = text;
    garbage.replace(garbage.find("-1.5"), 4, "abc!");
    std::stringstream bad_number(garbage);
    EXPECT_THROW(read_dataset(bad_number), ParseError);

    std::stringstream empty("");
    EXPECT_THROW(read_dataset(empty), ParseError);
}

TEST(ManifestFormat, RoundTrip) {
    Manifest m;
    m.tensor_file = "/tmp/model.tensor.json";
    m.tensor_sha256 = std::string(64, 'a');
    m.plan = ProbePlan::reference_defaults();
    ManifestEntry ok;
    ok.index = 0;
    ok.alpha = 0.1;
    ok.seed = 12345678901234ull;
    ok.file = "probe_00.dat";
    ok.sha256 = std::string(64, 'b');
    ok.trials_total = 150000;
    ok.heralds = 20011;
    ok.success_measured = 20011.0 / 150000;
    ok.success_model = 0.1333333333333333;
    ManifestEntry skipped;
    skipped.index = 1;
    skipped.alpha = 0.2;
    skipped.status = "skipped";
    skipped.reason = "herald_starvation";
    m.probes = {ok, skipped};

    std::stringstream ss;
    write_manifest(ss, m);
    auto back = read_manifest(ss);
    EXPECT_EQ(back.tensor_file, m.tensor_file);
    EXPECT_EQ(back.tensor_sha256, m.tensor_sha256);
    EXPECT_EQ(back.plan.seed, m.plan.seed);
    ASSERT_EQ(back.probes.size(), 2u);
    EXPECT_TRUE(back.probes[0] == ok);
    EXPECT_TRUE(back.probes[1] == skipped);
}
