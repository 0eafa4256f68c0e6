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

#include <sstream>

#include <gtest/gtest.h>

using namespace fsfqpt;

namespace {

RunConfig parse(const std::string &text) {
    std::istringstream in(text);
    return read_config(in);
}

}  // namespace

TEST(RunConfig, DefaultsReproduceReferenceModel) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    auto p = cfg.params();
    auto ref = FsfParams::reference_defaults();
    EXPECT_EQ(p.reflectivity(), ref.reflectivity());
    EXPECT_EQ(p.eta_h(), ref.eta_h());
    EXPECT_EQ(p.multimode(), ref.multimode());
    EXPECT_EQ(p.eta_det(), ref.eta_det());
    EXPECT_EQ(cfg.povm().thetas, herald_povm(0.45, 7, HeraldKind::Click).thetas);
    EXPECT_EQ(cfg.plan().amplitudes, ProbePlan::reference_defaults().amplitudes);
    EXPECT_EQ(cfg.recon().max_iters, 150);
    EXPECT_EQ(cfg.recon().mu, 0.5);
}

TEST(RunConfig, RoundTripIsLossless) {
    RunConfig cfg;
    cfg.reflectivity = 0.1 + 0.2;
    cfg.eta_h = 1.0 / 3.0;
    cfg.herald = HeraldKind::IdealClick;
    cfg.ll_tol = 3.7e-13;
    cfg.grid.x_min = -4.75;
    cfg.seed = 18446744073709551615ull;
    cfg.output_dir = "runs/a b";
    std::stringstream ss;
    write_config(ss, cfg);
    EXPECT_EQ(read_config(ss), cfg);
}

TEST(RunConfig, PartialFilesKeepDefaults) {
    auto cfg = parse("# comment\n\n  mu = 0.25   # trailing\nseed=9\n");
    EXPECT_EQ(cfg.mu, 0.25);
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.reflectivity, 0.5);
}

TEST(RunConfig, RejectsMalformedFiles) {
    EXPECT_THROW(parse("reflectivity 0.5\n"), ConfigError);
    EXPECT_THROW(parse("colour = blue\n"), ConfigError);
    EXPECT_THROW(parse("mu = 0.5\nmu = 0.4\n"), ConfigError);
    EXPECT_THROW(parse("mu = half\n"), ConfigError);
    EXPECT_THROW(parse("probes = 2.5\n"), ConfigError);
    EXPECT_THROW(parse("herald = photodiode\n"), ConfigError);
    try {
        parse("seed = 1\nbogus = 2\n");
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(RunConfig, ValidationNamesOffendingKey) {
    RunConfig cfg;
    cfg.eta_apd = 1.2;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.mu = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.alpha_max = 2.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.samples_per_probe = 10;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.max_iters = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunConfig, IdealFilter) {
    RunConfig cfg;
    cfg.make_ideal();
    EXPECT_EQ(cfg.eta_h, 1.0);
    EXPECT_EQ(cfg.multimode, 1.0);
    EXPECT_EQ(cfg.herald, HeraldKind::NumberResolvingOne);
}

TEST(RunConfig, SchemaListsEveryKey) {
    std::stringstream ss;
    write_config(ss, RunConfig{});
    std::string schema = config_schema();
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::string key = line.substr(0, line.find(' '));
        EXPECT_NE(schema.find("  " + key + " "), std::string::npos) << key;
    }
}
