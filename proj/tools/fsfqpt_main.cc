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

// fsfqpt: model, simulate, reconstruct and analyze Fock-state filtration.

#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "commands.h"
#include "fsfqpt/fock.h"
#include "fsfqpt/process_tensor.h"

using namespace fsfqpt;

namespace {

void add_common(CLI::App *sub, cli::Options &opt) {
    sub->add_option("--config", opt.config, "key-value run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--nmax", opt.nmax, "Fock-space cutoff");
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Fock-state filtration: process model, homodyne simulation and process tomography"};
    app.require_subcommand(0, 1);
    cli::Options opt;
    bool schema = false;
    app.add_flag("--config-schema", schema, "print the configuration keys and exit");

    auto *model = app.add_subcommand("model", "build the filter process tensor");
    add_common(model, opt);
    model->add_flag("--ideal", opt.ideal, "unit heralding efficiency, single mode, number-resolving herald");

    auto *simulate = app.add_subcommand("simulate", "simulate heralded homodyne data for every probe");
    add_common(simulate, opt);
    simulate->add_option("--tensor", opt.tensor, "process tensor to sample from");
    simulate->add_option("--data", opt.data, "dataset directory (default <out>/data)");

    auto *reconstruct = app.add_subcommand("reconstruct", "maximum-likelihood process reconstruction");
    add_common(reconstruct, opt);
    reconstruct->add_option("--data", opt.data, "dataset directory (default <out>/data)");
    reconstruct->add_option("--tensor", opt.tensor, "reference tensor for the fidelity report");
    reconstruct->add_option("--iters", opt.iters, "iteration cap");
    reconstruct->add_option("--mu", opt.mu, "dilution in (0, 1]");

    auto *analyze = app.add_subcommand("analyze", "compare a reconstruction with a model");
    add_common(analyze, opt);
    analyze->add_option("--tensor", opt.tensor, "reconstructed tensor (default <out>/reconstructed.tensor.json)");
    analyze->add_option("--model", opt.model, "model tensor (default <out>/model.tensor.json)");

    auto *scan = app.add_subcommand("scan", "fidelity surfaces over the model parameters");
    add_common(scan, opt);
    scan->add_option("--tensor", opt.tensor, "reconstructed tensor (default <out>/reconstructed.tensor.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfig;
    }
    if (schema) {
        std::cout << config_schema();
        return cli::kExitOk;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return cli::kExitConfig;
    }

    std::function<void(const cli::Options &, std::ostream &)> run;
    if (*model) {
        run = cli::cmd_model;
    } else if (*simulate) {
        run = cli::cmd_simulate;
    } else if (*reconstruct) {
        run = cli::cmd_reconstruct;
    } else if (*analyze) {
        run = cli::cmd_analyze;
    } else {
        run = cli::cmd_scan;
    }

    try {
        run(opt, std::cout);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const cli::DataError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cli::kExitData;
    } catch (const ParseError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cli::kExitData;
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::kExitNumerical;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cli::kExitData;
    }
    return cli::kExitOk;
}
