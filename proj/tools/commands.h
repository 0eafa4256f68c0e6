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

#ifndef FSFQPT_TOOLS_COMMANDS_H
#define FSFQPT_TOOLS_COMMANDS_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "fsfqpt/run_config.h"

namespace fsfqpt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Missing, corrupt or inconsistent input files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flags shared by all verbs; unset optionals leave the config value alone.
struct Options {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> tensor;
    std::optional<std::string> model;
    std::optional<std::string> data;
    std::optional<int> iters;
    std::optional<double> mu;
    std::optional<int> nmax;
    bool ideal = false;
};

/// Config file (or defaults) with the command-line overrides applied, validated.
RunConfig load_config(const Options &opt);

// Each verb writes its files under the output directory and a short report to `out`.
void cmd_model(const Options &opt, std::ostream &out);
void cmd_simulate(const Options &opt, std::ostream &out);
void cmd_reconstruct(const Options &opt, std::ostream &out);
void cmd_analyze(const Options &opt, std::ostream &out);
void cmd_scan(const Options &opt, std::ostream &out);

}  // namespace fsfqpt::cli

#endif
