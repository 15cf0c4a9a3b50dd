// Copyright 2026 The vbt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VBT_TOOLS_CLI_APP_HPP_
#define VBT_TOOLS_CLI_APP_HPP_

#include <string>

#include "vbt/run_config.hpp"

namespace vbt::cli {

// Commands throw ValidationError (exit 1) or ComputeError / std::exception
// (exit 2); returning means success (exit 0).

void cmd_extract(const std::string& manifest_path, const RunConfig& config,
                 const std::string& out_dir, int workers);

void cmd_screen(const std::string& pre_csv, const std::string& post_csv, double alpha,
                const std::string& out_dir);

void cmd_pretrain(const std::string& manifest_path, const RunConfig& config,
                  const std::string& out_dir);

void cmd_train(const std::string& manifest_path, const RunConfig& config,
               const std::string& out_dir);

void cmd_track(const std::string& manifest_path, const std::string& checkpoint_path,
               const RunConfig& config, const std::string& out_dir, bool bradley_terry);

void cmd_eval(const std::string& predictions_csv, const std::string& labels_csv,
              const std::string& out_dir);

void cmd_simulate(const RunConfig& config, const std::string& out_dir);

int run_cli(int argc, char** argv);

}  // namespace vbt::cli

#endif  // VBT_TOOLS_CLI_APP_HPP_
