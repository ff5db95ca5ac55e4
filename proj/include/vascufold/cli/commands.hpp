#pragma once

#include <string>

#include "vascufold/core/io.hpp"

namespace vf {

// Pipeline subcommands. Each reads its inputs from cfg["output_dir"], writes
// its artifacts there, and echoes the resolved config. All randomness
// derives from cfg["seed"] via named streams, so identical configs give
// byte-identical artifacts (timings live in separate files).
void cmd_phantom(const json& cfg);
void cmd_simulate(const json& cfg);
void cmd_preprocess(const json& cfg);
void cmd_train(const json& cfg);
void cmd_reconstruct(const json& cfg);
void cmd_quantify(const json& cfg);
void cmd_evaluate(const json& cfg);
void cmd_report(const std::string& run_dir);

}  // namespace vf
