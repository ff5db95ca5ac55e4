#pragma once

#include <string>
#include <vector>

#include "vascufold/core/io.hpp"

namespace vf {

// Every tunable of the pipeline with its documented default.
json default_experiment_config();

// Load + validate a config file: unknown keys are rejected with the full
// dotted path; values overlay the defaults. `--set` overrides use dotted
// paths (phantom.depth=3); the seed override wins over the file, and the
// VASCUFOLD_SEED environment variable wins over both.
json load_experiment_config(const std::string& path,
                            const std::vector<std::string>& set_overrides,
                            const int64_t* seed_override, const std::string* out_dir_override);

// resolved-config echo written into every run directory
void write_resolved_config(const json& cfg, const std::string& out_dir);

}  // namespace vf
