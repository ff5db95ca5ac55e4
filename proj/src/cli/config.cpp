#include "vascufold/cli/config.hpp"

#include <cstdlib>

#include "vascufold/core/errors.hpp"

namespace vf {

json default_experiment_config() {
    json j;
    j["seed"] = 0;
    j["output_dir"] = "runs/out";
    j["phantom"] = {
        {"region_mm", {1.28, 1.28, 1.28}},  // x, y, z
        {"depth", 2},
        {"branch_prob", 1.0},
        {"murray_k", 3.0},
        {"root_radius_um", 120.0},
        {"seg_len_min_mm", 0.28},
        {"seg_len_max_mm", 0.5},
        {"cone_half_angle_deg", 40.0},
        {"loops", 0},
        {"trees", 1},
        {"grid_dims_zyx", {16, 32, 32}},
        {"spacing_mm_zyx", {0.08, 0.04, 0.04}},
    };
    j["simulation"] = {
        {"slice_count", 4},
        {"slice_spacing_mm", 0.32},
        {"slice_offset_mm", 0.04},
        {"pixel_spacing_mm", 0.04},
        {"psf_sigma_px", 0.8},
        {"bubble_step_mm", 0.004},
        {"bubble_probability", 0.35},
        {"velocity_scale", 4000.0},
        {"channels",
         {"grayscale", "flow_density", "flow_direction", "flow_angle", "flow_velocity",
          "microbubble_track"}},
    };
    j["degradation"] = {
        {"gaussian_sigma", 0.0}, {"impulse_fraction", 0.0},   {"psf_sigma_px", 0.0},
        {"jitter_bound_px", 0.0}, {"jitter_spacing_px", 16.0},
    };
    j["preprocessing"] = {
        {"adaptive_median", true},
        {"max_kernel", 3},
        {"diffusion_iterations", 12},
        {"diffusion_kappa", 0.3},
        {"diffusion_lambda", 0.25},
        {"zscore", false},
        {"register_to_clean", true},  // needs the clean stack next to the degraded one
        {"augment_rotation_deg", 0.0},  // training-time augmentation ops
        {"augment_elastic_sigma_px", 0.0},
        {"augment_scale", 1.0},
        {"augment_noise_sigma", 0.0},
        {"lattice_spacing_px", 16.0},
        {"max_iterations", 150},
        {"levels", 3},
        {"bins", 32},
        {"smoothness_weight", 0.02},
    };
    j["model"] = {
        {"channels", {"grayscale", "flow_density", "flow_direction", "flow_angle"}},
        {"patch_dhw", {1, 4, 4}},
        {"embed_dim", 64},
        {"heads", 4},
        {"depth", 4},
        {"pyramid_strides", {4, 2, 1}},
        {"decoder_channels", {16, 8}},
    };
    j["training"] = {
        {"train_cases", 64}, {"val_cases", 16},     {"case_seed_base", 9000},
        {"epochs", 30},      {"lr", 0.05},          {"momentum", 0.9},
        {"schedule", "cosine"}, {"warmup_frac", 0.05}, {"clip_norm", 1.0},
    };
    j["quantification"] = {
        {"source", "recon"},  // recon | truth
        {"viscosity_pa_s", 0.0035},
        {"spur_factor", 2.0},
        {"smooth_passes", 2},
        {"closing_radius_voxels", 1.5},
    };
    j["evaluation"] = {
        {"threshold", 0.5},
        {"baseline_threshold", 0.5},
    };
    return j;
}

namespace {

void check_unknown_keys(const json& user, const json& defaults, const std::string& prefix) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!defaults.contains(it.key()))
            throw ConfigError("config: unknown key '" + path + "'");
        if (it.value().is_object() && defaults.at(it.key()).is_object())
            check_unknown_keys(it.value(), defaults.at(it.key()), path);
    }
}

void merge_into(json& base, const json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

void apply_set(json& cfg, const std::string& expr) {
    auto eq = expr.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + expr + "'");
    std::string path = expr.substr(0, eq);
    std::string value = expr.substr(eq + 1);

    json* node = &cfg;
    size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        auto dot = path.find('.', start);
        parts.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]))
            throw ConfigError("config: unknown key '" + path + "'");
        node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back()))
        throw ConfigError("config: unknown key '" + path + "'");
    // parse as JSON when possible so numbers/bools/arrays work; else string
    json parsed = json::parse(value, nullptr, false);
    (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
}

}  // namespace

json load_experiment_config(const std::string& path,
                            const std::vector<std::string>& set_overrides,
                            const int64_t* seed_override, const std::string* out_dir_override) {
    json cfg = default_experiment_config();
    if (!path.empty()) {
        json user = read_json_file(path);
        check_unknown_keys(user, cfg, "");
        merge_into(cfg, user);
    }
    for (const auto& s : set_overrides) apply_set(cfg, s);
    if (seed_override) cfg["seed"] = *seed_override;
    if (const char* env = std::getenv("VASCUFOLD_SEED")) cfg["seed"] = std::atoll(env);
    if (out_dir_override) cfg["output_dir"] = *out_dir_override;
    return cfg;
}

void write_resolved_config(const json& cfg, const std::string& out_dir) {
    ensure_directory(out_dir);
    write_json_file(out_dir + "/resolved_config.json", cfg);
}

}  // namespace vf
