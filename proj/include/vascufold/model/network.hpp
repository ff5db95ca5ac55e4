#pragma once

#include <string>
#include <vector>

#include "vascufold/core/volume.hpp"
#include "vascufold/model/autodiff.hpp"
#include "vascufold/srus/slice_stack.hpp"

namespace vf {

struct ModelConfig {
    std::vector<Channel> channels = {Channel::Grayscale, Channel::FlowDensity,
                                     Channel::FlowDirection, Channel::FlowAngle};
    int64_t patch_d = 2, patch_h = 4, patch_w = 4;
    int64_t embed_dim = 64;
    int64_t heads = 4;
    int64_t depth = 4;
    std::vector<int> pyramid_strides = {4, 2, 1};  // tapped from the last blocks, coarse first
    int64_t decoder_c1 = 16, decoder_c2 = 8;       // channels after each upsample step
    int64_t in_slices = 8, in_rows = 32, in_cols = 32;
    int64_t out_d = 16, out_h = 32, out_w = 32;
    uint64_t seed = 0;

    void validate() const;  // shape divisibility, reachability of out dims
    int64_t tokens() const {
        return (in_slices / patch_d) * (in_rows / patch_h) * (in_cols / patch_w);
    }
    int64_t grid_d() const { return in_slices / patch_d; }
    int64_t grid_h() const { return in_rows / patch_h; }
    int64_t grid_w() const { return in_cols / patch_w; }
    int64_t patch_volume() const { return patch_d * patch_h * patch_w; }

    json to_json() const;
    static ModelConfig from_json(const json& j);
};

// Flat named-tensor store; layout fixed by the config.
struct ModelParams {
    std::vector<std::string> names;
    std::vector<Tensor> tensors;

    int64_t total_count() const;
    int find(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
};

// Allocation + seeded init (He/Xavier by role, zero biases, N(0,0.02) pos).
ModelParams init_params(const ModelConfig& cfg);

// Closed-form parameter count from the config alone; must equal the
// allocated total exactly.
int64_t expected_param_count(const ModelConfig& cfg);

// JSON manifest + raw little-endian f64 payload; bit-exact round trip.
void save_params(const ModelParams& p, const ModelConfig& cfg, const std::string& path_base);
ModelParams load_params(const std::string& path_base, ModelConfig* cfg_out = nullptr);

// Per-modality patch matrices [tokens x patch_volume] extracted from a stack.
std::vector<Tensor> patch_matrices(const SliceStack& stack, const ModelConfig& cfg);

// Tape-based forward; returns the logits node id ([out_d*out_h*out_w, 1]).
// `param_ids` receives the tape id of every parameter tensor, in order.
int build_forward(Tape& tape, const std::vector<Tensor>& patches, const ModelConfig& cfg,
                  const ModelParams& params, std::vector<int>* param_ids);

// soft-Dice(eps=1) + BCE, equal weights; returns the scalar loss node
int build_loss(Tape& tape, int logits, const Tensor& target_flat);

// convenience: forward -> probability volume (f32 storage)
FloatVolume forward_probabilities(const SliceStack& stack, const ModelParams& params,
                                  const ModelConfig& cfg,
                                  const std::array<double, 3>& spacing_mm);

}  // namespace vf
