#pragma once

#include <string>
#include <vector>

#include "vascufold/core/volume.hpp"
#include "vascufold/model/network.hpp"

namespace vf {

struct TrainSample {
    std::vector<Tensor> patches;  // per modality, from patch_matrices
    Tensor target;                // flat [out_d*out_h*out_w, 1], binary
};

struct TrainConfig {
    int epochs = 60;
    double lr = 0.05;
    double momentum = 0.9;
    std::string schedule = "cosine";  // or "constant"
    double warmup_frac = 0.05;
    double clip_norm = 1.0;           // global L2 gradient clip; 0 disables
    uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_dice = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    ModelParams best_params;   // highest validation Dice (final params if no val set)
    double best_val_dice = 0.0;
    std::vector<EpochStats> history;
};

// Plain SGD with momentum, batch size 1, seeded shuffling. Aborts with a
// diagnostic naming the step if the loss turns non-finite.
TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const ModelConfig& cfg,
                  const TrainConfig& tcfg, ModelParams initial);

double sample_loss(const TrainSample& s, const ModelConfig& cfg, const ModelParams& params);

// forward + threshold; wall time of the forward reported through *seconds
MaskVolume reconstruct(const SliceStack& stack, const ModelParams& params,
                       const ModelConfig& cfg, const std::array<double, 3>& spacing_mm,
                       double threshold = 0.5, double* seconds = nullptr);

double dice_binary(const MaskVolume& a, const MaskVolume& b);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace vf
