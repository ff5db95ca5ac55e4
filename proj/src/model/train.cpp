#include "vascufold/model/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/kernels.hpp"
#include "vascufold/core/rng.hpp"

namespace vf {
namespace {

constexpr double kPi = 3.14159265358979323846;

double lr_at(const TrainConfig& t, int64_t step, int64_t total_steps) {
    double warmup = t.warmup_frac * static_cast<double>(total_steps);
    if (warmup >= 1.0 && step < warmup) return t.lr * (step + 1) / warmup;
    if (t.schedule == "constant") return t.lr;
    double progress = (step - warmup) / std::max(1.0, total_steps - warmup);
    return t.lr * (0.1 + 0.45 * (1.0 + std::cos(kPi * progress)));  // cosine to 10%
}

double val_dice_of(const std::vector<TrainSample>& val, const ModelConfig& cfg,
                   const ModelParams& params) {
    if (val.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : val) {
        Tape tape;
        int logits = build_forward(tape, s.patches, cfg, params, nullptr);
        const Tensor& z = tape.val(logits);
        double inter = 0, psum = 0, tsum = 0;
        for (int64_t i = 0; i < z.size(); ++i) {
            bool pred = z[i] > 0.0;  // sigmoid(z) > 0.5
            bool truth = s.target[i] > 0.5;
            inter += pred && truth;
            psum += pred;
            tsum += truth;
        }
        acc += psum + tsum > 0 ? 2.0 * inter / (psum + tsum) : 1.0;
    }
    return acc / static_cast<double>(val.size());
}

}  // namespace

double sample_loss(const TrainSample& s, const ModelConfig& cfg, const ModelParams& params) {
    Tape tape;
    int logits = build_forward(tape, s.patches, cfg, params, nullptr);
    int loss = build_loss(tape, logits, s.target);
    return tape.val(loss)[0];
}

TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, const ModelConfig& cfg,
                  const TrainConfig& tcfg, ModelParams initial) {
    if (train_set.empty()) throw ConfigError("train: empty dataset");
    ModelParams params = std::move(initial);

    std::vector<Tensor> velocity;
    velocity.reserve(params.tensors.size());
    for (const auto& t : params.tensors) velocity.emplace_back(t.dims());

    Rng shuffle_rng(derive_seed(tcfg.seed, "train.shuffle"));
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    TrainResult out;
    out.best_params = params;
    out.best_val_dice = val_dice_of(val_set, cfg, params);

    int64_t total_steps = static_cast<int64_t>(tcfg.epochs) *
                          static_cast<int64_t>(train_set.size());
    int64_t step = 0;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        // Fisher-Yates with the seeded stream
        for (size_t i = order.size(); i-- > 1;)
            std::swap(order[i], order[static_cast<size_t>(
                                  shuffle_rng.uniform_int(0, static_cast<int64_t>(i)))]);

        double loss_sum = 0.0;
        for (size_t oi = 0; oi < order.size(); ++oi, ++step) {
            const TrainSample& s = train_set[order[oi]];
            Tape tape;
            std::vector<int> param_ids;
            int logits = build_forward(tape, s.patches, cfg, params, &param_ids);
            int loss = build_loss(tape, logits, s.target);
            double lv = tape.val(loss)[0];
            if (!std::isfinite(lv))
                throw InternalError("train: loss diverged at epoch " + std::to_string(epoch) +
                                    " step " + std::to_string(step));
            loss_sum += lv;
            tape.backward(loss);

            double clip_scale = 1.0;
            if (tcfg.clip_norm > 0.0) {
                double norm2 = 0.0;
                for (size_t pi = 0; pi < params.tensors.size(); ++pi) {
                    int id = param_ids[pi];
                    if (id < 0 || !tape.has_grad(id)) continue;
                    const Tensor& g = tape.grad(id);
                    norm2 += kernels::sumsq(g.data(), static_cast<size_t>(g.size()));
                }
                double norm = std::sqrt(norm2);
                if (norm > tcfg.clip_norm) clip_scale = tcfg.clip_norm / norm;
            }

            double lr = lr_at(tcfg, step, total_steps);
            for (size_t pi = 0; pi < params.tensors.size(); ++pi) {
                int id = param_ids[pi];
                if (id < 0 || !tape.has_grad(id)) continue;
                const Tensor& g = tape.grad(id);
                Tensor& v = velocity[pi];
                Tensor& w = params.tensors[pi];
                kernels::scale(tcfg.momentum, v.data(), static_cast<size_t>(v.size()));
                kernels::axpy(clip_scale, g.data(), v.data(), static_cast<size_t>(v.size()));
                kernels::axpy(-lr, v.data(), w.data(), static_cast<size_t>(w.size()));
            }
        }
        auto t1 = std::chrono::steady_clock::now();

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = loss_sum / static_cast<double>(train_set.size());
        es.val_dice = val_dice_of(val_set, cfg, params);
        es.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        out.history.push_back(es);

        if (val_set.empty() || es.val_dice >= out.best_val_dice) {
            out.best_val_dice = es.val_dice;
            out.best_params = params;
        }
    }
    if (val_set.empty()) out.best_params = std::move(params);
    return out;
}

MaskVolume reconstruct(const SliceStack& stack, const ModelParams& params,
                       const ModelConfig& cfg, const std::array<double, 3>& spacing_mm,
                       double threshold, double* seconds) {
    auto t0 = std::chrono::steady_clock::now();
    FloatVolume probs = forward_probabilities(stack, params, cfg, spacing_mm);
    auto t1 = std::chrono::steady_clock::now();
    if (seconds) *seconds = std::chrono::duration<double>(t1 - t0).count();
    MaskVolume out(probs.nz, probs.ny, probs.nx, probs.spacing_mm);
    for (int64_t i = 0; i < probs.size(); ++i)
        out.data[static_cast<size_t>(i)] = probs.data[static_cast<size_t>(i)] > threshold ? 1 : 0;
    return out;
}

double dice_binary(const MaskVolume& a, const MaskVolume& b) {
    if (!a.same_grid(b)) throw ShapeError("dice: grids differ");
    int64_t inter = 0, sa = 0, sb = 0;
    for (int64_t i = 0; i < a.size(); ++i) {
        bool pa = a.data[static_cast<size_t>(i)] != 0;
        bool pb = b.data[static_cast<size_t>(i)] != 0;
        inter += pa && pb;
        sa += pa;
        sb += pb;
    }
    return sa + sb > 0 ? 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb) : 1.0;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << "epoch,loss,val_dice,wall_ms\n";
    out.precision(10);
    for (const auto& e : history)
        out << e.epoch << "," << e.train_loss << "," << e.val_dice << "," << e.wall_ms << "\n";
}

}  // namespace vf
