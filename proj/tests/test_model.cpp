#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vascufold/core/rng.hpp"
#include "vascufold/model/autodiff.hpp"
#include "vascufold/model/network.hpp"
#include "vascufold/model/train.hpp"

using namespace vf;

namespace {

// reduced-but-complete architecture for fast tests
ModelConfig small_config() {
    ModelConfig cfg;
    cfg.channels = {Channel::Grayscale, Channel::FlowDensity};
    cfg.patch_d = 2;
    cfg.patch_h = 4;
    cfg.patch_w = 4;
    cfg.embed_dim = 32;
    cfg.heads = 4;
    cfg.depth = 2;
    cfg.pyramid_strides = {2, 1};
    cfg.decoder_c1 = 8;
    cfg.decoder_c2 = 4;
    cfg.in_slices = 4;
    cfg.in_rows = 16;
    cfg.in_cols = 16;
    cfg.out_d = 8;
    cfg.out_h = 16;
    cfg.out_w = 16;
    cfg.seed = 7;
    return cfg;
}

SliceStack random_stack(const ModelConfig& cfg, uint64_t seed, bool zeros = false) {
    Rng rng(seed);
    SliceStack st;
    st.channels = cfg.channels;
    st.pixel_spacing_mm = 0.01;
    st.rows = cfg.in_rows;
    st.cols = cfg.in_cols;
    for (int64_t s = 0; s < cfg.in_slices; ++s) {
        Slice sl;
        sl.pose = {{0, 0, 0.01 * s}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
        for (size_t c = 0; c < cfg.channels.size(); ++c) {
            Image img({cfg.in_rows, cfg.in_cols});
            if (!zeros)
                for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform();
            sl.channels.push_back(std::move(img));
        }
        st.slices.push_back(std::move(sl));
    }
    return st;
}

Tensor random_target(const ModelConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    Tensor t({cfg.out_d * cfg.out_h * cfg.out_w, 1});
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform() < 0.2 ? 1.0 : 0.0;
    return t;
}

}  // namespace

TEST_CASE("token count follows the patch arithmetic") {
    ModelConfig cfg;  // defaults: 8 slices, 32x32, patch 2x4x4
    CHECK(cfg.tokens() == 256);
    cfg.validate();
    ModelConfig bad = cfg;
    bad.in_rows = 30;
    CHECK_THROWS_AS(bad.validate(), ShapeError);
}

TEST_CASE("parameter count formula matches the allocation") {
    ModelConfig cfg;
    auto p = init_params(cfg);
    CHECK(p.total_count() == expected_param_count(cfg));
    auto small = small_config();
    auto ps = init_params(small);
    CHECK(ps.total_count() == expected_param_count(small));
}

TEST_CASE("all-zero input produces tokens equal to the positional encoding") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto st = random_stack(cfg, 3, /*zeros=*/true);
    auto patches = patch_matrices(st, cfg);
    Tape tape;
    // build just the embedding: matmul(0) + bias + pos
    int x = -1;
    for (size_t m = 0; m < patches.size(); ++m) {
        int xm = matmul(tape, constant(tape, patches[m]),
                        constant(tape, params.at("embed.w" + std::to_string(m))));
        x = m == 0 ? xm : add(tape, x, xm);
    }
    x = add_bias(tape, x, constant(tape, params.at("embed.bias")));
    x = add(tape, x, constant(tape, params.at("embed.pos")));
    const Tensor& tokens = tape.val(x);
    const Tensor& pos = params.at("embed.pos");
    // bias is zero-initialized, so tokens == pos exactly
    for (int64_t i = 0; i < tokens.size(); ++i) CHECK(tokens[i] == pos[i]);
}

TEST_CASE("modality permutation with permuted weights is invariant") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto st = random_stack(cfg, 5);
    auto patches = patch_matrices(st, cfg);

    Tape t1;
    int a1 = add(t1, matmul(t1, constant(t1, patches[0]), constant(t1, params.at("embed.w0"))),
                 matmul(t1, constant(t1, patches[1]), constant(t1, params.at("embed.w1"))));
    Tape t2;  // swap modality order together with their projections
    int a2 = add(t2, matmul(t2, constant(t2, patches[1]), constant(t2, params.at("embed.w1"))),
                 matmul(t2, constant(t2, patches[0]), constant(t2, params.at("embed.w0"))));
    const Tensor& v1 = t1.val(a1);
    const Tensor& v2 = t2.val(a2);
    for (int64_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-15));
}

TEST_CASE("softmax rows: closed form and uniform cases") {
    Tape tape;
    Tensor logits({2, 2});
    logits.at(0, 0) = 0.0;
    logits.at(0, 1) = std::log(3.0);
    logits.at(1, 0) = 1.7;  // identical logits -> uniform weights
    logits.at(1, 1) = 1.7;
    int sm = softmax_rows(tape, constant(tape, logits));
    const Tensor& y = tape.val(sm);
    CHECK(y.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(y.at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y.at(0, 0) + y.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pyramid fusion: gating and additivity") {
    Rng rng(9);
    int64_t e = 8;
    Tensor grid({2, 2, 2, e});
    for (int64_t i = 0; i < grid.size(); ++i) grid[i] = rng.uniform(-1, 1);
    Tensor w({e, e});
    for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1, 1);
    Tensor b({e}, 0.1);

    auto project = [&](Tape& t, const Tensor& g, double gate) {
        int flat = reshape(t, constant(t, g), {8, e});
        int proj = add_bias(t, matmul(t, flat, constant(t, w)), constant(t, b));
        Tensor gt({1}, gate);
        return scale_by(t, reshape(t, proj, {2, 2, 2, e}), constant(t, gt));
    };

    SUBCASE("single scale is just the projection") {
        Tape t;
        int fused = project(t, grid, 1.0);
        Tape t2;
        int flat = reshape(t2, constant(t2, grid), {8, e});
        int proj = add_bias(t2, matmul(t2, flat, constant(t2, w)), constant(t2, b));
        const Tensor& a = t.val(fused);
        const Tensor& bb = t2.val(proj);
        for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(bb[i]));
    }
    SUBCASE("zero gates drop their scales; contribution is exactly additive") {
        Tensor grid2(grid.dims());
        for (int64_t i = 0; i < grid2.size(); ++i) grid2[i] = rng.uniform(-1, 1);
        Tape t_both;
        int fused_both = add(t_both, project(t_both, grid, 1.0), project(t_both, grid2, 0.7));
        Tape t_one;
        int fused_one = add(t_one, project(t_one, grid, 1.0), project(t_one, grid2, 0.0));
        Tape t_only;
        int only_second = project(t_only, grid2, 0.7);
        const Tensor& vb = t_both.val(fused_both);
        const Tensor& vo = t_one.val(fused_one);
        const Tensor& vs = t_only.val(only_second);
        // difference equals the dropped scale's gated projection exactly
        for (int64_t i = 0; i < vb.size(); ++i)
            CHECK(vb[i] - vo[i] == doctest::Approx(vs[i]).epsilon(1e-12));
    }
}

TEST_CASE("decoder shape contract and constant-bias degenerate case") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    for (size_t i = 0; i < params.tensors.size(); ++i) params.tensors[i].fill(0.0);
    params.at("decoder.b3").fill(1.25);
    auto st = random_stack(cfg, 11);
    auto patches = patch_matrices(st, cfg);
    Tape tape;
    int logits = build_forward(tape, patches, cfg, params, nullptr);
    const Tensor& z = tape.val(logits);
    CHECK(z.dim(0) == cfg.out_d * cfg.out_h * cfg.out_w);
    CHECK(z.dim(1) == 1);
    for (int64_t i = 0; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("decoder is shift-equivariant on the interior") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    int64_t gd = cfg.grid_d(), gh = cfg.grid_h(), gw = cfg.grid_w(), e = cfg.embed_dim;
    Rng rng(21);
    Tensor fused({gd, gh, gw, e});
    for (int64_t i = 0; i < fused.size(); ++i) fused[i] = rng.uniform(-1, 1);
    Tensor shifted({gd, gh, gw, e}, 0.0);
    for (int64_t z = 1; z < gd; ++z)
        for (int64_t y = 1; y < gh; ++y)
            for (int64_t x = 1; x < gw; ++x)
                for (int64_t c = 0; c < e; ++c)
                    shifted.at(z, y, x * e + c) = fused.at(z - 1, y - 1, (x - 1) * e + c);

    auto decode = [&](const Tensor& f) {
        Tape t;
        int up1 = upsample_trilinear3d(t, constant(t, f));
        int c1 = gelu(t, add_bias(t, matmul(t, im2col3x3x3(t, up1),
                                            constant(t, params.at("decoder.w1"))),
                                  constant(t, params.at("decoder.b1"))));
        int g1 = reshape(t, c1, {gd * 2, gh * 2, gw * 2, cfg.decoder_c1});
        int up2 = upsample_trilinear3d(t, g1);
        int c2 = gelu(t, add_bias(t, matmul(t, im2col3x3x3(t, up2),
                                            constant(t, params.at("decoder.w2"))),
                                  constant(t, params.at("decoder.b2"))));
        int logits = add_bias(t, matmul(t, c2, constant(t, params.at("decoder.w3"))),
                              constant(t, params.at("decoder.b3")));
        Tensor out = t.val(logits);
        return out;
    };
    Tensor a = decode(fused);
    Tensor b = decode(shifted);
    // one fused cell = 4 voxels after two 2x upsamplings
    auto at = [&](const Tensor& t, int64_t z, int64_t y, int64_t x) {
        return t[(z * cfg.out_h + y) * cfg.out_w + x];
    };
    int64_t margin = 6;
    for (int64_t z = margin; z < cfg.out_d - margin; ++z)
        for (int64_t y = margin; y < cfg.out_h - margin; ++y)
            for (int64_t x = margin; x < cfg.out_w - margin; ++x)
                CHECK(at(b, z, y, x) == doctest::Approx(at(a, z - 4, y - 4, x - 4)).epsilon(1e-9));
}

TEST_CASE("forward probabilities are in (0,1), deterministic, and sharpen") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto st = random_stack(cfg, 13);
    auto p1 = forward_probabilities(st, params, cfg, {0.01, 0.01, 0.01});
    auto p2 = forward_probabilities(st, params, cfg, {0.01, 0.01, 0.01});
    CHECK(p1.data == p2.data);
    for (float v : p1.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    // doubling logits moves every probability away from 1/2
    auto patches = patch_matrices(st, cfg);
    Tape tape;
    int logits = build_forward(tape, patches, cfg, params, nullptr);
    int doubled = scale_const(tape, logits, 2.0);
    const Tensor& pa = tape.val(sigmoid(tape, logits));
    const Tensor& pb = tape.val(sigmoid(tape, doubled));
    for (int64_t i = 0; i < pa.size(); ++i)
        CHECK(std::abs(pb[i] - 0.5) >= std::abs(pa[i] - 0.5) - 1e-15);
}

TEST_CASE("loss closed forms") {
    SUBCASE("saturated correct logits give near-zero loss") {
        Tensor target({64, 1});
        for (int64_t i = 0; i < 64; ++i) target[i] = i % 3 == 0 ? 1.0 : 0.0;
        Tape tape;
        Tensor z({64, 1});
        for (int64_t i = 0; i < 64; ++i) z[i] = target[i] > 0.5 ? 40.0 : -40.0;
        int loss = build_loss(tape, constant(tape, z), target);
        CHECK(tape.val(loss)[0] < 1e-3);
    }
    SUBCASE("flat 0.5 prediction on half-ones target yields BCE ln 2") {
        Tensor target({100, 1});
        for (int64_t i = 0; i < 100; ++i) target[i] = i < 50 ? 1.0 : 0.0;
        Tape tape;
        Tensor z({100, 1}, 0.0);
        int bce = bce_with_logits_mean(tape, constant(tape, z), target);
        CHECK(tape.val(bce)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("full-network gradient matches finite differences") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto st = random_stack(cfg, 17);
    auto patches = patch_matrices(st, cfg);
    auto target = random_target(cfg, 19);

    Tape tape;
    std::vector<int> ids;
    int logits = build_forward(tape, patches, cfg, params, &ids);
    int loss = build_loss(tape, logits, target);
    tape.backward(loss);

    double gmax = 0.0;
    for (size_t pi = 0; pi < params.tensors.size(); ++pi)
        if (ids[pi] >= 0 && tape.has_grad(ids[pi])) {
            const Tensor& g = tape.grad(ids[pi]);
            for (int64_t i = 0; i < g.size(); ++i) gmax = std::max(gmax, std::abs(g[i]));
        }
    REQUIRE(gmax > 0);

    Rng rng(23);
    const double h = 1e-5;
    int bad = 0, checked = 0;
    TrainSample sample{patches, target};
    while (checked < 60) {
        size_t pi = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(params.tensors.size()) - 1));
        int64_t ei = rng.uniform_int(0, params.tensors[pi].size() - 1);
        double an = ids[pi] >= 0 && tape.has_grad(ids[pi]) ? tape.grad(ids[pi])[ei] : 0.0;
        double saved = params.tensors[pi][ei];
        params.tensors[pi][ei] = saved + h;
        double up = sample_loss(sample, cfg, params);
        params.tensors[pi][ei] = saved - h;
        double dn = sample_loss(sample, cfg, params);
        params.tensors[pi][ei] = saved;
        double fd = (up - dn) / (2 * h);
        double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        if (std::abs(an - fd) / denom >= 1e-4 && std::abs(an - fd) >= 1e-9) bad++;
        checked++;
    }
    CHECK(bad == 0);
}

TEST_CASE("params serialization round-trips bit-exact") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto base = (std::filesystem::temp_directory_path() / "vf_params_rt").string();
    save_params(params, cfg, base);
    ModelConfig cfg2;
    auto loaded = load_params(base, &cfg2);
    REQUIRE(loaded.tensors.size() == params.tensors.size());
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        CHECK(loaded.names[i] == params.names[i]);
        CHECK(loaded.tensors[i] == params.tensors[i]);
    }
    auto st = random_stack(cfg, 29);
    auto r1 = reconstruct(st, params, cfg, {0.01, 0.01, 0.01});
    auto r2 = reconstruct(st, loaded, cfg2, {0.01, 0.01, 0.01});
    CHECK(r1.data == r2.data);
    std::filesystem::remove(base + ".json");
    std::filesystem::remove(base + ".raw");
}

TEST_CASE("reconstruct threshold boundaries") {
    auto cfg = small_config();
    auto params = init_params(cfg);
    auto st = random_stack(cfg, 31);
    auto all = reconstruct(st, params, cfg, {0.01, 0.01, 0.01}, 0.0);
    CHECK(count_foreground(all) == all.size());  // probs > 0 always
    auto none = reconstruct(st, params, cfg, {0.01, 0.01, 0.01}, 1.0);
    CHECK(count_foreground(none) == 0);
}

TEST_CASE("training: zero lr freezes, same seed repeats") {
    auto cfg = small_config();
    std::vector<TrainSample> data;
    for (uint64_t s = 0; s < 3; ++s)
        data.push_back({patch_matrices(random_stack(cfg, 100 + s), cfg),
                        random_target(cfg, 200 + s)});

    TrainConfig tc;
    tc.epochs = 2;
    tc.lr = 0.0;
    tc.schedule = "constant";
    tc.warmup_frac = 0.0;
    auto initial = init_params(cfg);
    auto frozen = train(data, {}, cfg, tc, initial);
    for (size_t i = 0; i < initial.tensors.size(); ++i)
        CHECK(frozen.best_params.tensors[i] == initial.tensors[i]);
    CHECK(frozen.history[0].train_loss == doctest::Approx(frozen.history[1].train_loss));

    tc.lr = 0.05;
    auto a = train(data, {}, cfg, tc, init_params(cfg));
    auto b = train(data, {}, cfg, tc, init_params(cfg));
    REQUIRE(a.history.size() == b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_dice == b.history[i].val_dice);
    }
}

TEST_CASE("single-sample overfit drives the dice term under 0.05") {
    auto cfg = small_config();
    // a structured target: a bar through the volume
    Tensor target({cfg.out_d * cfg.out_h * cfg.out_w, 1}, 0.0);
    for (int64_t z = 0; z < cfg.out_d; ++z)
        for (int64_t y = 6; y < 10; ++y)
            for (int64_t x = 3; x < 13; ++x)
                target[(z * cfg.out_h + y) * cfg.out_w + x] = 1.0;
    auto st = random_stack(cfg, 37);
    std::vector<TrainSample> data{{patch_matrices(st, cfg), target}};

    TrainConfig tc;
    tc.epochs = 300;  // 1 sample -> 300 steps
    tc.lr = 0.1;
    tc.schedule = "constant";
    tc.seed = 3;
    auto res = train(data, {}, cfg, tc, init_params(cfg));

    // evaluate the soft-Dice component on the trained params
    Tape tape;
    int logits = build_forward(tape, data[0].patches, cfg, res.best_params, nullptr);
    const Tensor& z = tape.val(sigmoid(tape, logits));
    double inter = 0, psum = 0, tsum = 0;
    for (int64_t i = 0; i < z.size(); ++i) {
        inter += z[i] * target[i];
        psum += z[i];
        tsum += target[i];
    }
    double dice_loss = 1.0 - (2.0 * inter + 1.0) / (psum + tsum + 1.0);
    CHECK(dice_loss < 0.05);
}
