#include "vascufold/model/network.hpp"

#include <cmath>
#include <cstring>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/io.hpp"
#include "vascufold/core/rng.hpp"

namespace vf {

void ModelConfig::validate() const {
    if (channels.empty()) throw ConfigError("model: channel set is empty");
    if (embed_dim % heads != 0) throw ConfigError("model: embed_dim must divide by heads");
    if (in_slices % patch_d != 0)
        throw ShapeError("model: slice count not divisible by patch depth");
    if (in_rows % patch_h != 0) throw ShapeError("model: rows not divisible by patch height");
    if (in_cols % patch_w != 0) throw ShapeError("model: cols not divisible by patch width");
    if (depth < static_cast<int64_t>(pyramid_strides.size()))
        throw ConfigError("model: fewer encoder blocks than pyramid scales");
    for (int s : pyramid_strides)
        if (s < 1 || grid_d() % s || grid_h() % s || grid_w() % s)
            throw ShapeError("model: pyramid stride does not divide the token grid");
    // two trilinear x2 steps take the token grid to the output dims
    if (out_d != grid_d() * 4 || out_h != grid_h() * 4 || out_w != grid_w() * 4)
        throw ShapeError("model: output dims unreachable from the token grid (need 4x)");
}

json ModelConfig::to_json() const {
    json j;
    j["channels"] = json::array();
    for (Channel c : channels) j["channels"].push_back(channel_name(c));
    j["patch"] = {patch_d, patch_h, patch_w};
    j["embed_dim"] = embed_dim;
    j["heads"] = heads;
    j["depth"] = depth;
    j["pyramid_strides"] = pyramid_strides;
    j["decoder_channels"] = {decoder_c1, decoder_c2};
    j["input_dims"] = {in_slices, in_rows, in_cols};
    j["output_dims"] = {out_d, out_h, out_w};
    j["seed"] = seed;
    return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    c.channels.clear();
    for (const auto& cn : j.at("channels")) {
        auto ch = channel_from_name(cn.get<std::string>());
        if (!ch) throw ConfigError("model config: unknown channel " + cn.get<std::string>());
        c.channels.push_back(*ch);
    }
    auto p = j.at("patch").get<std::vector<int64_t>>();
    c.patch_d = p.at(0);
    c.patch_h = p.at(1);
    c.patch_w = p.at(2);
    c.embed_dim = j.at("embed_dim").get<int64_t>();
    c.heads = j.at("heads").get<int64_t>();
    c.depth = j.at("depth").get<int64_t>();
    c.pyramid_strides = j.at("pyramid_strides").get<std::vector<int>>();
    auto dc = j.at("decoder_channels").get<std::vector<int64_t>>();
    c.decoder_c1 = dc.at(0);
    c.decoder_c2 = dc.at(1);
    auto in = j.at("input_dims").get<std::vector<int64_t>>();
    c.in_slices = in.at(0);
    c.in_rows = in.at(1);
    c.in_cols = in.at(2);
    auto out = j.at("output_dims").get<std::vector<int64_t>>();
    c.out_d = out.at(0);
    c.out_h = out.at(1);
    c.out_w = out.at(2);
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

int64_t ModelParams::total_count() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
}

int ModelParams::find(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

Tensor& ModelParams::at(const std::string& name) {
    int i = find(name);
    if (i < 0) throw InternalError("ModelParams: missing tensor " + name);
    return tensors[static_cast<size_t>(i)];
}

const Tensor& ModelParams::at(const std::string& name) const {
    int i = find(name);
    if (i < 0) throw InternalError("ModelParams: missing tensor " + name);
    return tensors[static_cast<size_t>(i)];
}

namespace {

void fill_normal(Tensor& t, Rng& rng, double sd) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sd);
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    Rng rng(derive_seed(cfg.seed, "model.init"));
    auto push = [&](const std::string& name, std::vector<int64_t> dims, double sd) {
        Tensor t(dims);
        if (sd > 0) fill_normal(t, rng, sd);
        p.names.push_back(name);
        p.tensors.push_back(std::move(t));
    };
    auto ones = [&](const std::string& name, std::vector<int64_t> dims) {
        Tensor t(dims, 1.0);
        p.names.push_back(name);
        p.tensors.push_back(std::move(t));
    };

    int64_t e = cfg.embed_dim, pv = cfg.patch_volume(), tkn = cfg.tokens();
    for (size_t m = 0; m < cfg.channels.size(); ++m)
        push("embed.w" + std::to_string(m), {pv, e}, std::sqrt(2.0 / pv));
    push("embed.bias", {e}, 0.0);
    push("embed.pos", {tkn, e}, 0.02);

    for (int64_t b = 0; b < cfg.depth; ++b) {
        std::string pre = "block" + std::to_string(b) + ".";
        ones(pre + "ln1.g", {e});
        push(pre + "ln1.b", {e}, 0.0);
        for (const char* w : {"wq", "wk", "wv", "wo"})
            push(pre + w, {e, e}, std::sqrt(1.0 / e));
        for (const char* bn : {"bq", "bk", "bv", "bo"}) push(pre + bn, {e}, 0.0);
        ones(pre + "ln2.g", {e});
        push(pre + "ln2.b", {e}, 0.0);
        push(pre + "mlp.w1", {e, 4 * e}, std::sqrt(2.0 / e));
        push(pre + "mlp.b1", {4 * e}, 0.0);
        push(pre + "mlp.w2", {4 * e, e}, std::sqrt(2.0 / (4 * e)));
        push(pre + "mlp.b2", {e}, 0.0);
    }

    for (size_t s = 0; s < cfg.pyramid_strides.size(); ++s) {
        std::string pre = "pyramid" + std::to_string(s) + ".";
        push(pre + "w", {e, e}, std::sqrt(1.0 / e));
        push(pre + "b", {e}, 0.0);
        ones(pre + "gate", {1});
    }

    push("decoder.w1", {27 * e, cfg.decoder_c1}, std::sqrt(2.0 / (27 * e)));
    push("decoder.b1", {cfg.decoder_c1}, 0.0);
    push("decoder.w2", {27 * cfg.decoder_c1, cfg.decoder_c2},
         std::sqrt(2.0 / (27 * cfg.decoder_c1)));
    push("decoder.b2", {cfg.decoder_c2}, 0.0);
    push("decoder.w3", {cfg.decoder_c2, 1}, std::sqrt(1.0 / cfg.decoder_c2));
    push("decoder.b3", {1}, 0.0);

    if (p.total_count() != expected_param_count(cfg))
        throw InternalError("init_params: allocated count disagrees with the formula");
    return p;
}

int64_t expected_param_count(const ModelConfig& cfg) {
    int64_t e = cfg.embed_dim;
    int64_t n = 0;
    n += static_cast<int64_t>(cfg.channels.size()) * cfg.patch_volume() * e;  // embed.w*
    n += e;                                                                   // embed.bias
    n += cfg.tokens() * e;                                                    // embed.pos
    n += cfg.depth * (2 * e +            // ln1
                      4 * e * e + 4 * e  // attention
                      + 2 * e +          // ln2
                      e * 4 * e + 4 * e  // mlp in
                      + 4 * e * e + e);  // mlp out
    n += static_cast<int64_t>(cfg.pyramid_strides.size()) * (e * e + e + 1);
    n += 27 * e * cfg.decoder_c1 + cfg.decoder_c1;
    n += 27 * cfg.decoder_c1 * cfg.decoder_c2 + cfg.decoder_c2;
    n += cfg.decoder_c2 + 1;
    return n;
}

void save_params(const ModelParams& p, const ModelConfig& cfg, const std::string& path_base) {
    json j;
    j["config"] = cfg.to_json();
    j["tensors"] = json::array();
    int64_t offset = 0;
    std::vector<double> payload;
    payload.reserve(static_cast<size_t>(p.total_count()));
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        const Tensor& t = p.tensors[i];
        j["tensors"].push_back({{"name", p.names[i]},
                                {"dims", t.dims()},
                                {"offset", offset},
                                {"count", t.size()}});
        payload.insert(payload.end(), t.data(), t.data() + t.size());
        offset += t.size();
    }
    j["total_count"] = offset;
    write_json_file(path_base + ".json", j);
    write_raw_file(path_base + ".raw", payload.data(), payload.size() * sizeof(double));
}

ModelParams load_params(const std::string& path_base, ModelConfig* cfg_out) {
    json j = read_json_file(path_base + ".json");
    if (cfg_out) *cfg_out = ModelConfig::from_json(j.at("config"));
    auto raw = read_raw_file(path_base + ".raw");
    const double* data = reinterpret_cast<const double*>(raw.data());
    int64_t total = j.at("total_count").get<int64_t>();
    if (raw.size() != static_cast<size_t>(total) * sizeof(double))
        throw ConfigError(path_base + ".raw: payload size mismatch");
    ModelParams p;
    for (const auto& jt : j.at("tensors")) {
        Tensor t(jt.at("dims").get<std::vector<int64_t>>());
        int64_t off = jt.at("offset").get<int64_t>();
        std::memcpy(t.data(), data + off, static_cast<size_t>(t.size()) * sizeof(double));
        p.names.push_back(jt.at("name").get<std::string>());
        p.tensors.push_back(std::move(t));
    }
    return p;
}

std::vector<Tensor> patch_matrices(const SliceStack& stack, const ModelConfig& cfg) {
    for (Channel c : cfg.channels)
        if (stack.channel_index(c) < 0)
            throw ShapeError(std::string("model: stack lacks channel ") + channel_name(c));
    if (static_cast<int64_t>(stack.slices.size()) != cfg.in_slices ||
        stack.rows != cfg.in_rows || stack.cols != cfg.in_cols)
        throw ShapeError("model: stack dims do not match the config");

    int64_t gd = cfg.grid_d(), gh = cfg.grid_h(), gw = cfg.grid_w();
    int64_t pv = cfg.patch_volume();
    std::vector<Tensor> out;
    for (Channel c : cfg.channels) {
        Tensor m({cfg.tokens(), pv});
        int64_t tok = 0;
        for (int64_t tz = 0; tz < gd; ++tz)
            for (int64_t ty = 0; ty < gh; ++ty)
                for (int64_t tx = 0; tx < gw; ++tx, ++tok) {
                    double* dst = m.data() + tok * pv;
                    int64_t i = 0;
                    for (int64_t dz = 0; dz < cfg.patch_d; ++dz) {
                        const Image& img =
                            stack.channel(static_cast<size_t>(tz * cfg.patch_d + dz), c);
                        for (int64_t dy = 0; dy < cfg.patch_h; ++dy)
                            for (int64_t dx = 0; dx < cfg.patch_w; ++dx)
                                dst[i++] = img.at(ty * cfg.patch_h + dy, tx * cfg.patch_w + dx);
                    }
                }
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

struct ParamNodes {
    std::vector<int> ids;
    const ModelParams* params;
    Tape* tape;

    int get(const std::string& name, std::vector<int>* order) {
        int pi = params->find(name);
        if (pi < 0) throw InternalError("forward: missing param " + name);
        if (ids[static_cast<size_t>(pi)] < 0) {
            ids[static_cast<size_t>(pi)] = tape->add(params->tensors[static_cast<size_t>(pi)]);
            if (order) (*order)[static_cast<size_t>(pi)] = ids[static_cast<size_t>(pi)];
        }
        return ids[static_cast<size_t>(pi)];
    }
};

}  // namespace

int build_forward(Tape& tape, const std::vector<Tensor>& patches, const ModelConfig& cfg,
                  const ModelParams& params, std::vector<int>* param_ids) {
    cfg.validate();
    if (patches.size() != cfg.channels.size())
        throw ShapeError("forward: patch matrix count differs from the channel set");

    if (param_ids) param_ids->assign(params.tensors.size(), -1);
    ParamNodes pn{std::vector<int>(params.tensors.size(), -1), &params, &tape};
    auto P = [&](const std::string& n) { return pn.get(n, param_ids); };

    int64_t e = cfg.embed_dim;

    // patch embedding: per-modality projections summed, bias and learned
    // positional encoding added
    int x = -1;
    for (size_t m = 0; m < patches.size(); ++m) {
        int xm = matmul(tape, constant(tape, patches[m]), P("embed.w" + std::to_string(m)));
        x = m == 0 ? xm : add(tape, x, xm);
    }
    x = add_bias(tape, x, P("embed.bias"));
    x = add(tape, x, P("embed.pos"));

    // encoder with pyramid taps on the last blocks
    int64_t dh = e / cfg.heads;
    double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<int> taps(cfg.pyramid_strides.size(), -1);
    int64_t first_tap_block = cfg.depth - static_cast<int64_t>(cfg.pyramid_strides.size());
    for (int64_t b = 0; b < cfg.depth; ++b) {
        std::string pre = "block" + std::to_string(b) + ".";
        int normed = layer_norm(tape, x, P(pre + "ln1.g"), P(pre + "ln1.b"));
        int q = add_bias(tape, matmul(tape, normed, P(pre + "wq")), P(pre + "bq"));
        int k = add_bias(tape, matmul(tape, normed, P(pre + "wk")), P(pre + "bk"));
        int v = add_bias(tape, matmul(tape, normed, P(pre + "wv")), P(pre + "bv"));
        std::vector<int> head_outs;
        for (int64_t h = 0; h < cfg.heads; ++h) {
            int qh = slice_cols(tape, q, h * dh, (h + 1) * dh);
            int kh = slice_cols(tape, k, h * dh, (h + 1) * dh);
            int vh = slice_cols(tape, v, h * dh, (h + 1) * dh);
            int logits = scale_const(tape, matmul(tape, qh, transpose2d(tape, kh)), att_scale);
            int attn = softmax_rows(tape, logits);
            head_outs.push_back(matmul(tape, attn, vh));
        }
        int att = concat_cols(tape, head_outs);
        att = add_bias(tape, matmul(tape, att, P(pre + "wo")), P(pre + "bo"));
        x = add(tape, x, att);

        int normed2 = layer_norm(tape, x, P(pre + "ln2.g"), P(pre + "ln2.b"));
        int h1 = gelu(tape, add_bias(tape, matmul(tape, normed2, P(pre + "mlp.w1")),
                                     P(pre + "mlp.b1")));
        int h2 = add_bias(tape, matmul(tape, h1, P(pre + "mlp.w2")), P(pre + "mlp.b2"));
        x = add(tape, x, h2);

        int64_t tap_idx = b - first_tap_block;
        if (tap_idx >= 0) taps[static_cast<size_t>(tap_idx)] = x;
    }

    // multi-scale fusion: pool tap tokens on the grid, project, upsample
    // back to the full grid, gate and sum
    int fused = -1;
    for (size_t s = 0; s < cfg.pyramid_strides.size(); ++s) {
        int stride = cfg.pyramid_strides[s];
        std::string pre = "pyramid" + std::to_string(s) + ".";
        int grid = reshape(tape, taps[s], {cfg.grid_d(), cfg.grid_h(), cfg.grid_w(), e});
        if (stride > 1) grid = avgpool3d(tape, grid, stride);
        int flat = reshape(tape, grid,
                           {cfg.grid_d() / stride * (cfg.grid_h() / stride) *
                                (cfg.grid_w() / stride),
                            e});
        int proj = add_bias(tape, matmul(tape, flat, P(pre + "w")), P(pre + "b"));
        int pgrid = reshape(tape, proj,
                            {cfg.grid_d() / stride, cfg.grid_h() / stride,
                             cfg.grid_w() / stride, e});
        if (stride > 1) pgrid = upsample_nearest3d(tape, pgrid, stride);
        int gated = scale_by(tape, pgrid, P(pre + "gate"));
        fused = s == 0 ? gated : add(tape, fused, gated);
    }

    // decoder: (2x trilinear -> conv3 -> gelu) twice, then a 1x1x1 head
    int up1 = upsample_trilinear3d(tape, fused);
    int col1 = im2col3x3x3(tape, up1);
    int c1 = gelu(tape, add_bias(tape, matmul(tape, col1, P("decoder.w1")), P("decoder.b1")));
    int g1 = reshape(tape, c1,
                     {cfg.grid_d() * 2, cfg.grid_h() * 2, cfg.grid_w() * 2, cfg.decoder_c1});
    int up2 = upsample_trilinear3d(tape, g1);
    int col2 = im2col3x3x3(tape, up2);
    int c2 = gelu(tape, add_bias(tape, matmul(tape, col2, P("decoder.w2")), P("decoder.b2")));
    int logits = add_bias(tape, matmul(tape, c2, P("decoder.w3")), P("decoder.b3"));
    return logits;  // [out_d*out_h*out_w, 1]
}

int build_loss(Tape& tape, int logits, const Tensor& target_flat) {
    // soft-Dice with eps = 1 on probabilities, plus stable BCE on logits
    int probs = sigmoid(tape, logits);
    int inter = dot_const(tape, probs, target_flat);
    int psum = sum_all(tape, probs);
    double tsum = 0;
    for (int64_t i = 0; i < target_flat.size(); ++i) tsum += target_flat[i];
    int numer = s_add_const(tape, s_scale(tape, inter, 2.0), 1.0);
    int denom = s_add_const(tape, psum, tsum + 1.0);
    int dice = s_add_const(tape, s_scale(tape, s_div(tape, numer, denom), -1.0), 1.0);
    int bce = bce_with_logits_mean(tape, logits, target_flat);
    return s_add(tape, dice, bce);
}

FloatVolume forward_probabilities(const SliceStack& stack, const ModelParams& params,
                                  const ModelConfig& cfg,
                                  const std::array<double, 3>& spacing_mm) {
    Tape tape;
    auto patches = patch_matrices(stack, cfg);
    int logits = build_forward(tape, patches, cfg, params, nullptr);
    int probs = sigmoid(tape, logits);
    const Tensor& p = tape.val(probs);
    FloatVolume vol(cfg.out_d, cfg.out_h, cfg.out_w, spacing_mm);
    for (int64_t i = 0; i < p.size(); ++i) vol.data[static_cast<size_t>(i)] =
        static_cast<float>(p[i]);
    return vol;
}

}  // namespace vf
