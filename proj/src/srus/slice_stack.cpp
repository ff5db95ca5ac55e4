#include "vascufold/srus/slice_stack.hpp"

#include <cstring>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/io.hpp"

namespace vf {
namespace {

const char* kChannelNames[kChannelCount] = {
    "grayscale", "flow_density", "flow_direction", "flow_angle",
    "flow_velocity", "microbubble_track",
};

json vec3_json(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

Vec3 vec3_from(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

const char* channel_name(Channel c) { return kChannelNames[static_cast<int>(c)]; }

std::optional<Channel> channel_from_name(const std::string& name) {
    for (int i = 0; i < kChannelCount; ++i)
        if (name == kChannelNames[i]) return static_cast<Channel>(i);
    return std::nullopt;
}

int SliceStack::channel_index(Channel c) const {
    for (size_t i = 0; i < channels.size(); ++i)
        if (channels[i] == c) return static_cast<int>(i);
    return -1;
}

const Image& SliceStack::channel(size_t slice, Channel c) const {
    int idx = channel_index(c);
    if (idx < 0) throw ShapeError(std::string("stack: channel not present: ") + channel_name(c));
    return slices[slice].channels[static_cast<size_t>(idx)];
}

Image& SliceStack::channel(size_t slice, Channel c) {
    int idx = channel_index(c);
    if (idx < 0) throw ShapeError(std::string("stack: channel not present: ") + channel_name(c));
    return slices[slice].channels[static_cast<size_t>(idx)];
}

void SliceStack::validate() const {
    for (const auto& s : slices) {
        if (s.channels.size() != channels.size())
            throw InternalError("stack: slice channel count differs from presence mask");
        for (const auto& img : s.channels)
            if (img.dim(0) != rows || img.dim(1) != cols)
                throw InternalError("stack: slice dims differ across the stack");
    }
}

void save_stack(const SliceStack& s, const std::string& dir) {
    ensure_directory(dir);
    json j;
    j["pixel_spacing_mm"] = s.pixel_spacing_mm;
    j["dims"] = {s.rows, s.cols};
    j["channels"] = json::array();
    for (Channel c : s.channels) j["channels"].push_back(channel_name(c));
    j["slices"] = json::array();
    for (size_t i = 0; i < s.slices.size(); ++i) {
        const Slice& sl = s.slices[i];
        json js;
        js["pose"] = {{"origin", vec3_json(sl.pose.origin)},
                      {"normal", vec3_json(sl.pose.normal)},
                      {"u", vec3_json(sl.pose.u)},
                      {"v", vec3_json(sl.pose.v)}};
        js["outside_volume"] = sl.outside_volume;
        if (sl.recorded_warp) js["recorded_warp"] = sl.recorded_warp->to_json();
        j["slices"].push_back(std::move(js));

        for (size_t ci = 0; ci < s.channels.size(); ++ci) {
            std::vector<float> buf(sl.channels[ci].storage().begin(),
                                   sl.channels[ci].storage().end());
            write_raw_file(dir + "/s" + std::to_string(i) + "_" +
                               channel_name(s.channels[ci]) + ".raw",
                           buf.data(), buf.size() * sizeof(float));
        }
    }
    write_json_file(dir + "/stack.json", j);
}

SliceStack load_stack(const std::string& dir) {
    json j = read_json_file(dir + "/stack.json");
    SliceStack s;
    s.pixel_spacing_mm = j.at("pixel_spacing_mm").get<double>();
    auto dims = j.at("dims").get<std::vector<int64_t>>();
    s.rows = dims.at(0);
    s.cols = dims.at(1);
    for (const auto& cn : j.at("channels")) {
        auto c = channel_from_name(cn.get<std::string>());
        if (!c) throw ConfigError(dir + "/stack.json: unknown channel " + cn.get<std::string>());
        s.channels.push_back(*c);
    }
    size_t idx = 0;
    for (const auto& js : j.at("slices")) {
        Slice sl;
        const auto& pose = js.at("pose");
        sl.pose.origin = vec3_from(pose.at("origin"));
        sl.pose.normal = vec3_from(pose.at("normal"));
        sl.pose.u = vec3_from(pose.at("u"));
        sl.pose.v = vec3_from(pose.at("v"));
        sl.outside_volume = js.at("outside_volume").get<bool>();
        if (js.contains("recorded_warp"))
            sl.recorded_warp = BSplineTransform::from_json(js.at("recorded_warp"));
        for (Channel c : s.channels) {
            auto raw = read_raw_file(dir + "/s" + std::to_string(idx) + "_" +
                                     channel_name(c) + ".raw");
            size_t n = static_cast<size_t>(s.rows * s.cols);
            if (raw.size() != n * sizeof(float))
                throw ConfigError(dir + ": channel payload size mismatch for " +
                                  channel_name(c));
            Image img({s.rows, s.cols});
            const float* f = reinterpret_cast<const float*>(raw.data());
            for (size_t i = 0; i < n; ++i) img[static_cast<int64_t>(i)] = f[i];
            sl.channels.push_back(std::move(img));
        }
        s.slices.push_back(std::move(sl));
        idx++;
    }
    s.validate();
    return s;
}

}  // namespace vf
