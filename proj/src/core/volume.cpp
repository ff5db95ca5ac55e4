#include "vascufold/core/volume.hpp"

#include <cstring>

#include "vascufold/core/io.hpp"

namespace vf {
namespace {

json volume_header(int64_t nz, int64_t ny, int64_t nx,
                   const std::array<double, 3>& spacing, const char* dtype) {
    json j;
    j["dims"] = {nz, ny, nx};
    j["spacing_mm"] = {spacing[0], spacing[1], spacing[2]};
    j["dtype"] = dtype;
    j["order"] = "zyx-row-major";
    return j;
}

template <typename T>
void load_grid_common(const std::string& path_base, const char* want_dtype, VoxelGrid<T>& out) {
    json h = read_json_file(path_base + ".json");
    std::string dtype = h.at("dtype").get<std::string>();
    if (dtype != want_dtype)
        throw ConfigError(path_base + ".json: dtype is '" + dtype + "', expected '" + want_dtype + "'");
    auto dims = h.at("dims").get<std::vector<int64_t>>();
    auto sp = h.at("spacing_mm").get<std::vector<double>>();
    if (dims.size() != 3 || sp.size() != 3)
        throw ConfigError(path_base + ".json: dims/spacing_mm must have 3 entries");
    if (h.at("order").get<std::string>() != "zyx-row-major")
        throw ConfigError(path_base + ".json: unsupported order");
    out = VoxelGrid<T>(dims[0], dims[1], dims[2], {sp[0], sp[1], sp[2]});
    auto raw = read_raw_file(path_base + ".raw");
    size_t expect = static_cast<size_t>(out.size()) * sizeof(T);
    if (raw.size() != expect)
        throw ConfigError(path_base + ".raw: expected " + std::to_string(expect) +
                          " bytes, found " + std::to_string(raw.size()));
    std::memcpy(out.data.data(), raw.data(), expect);
}

}  // namespace

void save_volume(const MaskVolume& v, const std::string& path_base) {
    write_json_file(path_base + ".json", volume_header(v.nz, v.ny, v.nx, v.spacing_mm, "u8"));
    write_raw_file(path_base + ".raw", v.data.data(), v.data.size());
}

void save_volume(const FloatVolume& v, const std::string& path_base) {
    write_json_file(path_base + ".json", volume_header(v.nz, v.ny, v.nx, v.spacing_mm, "f32"));
    write_raw_file(path_base + ".raw", v.data.data(), v.data.size() * sizeof(float));
}

MaskVolume load_mask_volume(const std::string& path_base) {
    MaskVolume v;
    load_grid_common(path_base, "u8", v);
    return v;
}

FloatVolume load_float_volume(const std::string& path_base) {
    FloatVolume v;
    load_grid_common(path_base, "f32", v);
    return v;
}

int64_t count_foreground(const MaskVolume& v) {
    int64_t n = 0;
    for (uint8_t b : v.data) n += (b != 0);
    return n;
}

}  // namespace vf
