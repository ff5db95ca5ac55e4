#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vf {

using json = nlohmann::ordered_json;

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

std::vector<uint8_t> read_raw_file(const std::string& path);
void write_raw_file(const std::string& path, const void* data, size_t bytes);

void ensure_directory(const std::string& path);

}  // namespace vf
