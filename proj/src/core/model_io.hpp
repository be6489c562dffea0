#pragma once

#include "arm_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace rblab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const char* what);

/// Model file schema: {n, m, reward_model, r_max, arms:[{S, p_passive,
/// p_active, r_passive, r_active}]}, matrices as arrays of rows.
Json instance_to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const Json& j);

std::string dump_json(const Json& j);

BanditInstance load_instance(const std::filesystem::path& path);
void save_instance(const BanditInstance& instance, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rblab
