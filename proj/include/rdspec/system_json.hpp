#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "rdspec/random_system.hpp"

namespace rdspec {

/// Parses the system schema; ConfigError messages name the offending field.
RandomSystem system_from_json(const nlohmann::json& j);
RandomSystem load_system(const std::filesystem::path& path);

nlohmann::json to_json(const FiberMap& f);
nlohmann::json to_json(const RandomSystem& sys);

}  // namespace rdspec
