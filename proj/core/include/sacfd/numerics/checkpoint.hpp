#pragma once

#include "sacfd/numerics/adam.hpp"
#include "sacfd/numerics/mlp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace sacfd::numerics {

inline constexpr int kCheckpointVersion = 1;

/// {"layers": [{"rows", "cols", "weight": [row-major], "bias": [...]}, ...]}
nlohmann::json to_json(const Mlp& params);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AdamState& state);
AdamState adam_state_from_json(const nlohmann::json& j);

/// Standalone parameter file: {"format": "sacfd-params", "version": 1, "network": {...}}.
void save_parameters(const std::filesystem::path& path, const Mlp& params);
Mlp load_parameters(const std::filesystem::path& path);

/// Write-to-temporary then rename, so readers never observe a half-written file.
void write_text_atomically(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace sacfd::numerics
