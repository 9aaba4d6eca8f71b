#pragma once

#include "sacfd/learner/learner.hpp"
#include "sacfd/replay/mixing.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace sacfd::learner {

struct LearnerCheckpoint {
	LearnerState state;
	replay::RatioState ratio;
	std::int64_t env_steps = 0;
	std::int64_t episodes = 0;
	std::string config_hash;
	int observation_version = 0;
};

nlohmann::json to_json(const LearnerCheckpoint& checkpoint);
LearnerCheckpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const LearnerCheckpoint& checkpoint);
LearnerCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Policy network from either a learner checkpoint or a standalone parameter file.
Mlp load_policy(const std::filesystem::path& path);

} // namespace sacfd::learner
