#pragma once

#include "sacfd/demos/recorder.hpp"
#include "sacfd/env/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>

namespace sacfd::cli {

struct EvalReport {
	int episodes = 0;
	double success_rate = 0.0;
	double collision_rate = 0.0;
	double timeout_rate = 0.0;
	double mean_reward = 0.0;
	double sd_reward = 0.0;
	double mean_length_s = 0.0;
	double sd_length_s = 0.0;

	bool operator==(const EvalReport&) const = default;
};

/// Runs `episodes` episodes with episode seeds seed, seed + 1, ...
EvalReport evaluate(const env::EnvConfig& config, const demos::Controller& controller, int episodes, std::uint64_t seed);

nlohmann::json to_json(const EvalReport& report);

} // namespace sacfd::cli
