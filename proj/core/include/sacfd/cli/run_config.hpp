#pragma once

#include "sacfd/env/config.hpp"
#include "sacfd/learner/learner.hpp"
#include "sacfd/replay/prioritized_buffer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sacfd::cli {

struct RunConfig {
	std::optional<std::filesystem::path> env_config_path;
	env::EnvConfig env;
	learner::LearnerConfig learner;
	replay::PerParams per;
	bool demos = true;
	bool shield = false;
	bool bc = false;
	std::optional<double> min_demo_reward;
	std::filesystem::path demo_dir = "demos";
	std::int64_t total_steps = 100'000;
	std::vector<std::uint64_t> seeds{0};
	std::filesystem::path out_dir = "runs";
	std::size_t agent_capacity = 100'000;
	std::int64_t eval_interval = 5'000;
	int eval_episodes = 50;
	std::uint64_t eval_seed = 1'000'000;
	std::int64_t metrics_interval = 100;
	int bc_epochs = 30;

	/// Throws ConfigError on out-of-range values.
	void validate() const;
	/// Directory of one seed's run.
	std::filesystem::path run_dir(std::uint64_t seed) const;
	std::string variant() const;
};

/// Everything needed to reproduce a run, written as run.json.
nlohmann::json run_metadata(const RunConfig& config, std::uint64_t seed, const std::vector<std::string>& demo_hashes,
	std::optional<double> expert_mean_reward);

std::string code_version();

} // namespace sacfd::cli
