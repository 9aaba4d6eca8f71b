#pragma once

#include "sacfd/cli/rollout.hpp"
#include "sacfd/cli/run_config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace sacfd::cli {

inline constexpr int kMetricsSchemaVersion = 2;

struct EvalPoint {
	std::int64_t step = 0;
	EvalReport report;
};

struct TrainSummary {
	std::filesystem::path run_dir;
	std::int64_t steps = 0;
	std::int64_t episodes = 0;
	std::int64_t best_episode = -1;
	double best_episode_reward = 0.0;
	std::optional<double> expert_mean_reward;
	double final_rho = 0.0;
	std::vector<EvalPoint> evals;
};

/// Full training run for one seed. Writes into config.run_dir(seed):
/// run.json, config.txt, metrics.csv, episodes.csv, eval.csv, checkpoints/, best.json.
TrainSummary train_run(const RunConfig& config, std::uint64_t seed);

/// Behavior cloning on the demo set, then one evaluation. Writes policy.json and eval.json.
TrainSummary train_bc(const RunConfig& config, std::uint64_t seed);

/// Environment config the run actually uses (seed and shield applied).
env::EnvConfig run_env_config(const RunConfig& config, std::uint64_t seed);

} // namespace sacfd::cli
