#pragma once

#include "sacfd/demos/trajectory_file.hpp"
#include "sacfd/replay/prioritized_buffer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sacfd::demos {

struct DemoSetOptions {
	/// When set, every file must carry this config hash.
	std::optional<std::string> config_hash;
	std::optional<int> observation_version;
	/// Files whose episodic reward falls below this are skipped.
	std::optional<double> min_demo_reward;
};

struct DemoSet {
	std::vector<std::filesystem::path> paths;
	std::vector<TrajectoryFile> episodes;
	/// FNV-1a of each kept file's bytes, 16 hex digits.
	std::vector<std::string> file_hashes;
	std::size_t skipped = 0;
	double mean_reward = 0.0; // mean of header episodic rewards
	std::string config_hash;

	std::size_t transition_count() const;
};

/// Reads and validates every file; all must share one config hash and observation version.
DemoSet load_demo_set(const std::vector<std::filesystem::path>& paths, const DemoSetOptions& options = {});

/// Mean episodic reward recomputed from the raw transition rewards.
double recomputed_mean_reward(const DemoSet& set);

/// Capacity equals the transition count; everything enters at max priority; sealed.
replay::PrioritizedBuffer make_expert_buffer(const DemoSet& set, replay::PerParams params = {});

/// *.jsonl files in a directory, sorted by name.
std::vector<std::filesystem::path> list_trajectories(const std::filesystem::path& directory);

std::string content_hash(std::string_view bytes);

} // namespace sacfd::demos
