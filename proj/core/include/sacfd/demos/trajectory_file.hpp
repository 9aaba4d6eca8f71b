#pragma once

#include "sacfd/replay/transition.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sacfd::demos {

inline constexpr int kTrajectoryFormatVersion = 1;

enum class DemoSource { scripted, human, policy };

std::string_view to_string(DemoSource source);
DemoSource demo_source_from_string(std::string_view text);

struct TrajectoryHeader {
	int format_version = kTrajectoryFormatVersion;
	std::string config_hash;
	int observation_version = 0;
	double dt = 0.0;
	std::uint64_t seed = 0;
	DemoSource source = DemoSource::scripted;
	double episodic_reward = 0.0;
	std::string cause; // terminal cause of the episode

	bool operator==(const TrajectoryHeader&) const = default;
};

/// One recorded episode. Line 1 of the serialized form is the header, then one line per transition.
struct TrajectoryFile {
	TrajectoryHeader header;
	std::vector<replay::Transition> transitions;

	bool operator==(const TrajectoryFile&) const = default;
};

/// Left-to-right sum of the stored rewards.
double reward_sum(const std::vector<replay::Transition>& transitions);

/// Throws ConfigError on: empty episode, non-finite values, actions outside [-1, 1], a done
/// flag before the last transition, broken chaining, or a header reward that differs from
/// the stored sum.
void validate(const TrajectoryFile& file);

std::string serialize(const TrajectoryFile& file);
/// Parses and validates. Transitions are tagged as expert samples.
TrajectoryFile parse_trajectory(std::string_view text);

void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file);
TrajectoryFile read_trajectory(const std::filesystem::path& path);

} // namespace sacfd::demos
