#include "sacfd/demos/demo_set.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>

namespace sacfd::demos {

std::size_t DemoSet::transition_count() const
{
	std::size_t n = 0;
	for (const auto& e : episodes)
	{
		n += e.transitions.size();
	}
	return n;
}

std::string content_hash(std::string_view bytes)
{
	std::uint64_t h = 14695981039346656037ULL;
	for (unsigned char c : bytes)
	{
		h ^= c;
		h *= 1099511628211ULL;
	}
	return fmt::format("{:016x}", h);
}

DemoSet load_demo_set(const std::vector<std::filesystem::path>& paths, const DemoSetOptions& options)
{
	if (paths.empty())
	{
		throw ConfigError("no demonstration files given");
	}
	DemoSet set;
	std::optional<std::string> hash = options.config_hash;
	std::optional<int> obs_version = options.observation_version;
	double reward_total = 0.0;
	for (const auto& path : paths)
	{
		const std::string bytes = numerics::read_text(path);
		TrajectoryFile file;
		try
		{
			file = parse_trajectory(bytes);
		}
		catch (const ConfigError& e)
		{
			throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
		}
		if (!hash)
		{
			hash = file.header.config_hash;
		}
		if (file.header.config_hash != *hash)
		{
			throw ConfigError(fmt::format("{}: config hash {} does not match {}", path.string(), file.header.config_hash, *hash));
		}
		if (!obs_version)
		{
			obs_version = file.header.observation_version;
		}
		if (file.header.observation_version != *obs_version)
		{
			throw ConfigError(fmt::format("{}: observation version {} does not match {}", path.string(),
				file.header.observation_version, *obs_version));
		}
		if (options.min_demo_reward && file.header.episodic_reward < *options.min_demo_reward)
		{
			spdlog::info("skipping {} (episodic reward {:.1f} below {:.1f})", path.string(), file.header.episodic_reward,
				*options.min_demo_reward);
			++set.skipped;
			continue;
		}
		reward_total += file.header.episodic_reward;
		set.paths.push_back(path);
		set.file_hashes.push_back(content_hash(bytes));
		set.episodes.push_back(std::move(file));
	}
	if (set.episodes.empty())
	{
		throw ConfigError("every demonstration file was filtered out");
	}
	set.config_hash = *hash;
	set.mean_reward = reward_total / static_cast<double>(set.episodes.size());
	return set;
}

double recomputed_mean_reward(const DemoSet& set)
{
	if (set.episodes.empty())
	{
		return 0.0;
	}
	double total = 0.0;
	for (const auto& e : set.episodes)
	{
		total += reward_sum(e.transitions);
	}
	return total / static_cast<double>(set.episodes.size());
}

replay::PrioritizedBuffer make_expert_buffer(const DemoSet& set, replay::PerParams params)
{
	const std::size_t n = set.transition_count();
	if (n == 0)
	{
		throw ContractError("expert buffer from an empty demo set");
	}
	replay::PrioritizedBuffer buffer(n, replay::Source::expert, params);
	for (const auto& e : set.episodes)
	{
		for (auto tr : e.transitions)
		{
			tr.source = replay::Source::expert;
			buffer.push(tr);
		}
	}
	buffer.seal();
	return buffer;
}

std::vector<std::filesystem::path> list_trajectories(const std::filesystem::path& directory)
{
	if (!std::filesystem::is_directory(directory))
	{
		throw ConfigError(fmt::format("demo directory {} does not exist", directory.string()));
	}
	std::vector<std::filesystem::path> out;
	for (const auto& entry : std::filesystem::directory_iterator(directory))
	{
		if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
		{
			out.push_back(entry.path());
		}
	}
	std::sort(out.begin(), out.end());
	return out;
}

} // namespace sacfd::demos
