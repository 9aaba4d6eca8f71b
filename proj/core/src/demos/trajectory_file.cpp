#include "sacfd/demos/trajectory_file.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>

namespace sacfd::demos {

namespace {

constexpr std::string_view kFormat = "sacfd-trajectory";

void append_number(std::string& out, double x)
{
	fmt::format_to(std::back_inserter(out), "{:.17g}", x);
}

void append_observation(std::string& out, const env::Observation& o)
{
	out += '[';
	for (std::size_t i = 0; i < o.size(); ++i)
	{
		if (i > 0)
		{
			out += ',';
		}
		append_number(out, o[i]);
	}
	out += ']';
}

bool finite(const env::Observation& o)
{
	for (double x : o)
	{
		if (!std::isfinite(x))
		{
			return false;
		}
	}
	return true;
}

env::Observation observation_from(const nlohmann::json& j)
{
	if (!j.is_array() || j.size() != env::kObservationSize)
	{
		throw ConfigError(fmt::format("observation must have {} entries", env::kObservationSize));
	}
	env::Observation o{};
	for (std::size_t i = 0; i < o.size(); ++i)
	{
		o[i] = j[i].get<double>();
	}
	return o;
}

} // namespace

std::string_view to_string(DemoSource source)
{
	switch (source)
	{
	case DemoSource::scripted:
		return "scripted";
	case DemoSource::human:
		return "human";
	case DemoSource::policy:
		return "policy";
	}
	return "unknown";
}

DemoSource demo_source_from_string(std::string_view text)
{
	if (text == "scripted")
	{
		return DemoSource::scripted;
	}
	if (text == "human")
	{
		return DemoSource::human;
	}
	if (text == "policy")
	{
		return DemoSource::policy;
	}
	throw ConfigError(fmt::format("unknown demo source '{}'", text));
}

double reward_sum(const std::vector<replay::Transition>& transitions)
{
	double sum = 0.0;
	for (const auto& t : transitions)
	{
		sum += t.reward;
	}
	return sum;
}

void validate(const TrajectoryFile& file)
{
	const auto& ts = file.transitions;
	if (ts.empty())
	{
		throw ConfigError("trajectory holds no transitions");
	}
	if (!std::isfinite(file.header.dt) || file.header.dt <= 0.0)
	{
		throw ConfigError("trajectory dt must be positive");
	}
	for (std::size_t t = 0; t < ts.size(); ++t)
	{
		const auto& tr = ts[t];
		if (!finite(tr.state) || !finite(tr.next_state) || !std::isfinite(tr.reward) || !std::isfinite(tr.action))
		{
			throw ConfigError(fmt::format("transition {} holds a non-finite value", t));
		}
		if (tr.action < -1.0 || tr.action > 1.0)
		{
			throw ConfigError(fmt::format("transition {} action {} outside [-1, 1]", t, tr.action));
		}
		if (tr.done && t + 1 != ts.size())
		{
			throw ConfigError(fmt::format("transition {} is terminal but not last", t));
		}
		if (t + 1 < ts.size() && tr.next_state != ts[t + 1].state)
		{
			throw ConfigError(fmt::format("chaining broken between transitions {} and {}", t, t + 1));
		}
	}
	const double sum = reward_sum(ts);
	if (sum != file.header.episodic_reward)
	{
		throw ConfigError(fmt::format("header reward {:.17g} differs from transition sum {:.17g}",
			file.header.episodic_reward, sum));
	}
}

std::string serialize(const TrajectoryFile& file)
{
	validate(file);
	const auto& h = file.header;
	std::string out;
	fmt::format_to(std::back_inserter(out),
		R"({{"format":"{}","version":{},"config_hash":"{}","observation_version":{},"dt":{:.17g},"seed":{},"source":"{}","episodic_reward":{:.17g},"steps":{},"cause":"{}"}})",
		kFormat, h.format_version, h.config_hash, h.observation_version, h.dt, h.seed, to_string(h.source),
		h.episodic_reward, file.transitions.size(), h.cause);
	out += '\n';
	for (std::size_t t = 0; t < file.transitions.size(); ++t)
	{
		const auto& tr = file.transitions[t];
		fmt::format_to(std::back_inserter(out), R"({{"t":{},"s":)", t);
		append_observation(out, tr.state);
		out += R"(,"a":)";
		append_number(out, tr.action);
		out += R"(,"r":)";
		append_number(out, tr.reward);
		out += R"(,"s2":)";
		append_observation(out, tr.next_state);
		out += tr.done ? R"(,"done":true})" : R"(,"done":false})";
		out += '\n';
	}
	return out;
}

TrajectoryFile parse_trajectory(std::string_view text)
{
	TrajectoryFile file;
	std::size_t line_no = 0;
	std::size_t expected_steps = 0;
	std::size_t pos = 0;
	try
	{
		while (pos < text.size())
		{
			std::size_t end = text.find('\n', pos);
			if (end == std::string_view::npos)
			{
				end = text.size();
			}
			const std::string_view line = text.substr(pos, end - pos);
			pos = end + 1;
			if (line.empty())
			{
				continue;
			}
			const auto j = nlohmann::json::parse(line);
			if (line_no == 0)
			{
				if (j.at("format").get<std::string>() != kFormat)
				{
					throw ConfigError("not a trajectory file");
				}
				auto& h = file.header;
				h.format_version = j.at("version").get<int>();
				if (h.format_version != kTrajectoryFormatVersion)
				{
					throw ConfigError(fmt::format("unsupported trajectory version {}", h.format_version));
				}
				h.config_hash = j.at("config_hash").get<std::string>();
				h.observation_version = j.at("observation_version").get<int>();
				h.dt = j.at("dt").get<double>();
				h.seed = j.at("seed").get<std::uint64_t>();
				h.source = demo_source_from_string(j.at("source").get<std::string>());
				h.episodic_reward = j.at("episodic_reward").get<double>();
				h.cause = j.at("cause").get<std::string>();
				expected_steps = j.at("steps").get<std::size_t>();
			}
			else
			{
				if (j.at("t").get<std::size_t>() != file.transitions.size())
				{
					throw ConfigError(fmt::format("line {}: transitions out of order", line_no + 1));
				}
				replay::Transition tr;
				tr.state = observation_from(j.at("s"));
				tr.action = j.at("a").get<double>();
				tr.reward = j.at("r").get<double>();
				tr.next_state = observation_from(j.at("s2"));
				tr.done = j.at("done").get<bool>();
				tr.source = replay::Source::expert;
				file.transitions.push_back(tr);
			}
			++line_no;
		}
	}
	catch (const nlohmann::json::exception& e)
	{
		throw ConfigError(fmt::format("trajectory line {}: {}", line_no + 1, e.what()));
	}
	if (line_no == 0)
	{
		throw ConfigError("empty trajectory file");
	}
	if (file.transitions.size() != expected_steps)
	{
		throw ConfigError(fmt::format("header announces {} steps, file holds {}", expected_steps, file.transitions.size()));
	}
	validate(file);
	return file;
}

void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file)
{
	numerics::write_text_atomically(path, serialize(file));
}

TrajectoryFile read_trajectory(const std::filesystem::path& path)
{
	try
	{
		return parse_trajectory(numerics::read_text(path));
	}
	catch (const ConfigError& e)
	{
		throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
	}
}

} // namespace sacfd::demos
