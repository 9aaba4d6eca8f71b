#include "sacfd/env/config.hpp"

#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace sacfd::env {

namespace {

using Field = std::variant<double*, int*, bool*, std::uint64_t*>;

struct FieldEntry {
	const char* key;
	bool hashed;
};

// Order here is the canonical text order.
std::vector<std::pair<FieldEntry, Field>> fields(EnvConfig& c)
{
	return {
		{{"ring_radius", true}, &c.ring_radius},
		{{"arm_length", true}, &c.arm_length},
		{{"lane_offset", true}, &c.lane_offset},
		{{"n_traffic", true}, &c.n_traffic},
		{{"ego_entry_arm", true}, &c.ego_entry_arm},
		{{"ego_exit_arm", true}, &c.ego_exit_arm},
		{{"destination_offset", true}, &c.destination_offset},
		{{"destination_window", true}, &c.destination_window},
		{{"spawn_jitter", true}, &c.spawn_jitter},
		{{"spawn_position", true}, &c.spawn_position},
		{{"vehicle_length", true}, &c.vehicle_length},
		{{"vehicle_width", true}, &c.vehicle_width},
		{{"wheelbase", true}, &c.wheelbase},
		{{"a_max", true}, &c.a_max},
		{{"b_max", true}, &c.b_max},
		{{"max_steer_deg", true}, &c.max_steer_deg},
		{{"lookahead_gain", true}, &c.lookahead_gain},
		{{"lookahead_min", true}, &c.lookahead_min},
		{{"lookahead_max", true}, &c.lookahead_max},
		{{"traffic_speed", true}, &c.traffic_speed},
		{{"traffic_gain", true}, &c.traffic_gain},
		{{"traffic_sector_radius", true}, &c.traffic_sector_radius},
		{{"traffic_sector_angle_deg", true}, &c.traffic_sector_angle_deg},
		{{"traffic_stuck_steps", true}, &c.traffic_stuck_steps},
		{{"traffic_predict_horizon", true}, &c.traffic_predict_horizon},
		{{"traffic_predict_margin", true}, &c.traffic_predict_margin},
		{{"v_max", true}, &c.v_max},
		{{"v_min", true}, &c.v_min},
		{{"zone1_angle_deg", true}, &c.zone1.angle_deg},
		{{"zone1_radius", true}, &c.zone1.radius},
		{{"zone2_angle_deg", true}, &c.zone2.angle_deg},
		{{"zone2_radius", true}, &c.zone2.radius},
		{{"lambda_s", true}, &c.lambda_s},
		{{"step_penalty", true}, &c.step_penalty},
		{{"collision_penalty", true}, &c.collision_penalty},
		{{"dt", true}, &c.dt},
		{{"max_steps", true}, &c.max_steps},
		{{"shield", false}, &c.shield},
		{{"d_brake", false}, &c.d_brake},
		{{"seed", false}, &c.seed},
	};
}

std::string trim(std::string_view s)
{
	const auto first = s.find_first_not_of(" \t\r");
	if (first == std::string_view::npos)
	{
		return {};
	}
	const auto last = s.find_last_not_of(" \t\r");
	return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
	T out{};
	const auto* end = value.data() + value.size();
	auto [ptr, ec] = std::from_chars(value.data(), end, out);
	if (ec != std::errc() || ptr != end)
	{
		throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, value));
	}
	return out;
}

void set_field(const std::string& key, Field field, const std::string& value)
{
	std::visit(
		[&](auto* target) {
			using T = std::remove_pointer_t<decltype(target)>;
			if constexpr (std::is_same_v<T, bool>)
			{
				if (value == "true" || value == "1" || value == "on")
				{
					*target = true;
				}
				else if (value == "false" || value == "0" || value == "off")
				{
					*target = false;
				}
				else
				{
					throw ConfigError(fmt::format("config key '{}': expected a boolean, got '{}'", key, value));
				}
			}
			else
			{
				*target = parse_number<T>(key, value);
			}
		},
		field);
}

std::string format_field(Field field)
{
	return std::visit(
		[](auto* target) -> std::string {
			using T = std::remove_pointer_t<decltype(target)>;
			if constexpr (std::is_same_v<T, bool>)
			{
				return *target ? "true" : "false";
			}
			else if constexpr (std::is_same_v<T, double>)
			{
				return fmt::format("{:.17g}", *target);
			}
			else
			{
				return fmt::format("{}", *target);
			}
		},
		field);
}

std::string canonical_text(const EnvConfig& config, bool hashed_only)
{
	EnvConfig copy = config;
	std::string text;
	for (const auto& [entry, field] : fields(copy))
	{
		if (hashed_only && !entry.hashed)
		{
			continue;
		}
		text += fmt::format("{} = {}\n", entry.key, format_field(field));
	}
	return text;
}

void require(bool condition, const char* message)
{
	if (!condition)
	{
		throw ConfigError(fmt::format("invalid environment config: {}", message));
	}
}

} // namespace

void EnvConfig::validate() const
{
	require(ring_radius > 0.0, "ring_radius must be > 0");
	require(arm_length > 10.0, "arm_length must be > 10");
	require(n_traffic >= 0, "n_traffic must be >= 0");
	require(ego_entry_arm >= 0 && ego_entry_arm < 4 && ego_exit_arm >= 0 && ego_exit_arm < 4, "arms are numbered 0..3");
	require(ego_entry_arm != ego_exit_arm, "ego entry and exit arms must differ");
	require(vehicle_length > 0.0 && vehicle_width > 0.0 && wheelbase > 0.0, "vehicle dimensions must be > 0");
	require(a_max > 0.0 && b_max > 0.0, "actuation limits must be > 0");
	require(lookahead_min > 0.0 && lookahead_max >= lookahead_min, "lookahead bounds");
	for (const auto* zone : {&zone1, &zone2})
	{
		require(zone->radius > 0.0, "zone radius must be > 0");
		require(zone->angle_deg > 0.0 && zone->angle_deg < 180.0, "zone angle must lie in (0, 180)");
	}
	require(lambda_s >= 0.0 && lambda_s <= 1.0, "lambda_s must lie in [0, 1]");
	require(v_max > 0.0 && v_min >= 0.0, "speed thresholds");
	require(dt > 0.0, "dt must be > 0");
	require(max_steps > 0, "max_steps must be > 0");
	require(traffic_stuck_steps > 0, "traffic_stuck_steps must be > 0");
	require(traffic_predict_horizon >= 0.0 && traffic_predict_margin >= 0.0, "traffic prediction settings must be >= 0");
}

EnvConfig parse_env_config(const std::string& text)
{
	EnvConfig config;
	auto table = fields(config);
	std::istringstream in(text);
	std::string line;
	int line_no = 0;
	while (std::getline(in, line))
	{
		++line_no;
		if (const auto hash = line.find('#'); hash != std::string::npos)
		{
			line.erase(hash);
		}
		const auto content = trim(line);
		if (content.empty())
		{
			continue;
		}
		const auto eq = content.find('=');
		if (eq == std::string::npos)
		{
			throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
		}
		const auto key = trim(std::string_view(content).substr(0, eq));
		const auto value = trim(std::string_view(content).substr(eq + 1));
		auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return key == f.first.key; });
		if (it == table.end())
		{
			throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
		}
		set_field(key, it->second, value);
	}
	config.validate();
	return config;
}

EnvConfig load_env_config(const std::filesystem::path& path)
{
	return parse_env_config(numerics::read_text(path));
}

std::string to_text(const EnvConfig& config)
{
	return canonical_text(config, false);
}

std::string config_hash(const EnvConfig& config)
{
	std::uint64_t h = 1469598103934665603ULL;
	for (unsigned char ch : canonical_text(config, true))
	{
		h ^= ch;
		h *= 1099511628211ULL;
	}
	return fmt::format("{:016x}", h);
}

} // namespace sacfd::env
