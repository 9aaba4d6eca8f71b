#include "sacfd/demos/bridge_protocol.hpp"

#include "sacfd/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>

namespace sacfd::demos {

namespace {

using nlohmann::json;

json vehicle_json(const VehicleView& v)
{
	return {{"x", v.x}, {"y", v.y}, {"heading", v.heading}, {"v", v.v}, {"length", v.length}, {"width", v.width}};
}

VehicleView vehicle_from(const json& j)
{
	return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>(), j.at("v").get<double>(),
		j.value("length", 0.0), j.value("width", 0.0)};
}

json optional_json(const std::optional<double>& x)
{
	return x ? json(*x) : json(nullptr);
}

std::optional<double> optional_from(const json& j)
{
	if (j.is_null())
	{
		return std::nullopt;
	}
	return j.get<double>();
}

json state_json(const StateMessage& m)
{
	json traffic = json::array();
	for (const auto& v : m.traffic)
	{
		traffic.push_back(vehicle_json(v));
	}
	return {{"type", "state"}, {"seq", m.seq}, {"t", m.t}, {"ego", vehicle_json(m.ego)}, {"traffic", traffic},
		{"zones", {{"d1", optional_json(m.d1)}, {"d2", optional_json(m.d2)}}}, {"reward", m.reward},
		{"episodic_reward", m.episodic_reward}, {"terminal", m.terminal}, {"cause", m.cause}, {"a", m.action}};
}

StateMessage state_from(const json& j)
{
	StateMessage m;
	m.seq = j.at("seq").get<std::uint64_t>();
	m.t = j.at("t").get<double>();
	m.ego = vehicle_from(j.at("ego"));
	for (const auto& v : j.at("traffic"))
	{
		m.traffic.push_back(vehicle_from(v));
	}
	m.d1 = optional_from(j.at("zones").at("d1"));
	m.d2 = optional_from(j.at("zones").at("d2"));
	m.reward = j.at("reward").get<double>();
	m.episodic_reward = j.at("episodic_reward").get<double>();
	m.terminal = j.at("terminal").get<bool>();
	m.cause = j.at("cause").get<std::string>();
	m.action = j.value("a", 0.0);
	return m;
}

ControlCommand command_from(std::string_view s)
{
	if (s == "reset")
	{
		return ControlCommand::reset;
	}
	if (s == "save")
	{
		return ControlCommand::save;
	}
	if (s == "discard")
	{
		return ControlCommand::discard;
	}
	throw ConfigError(fmt::format("unknown control command '{}'", s));
}

json parse(std::string_view text)
{
	try
	{
		auto j = json::parse(text);
		if (!j.is_object())
		{
			throw ConfigError("message is not a JSON object");
		}
		return j;
	}
	catch (const json::parse_error& e)
	{
		throw ConfigError(fmt::format("malformed message: {}", e.what()));
	}
}

} // namespace

std::string_view to_string(ControlCommand cmd)
{
	switch (cmd)
	{
	case ControlCommand::reset:
		return "reset";
	case ControlCommand::save:
		return "save";
	case ControlCommand::discard:
		return "discard";
	}
	return "unknown";
}

std::string encode(const StateMessage& m)
{
	return state_json(m).dump();
}

std::string encode(const EpisodeEndMessage& m)
{
	json j{{"type", "episode_end"}, {"episodic_reward", m.episodic_reward}, {"steps", m.steps}, {"cause", m.cause}};
	if (m.saved_path)
	{
		j["saved_path"] = *m.saved_path;
	}
	return j.dump();
}

std::string encode(const SceneMessage& m)
{
	json route = json::array();
	for (const auto& [x, y] : m.ego_route)
	{
		route.push_back({x, y});
	}
	return json{{"type", "scene"}, {"protocol_version", m.protocol_version}, {"dt", m.dt}, {"ring_radius", m.ring_radius},
		{"lane_offset", m.lane_offset},
		{"zones",
			{{"z1", {{"half_angle_deg", m.zone1_half_angle_deg}, {"radius", m.zone1_radius}}},
				{"z2", {{"half_angle_deg", m.zone2_half_angle_deg}, {"radius", m.zone2_radius}}}}},
		{"ego_route", route}, {"episode_seed", m.episode_seed}, {"initial", state_json(m.initial)}}
		.dump();
}

std::string encode(const ActionMessage& m)
{
	return json{{"type", "action"}, {"seq", m.seq}, {"a", m.a}}.dump();
}

std::string encode(const ControlMessage& m)
{
	return json{{"type", "control"}, {"cmd", to_string(m.cmd)}}.dump();
}

std::string encode_error(std::string_view message)
{
	return json{{"type", "error"}, {"message", message}}.dump();
}

ClientMessage decode_client(std::string_view text)
{
	const json j = parse(text);
	try
	{
		std::string type = j.value("type", "");
		if (type.empty())
		{
			type = j.contains("cmd") ? "control" : (j.contains("a") ? "action" : "");
		}
		if (type == "action")
		{
			ActionMessage m{j.at("seq").get<std::int64_t>(), j.at("a").get<double>()};
			if (!std::isfinite(m.a) || m.a < -1.0 || m.a > 1.0)
			{
				throw ConfigError(fmt::format("action {} outside [-1, 1]", m.a));
			}
			return m;
		}
		if (type == "control")
		{
			return ControlMessage{command_from(j.at("cmd").get<std::string>())};
		}
		throw ConfigError(fmt::format("unknown client message type '{}'", type));
	}
	catch (const json::exception& e)
	{
		throw ConfigError(fmt::format("malformed client message: {}", e.what()));
	}
}

ServerMessage decode_server(std::string_view text)
{
	const json j = parse(text);
	try
	{
		const std::string type = j.at("type").get<std::string>();
		if (type == "state")
		{
			return state_from(j);
		}
		if (type == "episode_end")
		{
			EpisodeEndMessage m;
			m.episodic_reward = j.at("episodic_reward").get<double>();
			m.steps = j.at("steps").get<std::size_t>();
			m.cause = j.at("cause").get<std::string>();
			if (j.contains("saved_path"))
			{
				m.saved_path = j.at("saved_path").get<std::string>();
			}
			return m;
		}
		if (type == "scene")
		{
			SceneMessage m;
			m.protocol_version = j.at("protocol_version").get<int>();
			m.dt = j.at("dt").get<double>();
			m.ring_radius = j.at("ring_radius").get<double>();
			m.lane_offset = j.at("lane_offset").get<double>();
			const auto& z = j.at("zones");
			m.zone1_half_angle_deg = z.at("z1").at("half_angle_deg").get<double>();
			m.zone1_radius = z.at("z1").at("radius").get<double>();
			m.zone2_half_angle_deg = z.at("z2").at("half_angle_deg").get<double>();
			m.zone2_radius = z.at("z2").at("radius").get<double>();
			for (const auto& p : j.at("ego_route"))
			{
				m.ego_route.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
			}
			m.episode_seed = j.at("episode_seed").get<std::uint64_t>();
			m.initial = state_from(j.at("initial"));
			return m;
		}
		throw ConfigError(fmt::format("unknown server message type '{}'", type));
	}
	catch (const json::exception& e)
	{
		throw ConfigError(fmt::format("malformed server message: {}", e.what()));
	}
}

VehicleView view_of(const env::VehicleState& v)
{
	return {v.position.x(), v.position.y(), v.heading, v.speed, v.length, v.width};
}

StateMessage make_state(std::uint64_t seq, const env::Roundabout& roundabout, const env::WorldState& world,
	const env::StepResult* last_step, double episodic_reward)
{
	StateMessage m;
	m.seq = seq;
	m.t = world.step * roundabout.config().dt;
	m.ego = view_of(world.ego);
	for (const auto& t : world.traffic)
	{
		if (t.active)
		{
			m.traffic.push_back(view_of(t.state));
		}
	}
	const auto zones = last_step ? last_step->zones : roundabout.detect_zones(world);
	m.d1 = zones.d1;
	m.d2 = zones.d2;
	m.episodic_reward = episodic_reward;
	m.cause = std::string(env::to_string(env::TerminalCause::none));
	if (last_step)
	{
		m.reward = last_step->reward;
		m.terminal = last_step->terminal;
		m.cause = std::string(env::to_string(last_step->cause));
		m.action = last_step->applied_action;
	}
	return m;
}

SceneMessage make_scene(const env::Roundabout& roundabout, const env::WorldState& world, std::uint64_t episode_seed,
	std::uint64_t seq)
{
	const auto& c = roundabout.config();
	SceneMessage m;
	m.dt = c.dt;
	m.ring_radius = c.ring_radius;
	m.lane_offset = c.lane_offset;
	m.zone1_half_angle_deg = c.zone1.angle_deg;
	m.zone1_radius = c.zone1.radius;
	m.zone2_half_angle_deg = c.zone2.angle_deg;
	m.zone2_radius = c.zone2.radius;
	const auto& route = roundabout.routes()[static_cast<std::size_t>(roundabout.ego_route())];
	const auto& pts = route.waypoints();
	for (std::size_t i = 0; i < pts.size(); i += 4)
	{
		m.ego_route.emplace_back(pts[i].x(), pts[i].y());
	}
	m.ego_route.emplace_back(pts.back().x(), pts.back().y());
	m.episode_seed = episode_seed;
	m.initial = make_state(seq, roundabout, world, nullptr, 0.0);
	return m;
}

bool ActionMailbox::offer(const ActionMessage& m)
{
	std::lock_guard lock(mutex_);
	if (m.seq <= last_seq_)
	{
		return false;
	}
	last_seq_ = m.seq;
	action_ = m.a;
	return true;
}

double ActionMailbox::current() const
{
	std::lock_guard lock(mutex_);
	return action_;
}

void ActionMailbox::clear_action()
{
	std::lock_guard lock(mutex_);
	action_ = 0.0;
}

void ActionMailbox::reset()
{
	std::lock_guard lock(mutex_);
	action_ = 0.0;
	last_seq_ = -1;
}

std::int64_t ActionMailbox::last_seq() const
{
	std::lock_guard lock(mutex_);
	return last_seq_;
}

} // namespace sacfd::demos
