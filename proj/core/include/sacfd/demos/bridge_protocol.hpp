#pragma once

#include "sacfd/env/roundabout.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sacfd::demos {

inline constexpr int kBridgeProtocolVersion = 1;

struct VehicleView {
	double x = 0.0;
	double y = 0.0;
	double heading = 0.0;
	double v = 0.0;
	double length = 0.0;
	double width = 0.0;

	bool operator==(const VehicleView&) const = default;
};

/// server -> client, one per simulation step.
struct StateMessage {
	std::uint64_t seq = 0; // strictly increasing over the session
	double t = 0.0;        // simulated seconds since episode start
	VehicleView ego;
	std::vector<VehicleView> traffic; // active vehicles only
	std::optional<double> d1;
	std::optional<double> d2;
	double reward = 0.0;
	double episodic_reward = 0.0;
	bool terminal = false;
	std::string cause;
	double action = 0.0; // command applied this step

	bool operator==(const StateMessage&) const = default;
};

/// server -> client after each terminal step once the client decided to save or discard.
struct EpisodeEndMessage {
	double episodic_reward = 0.0;
	std::size_t steps = 0;
	std::string cause;
	std::optional<std::string> saved_path;

	bool operator==(const EpisodeEndMessage&) const = default;
};

/// server -> client on connect and after every reset: static layout plus the initial frame.
struct SceneMessage {
	int protocol_version = kBridgeProtocolVersion;
	double dt = 0.0;
	double ring_radius = 0.0;
	double lane_offset = 0.0;
	double zone1_half_angle_deg = 0.0;
	double zone1_radius = 0.0;
	double zone2_half_angle_deg = 0.0;
	double zone2_radius = 0.0;
	std::vector<std::pair<double, double>> ego_route; // polyline
	std::uint64_t episode_seed = 0;
	StateMessage initial;

	bool operator==(const SceneMessage&) const = default;
};

/// client -> server
struct ActionMessage {
	std::int64_t seq = 0;
	double a = 0.0;

	bool operator==(const ActionMessage&) const = default;
};

enum class ControlCommand { reset, save, discard };

struct ControlMessage {
	ControlCommand cmd = ControlCommand::reset;

	bool operator==(const ControlMessage&) const = default;
};

using ClientMessage = std::variant<ActionMessage, ControlMessage>;
using ServerMessage = std::variant<StateMessage, EpisodeEndMessage, SceneMessage>;

std::string_view to_string(ControlCommand cmd);

std::string encode(const StateMessage& m);
std::string encode(const EpisodeEndMessage& m);
std::string encode(const SceneMessage& m);
std::string encode(const ActionMessage& m);
std::string encode(const ControlMessage& m);
std::string encode_error(std::string_view message);

/// Accepts messages with or without a "type" field; without one the kind is inferred from
/// the keys ({seq, a} or {cmd}). Throws ConfigError on anything else, including actions
/// outside [-1, 1].
ClientMessage decode_client(std::string_view text);
ServerMessage decode_server(std::string_view text);

VehicleView view_of(const env::VehicleState& v);
StateMessage make_state(std::uint64_t seq, const env::Roundabout& roundabout, const env::WorldState& world,
	const env::StepResult* last_step, double episodic_reward);
SceneMessage make_scene(const env::Roundabout& roundabout, const env::WorldState& world, std::uint64_t episode_seed,
	std::uint64_t seq);

/// Single-slot, last-writer-wins action store shared between the network and env threads.
/// Messages whose seq is not above the last accepted one are dropped.
class ActionMailbox {
public:
	/// Returns false when the message was stale.
	bool offer(const ActionMessage& m);
	/// Current held action (0 until the first accepted message).
	double current() const;
	/// Back to the held-zero state for a new episode; the seq watermark is kept.
	void clear_action();
	/// New client: forget the seq watermark as well.
	void reset();
	std::int64_t last_seq() const;

private:
	mutable std::mutex mutex_;
	double action_ = 0.0;
	std::int64_t last_seq_ = -1;
};

} // namespace sacfd::demos
