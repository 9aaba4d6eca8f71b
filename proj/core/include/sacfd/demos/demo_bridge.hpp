#pragma once

#include "sacfd/demos/bridge_protocol.hpp"
#include "sacfd/demos/trajectory_file.hpp"
#include "sacfd/env/roundabout.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sacfd::demos {

/// Live-episode state machine behind the bridge, independent of any transport.
///
/// running: every tick steps the env with the held action and yields one state message.
/// awaiting_decision: the episode ended; a save or discard closes it and starts the next.
class BridgeSession {
public:
	enum class Phase { running, awaiting_decision };

	BridgeSession(env::EnvConfig config, std::filesystem::path out_dir);

	/// Resets the env and returns the scene message for the new episode.
	std::string begin_episode();
	Phase phase() const { return phase_; }

	/// One env step with `action`; returns the state message. Only valid while running.
	std::string tick(double action);

	/// Messages to send in response. reset/discard while running abandon the episode.
	std::vector<std::string> control(ControlCommand cmd);

	/// Client went away: drop the current episode without writing anything.
	void abandon();

	std::size_t decided_episodes() const { return decided_; }
	const std::vector<std::filesystem::path>& saved_paths() const { return saved_; }
	const env::RoundaboutEnv& environment() const { return env_; }
	std::uint64_t next_seq() const { return seq_; }

private:
	std::vector<std::string> finish(bool save, std::string_view cause_override);

	env::RoundaboutEnv env_;
	std::filesystem::path out_dir_;
	Phase phase_ = Phase::running;
	bool started_ = false;
	std::uint64_t seq_ = 0;
	std::uint64_t episode_seed_ = 0;
	env::Observation observation_{};
	std::vector<replay::Transition> transitions_;
	double episodic_reward_ = 0.0;
	env::TerminalCause cause_ = env::TerminalCause::none;
	std::size_t decided_ = 0;
	std::vector<std::filesystem::path> saved_;
};

struct BridgeOptions {
	std::string address = "127.0.0.1";
	unsigned short port = 0; // 0 picks a free port
	std::filesystem::path out_dir = "demos";
	/// Wall-clock interval between env steps; 0 runs as fast as possible.
	int pacing_ms = 100;
	/// Stop after this many saved or discarded episodes; 0 runs until stop().
	std::size_t max_episodes = 0;
};

/// WebSocket server for one client at a time. Network I/O runs on a background thread; the
/// env is stepped on the thread that calls run().
class DemoBridgeServer {
public:
	DemoBridgeServer(env::EnvConfig config, BridgeOptions options);
	~DemoBridgeServer();
	DemoBridgeServer(const DemoBridgeServer&) = delete;
	DemoBridgeServer& operator=(const DemoBridgeServer&) = delete;

	/// Bound port (resolved when options.port was 0).
	unsigned short port() const;
	/// Blocks until stop() or max_episodes decisions. Returns the saved trajectory paths.
	std::vector<std::filesystem::path> run();
	/// Thread-safe.
	void stop();

private:
	struct Impl;
	std::unique_ptr<Impl> impl_;
};

} // namespace sacfd::demos
