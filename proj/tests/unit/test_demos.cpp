#include "oracles/idm_oracle.hpp"

#include "sacfd/demos/behavior_cloning.hpp"
#include "sacfd/demos/bridge_protocol.hpp"
#include "sacfd/demos/demo_bridge.hpp"
#include "sacfd/demos/demo_set.hpp"
#include "sacfd/demos/idm_expert.hpp"
#include "sacfd/demos/recorder.hpp"
#include "sacfd/demos/trajectory_file.hpp"
#include "sacfd/error.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <random>
#include <thread>

using namespace sacfd;
using namespace sacfd::demos;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
	const auto dir = fs::temp_directory_path() / ("sacfd-test-" + name);
	fs::remove_all(dir);
	fs::create_directories(dir);
	return dir;
}

/// Synthetic chained episode whose rewards sum to `total`.
TrajectoryFile synthetic(double total, const std::string& hash = "00000000000000aa", int steps = 4)
{
	TrajectoryFile f;
	f.header.config_hash = hash;
	f.header.observation_version = env::kObservationVersion;
	f.header.dt = 0.1;
	f.header.seed = 3;
	env::Observation s{};
	for (int k = 0; k < steps; ++k)
	{
		replay::Transition t;
		t.state = s;
		s[0] += 0.125;
		s[4] = 0.1 * (k + 1);
		t.next_state = s;
		t.action = 0.25 * (k % 3) - 0.25;
		t.reward = total / steps;
		t.done = k + 1 == steps;
		t.source = replay::Source::expert;
		f.transitions.push_back(t);
	}
	f.header.episodic_reward = reward_sum(f.transitions);
	f.header.cause = "destination";
	return f;
}

env::TrafficVehicle stopped_vehicle_ahead(const env::VehicleState& ego, double centre_distance)
{
	env::TrafficVehicle t;
	t.state.position = ego.front_bumper() + centre_distance * ego.forward();
	t.state.heading = ego.heading;
	t.state.speed = 0.0;
	return t;
}

} // namespace

// ---------------------------------------------------------------------------------------
// scripted expert

TEST(Idm, MatchesDirectFormulaOn100RandomStates)
{
	std::mt19937_64 rng(41);
	std::uniform_real_distribution<double> v(0.0, 14.0);
	std::uniform_real_distribution<double> gap(-1.0, 40.0);
	std::uniform_real_distribution<double> dv(-8.0, 8.0);
	std::bernoulli_distribution leader(0.8);
	const IdmConfig idm;
	for (int i = 0; i < 100; ++i)
	{
		const double sv = v(rng);
		const double sg = gap(rng);
		const double sdv = dv(rng);
		const bool has = leader(rng);
		const double lib = idm_acceleration(idm, sv, has ? std::optional(sg) : std::nullopt, sdv);
		const double ref = oracle::idm(sv, sg, sdv, has);
		ASSERT_NEAR(lib, ref, 1e-9) << "v=" << sv << " gap=" << sg << " dv=" << sdv;
	}
}

TEST(Idm, FreeRoadAtDesiredSpeedHolds)
{
	env::EnvConfig c;
	c.n_traffic = 0;
	env::Roundabout r(c);
	auto w = r.spawn(0);
	w.ego.speed = IdmConfig{}.desired_speed;
	EXPECT_NEAR(scripted_expert_action(r, w), 0.0, 1e-12);
}

TEST(Idm, StoppedLeaderAtMinimumGapForcesFullBraking)
{
	env::EnvConfig c;
	c.n_traffic = 0;
	env::Roundabout r(c);
	auto w = r.spawn(0);
	w.ego.speed = 5.0;
	w.traffic.push_back(stopped_vehicle_ahead(w.ego, IdmConfig{}.min_gap + 0.5 * c.vehicle_length));
	EXPECT_EQ(scripted_expert_action(r, w), -1.0);
}

TEST(Idm, RejectsNonPositiveParameters)
{
	IdmConfig idm;
	idm.time_headway = 0.0;
	EXPECT_THROW(idm.validate(), ConfigError);
}

// ---------------------------------------------------------------------------------------
// trajectory files

TEST(TrajectoryFile, SerializationIsByteStable)
{
	env::RoundaboutEnv e{env::EnvConfig{}};
	const auto outcome = run_episode(e, 7, scripted_controller(), DemoSource::scripted);
	const std::string once = serialize(outcome.trajectory);
	const auto parsed = parse_trajectory(once);
	EXPECT_EQ(parsed, outcome.trajectory);
	EXPECT_EQ(serialize(parsed), once);
	EXPECT_EQ(parsed.header.episodic_reward, reward_sum(parsed.transitions));
}

TEST(TrajectoryFile, HeaderLineCarriesTheSchema)
{
	const auto text = serialize(synthetic(10.0));
	const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
	for (const char* key : {"format", "version", "config_hash", "observation_version", "dt", "seed", "source", "episodic_reward",
			 "steps", "cause"})
	{
		EXPECT_TRUE(header.contains(key)) << key;
	}
	const auto start = text.find('\n') + 1;
	const auto line = nlohmann::json::parse(text.substr(start, text.find('\n', start) - start));
	for (const char* key : {"t", "s", "a", "r", "s2", "done"})
	{
		EXPECT_TRUE(line.contains(key)) << key;
	}
}

TEST(TrajectoryFile, RejectsBrokenInvariants)
{
	auto f = synthetic(10.0);
	f.transitions[1].next_state[2] = 0.5;
	EXPECT_THROW(validate(f), ConfigError);
	EXPECT_THROW(parse_trajectory(serialize(f)), ConfigError);

	f = synthetic(10.0);
	f.header.episodic_reward += 1e-9;
	EXPECT_THROW(validate(f), ConfigError);

	f = synthetic(10.0);
	f.transitions[0].done = true;
	EXPECT_THROW(validate(f), ConfigError);

	f = synthetic(10.0);
	f.transitions[0].action = 1.5;
	EXPECT_THROW(validate(f), ConfigError);

	f = synthetic(10.0);
	f.transitions.clear();
	EXPECT_THROW(validate(f), ConfigError);
}

// ---------------------------------------------------------------------------------------
// demo sets

TEST(DemoSet, ExpertMeanRewardAndBuffer)
{
	const auto dir = fresh_dir("demoset");
	write_trajectory(dir / "a.jsonl", synthetic(900.0));
	write_trajectory(dir / "b.jsonl", synthetic(1100.0));
	const auto set = load_demo_set(list_trajectories(dir));
	EXPECT_EQ(set.mean_reward, 1000.0);
	EXPECT_NEAR(recomputed_mean_reward(set), set.mean_reward, 1e-9);
	EXPECT_EQ(set.transition_count(), 8u);
	EXPECT_EQ(read_trajectory(dir / "a.jsonl"), synthetic(900.0));
	auto buffer = make_expert_buffer(set);
	EXPECT_EQ(buffer.size(), 8u);
	EXPECT_TRUE(buffer.sealed());
	EXPECT_EQ(buffer.at(0).source, replay::Source::expert);
	EXPECT_EQ(buffer.priority(5), 1.0);
}

TEST(DemoSet, HashMismatchNamesTheOffendingFile)
{
	const auto dir = fresh_dir("demoset-mismatch");
	write_trajectory(dir / "a.jsonl", synthetic(900.0));
	write_trajectory(dir / "b-odd.jsonl", synthetic(1100.0, "00000000000000bb"));
	try
	{
		load_demo_set(list_trajectories(dir));
		FAIL() << "mismatch accepted";
	}
	catch (const ConfigError& e)
	{
		EXPECT_NE(std::string(e.what()).find("b-odd.jsonl"), std::string::npos) << e.what();
	}
	DemoSetOptions expect;
	expect.config_hash = "00000000000000cc";
	EXPECT_THROW(load_demo_set({dir / "a.jsonl"}, expect), ConfigError);
}

TEST(DemoSet, MinimumRewardSkipsEpisodes)
{
	const auto dir = fresh_dir("demoset-min");
	write_trajectory(dir / "a.jsonl", synthetic(-50.0));
	write_trajectory(dir / "b.jsonl", synthetic(1100.0));
	DemoSetOptions options;
	options.min_demo_reward = 0.0;
	const auto set = load_demo_set(list_trajectories(dir), options);
	EXPECT_EQ(set.episodes.size(), 1u);
	EXPECT_EQ(set.skipped, 1u);
	EXPECT_EQ(set.mean_reward, 1100.0);
}

// ---------------------------------------------------------------------------------------
// recording

TEST(Recorder, ScriptedEpisodeIsReproducibleAndReplays)
{
	const auto dir = fresh_dir("recorder");
	env::EnvConfig config;
	env::RoundaboutEnv e1(config);
	env::RoundaboutEnv e2(config);
	const double r1 = record_episode(e1, 11, scripted_controller(), DemoSource::scripted, dir / "one.jsonl");
	const double r2 = record_episode(e2, 11, scripted_controller(), DemoSource::scripted, dir / "two.jsonl");
	EXPECT_EQ(r1, r2);
	EXPECT_EQ(numerics::read_text(dir / "one.jsonl"), numerics::read_text(dir / "two.jsonl"));

	const auto file = read_trajectory(dir / "one.jsonl");
	EXPECT_EQ(file.header.episodic_reward, r1);
	EXPECT_EQ(file.header.config_hash, env::config_hash(config));
	EXPECT_TRUE(replay_matches(config, file));

	auto tampered = file;
	tampered.transitions[3].action = tampered.transitions[3].action > 0.0 ? -1.0 : 1.0;
	EXPECT_FALSE(replay_matches(config, tampered));
}

TEST(Recorder, EpisodicRewardEqualsEnvSideSum)
{
	env::RoundaboutEnv e{env::EnvConfig{}};
	const auto outcome = run_episode(e, 12, scripted_controller(), DemoSource::scripted, true);
	env::Roundabout r{env::EnvConfig{}};
	auto w = r.spawn(12);
	ASSERT_TRUE(w == outcome.worlds.front());
	double total = 0.0;
	for (const auto& t : outcome.trajectory.transitions)
	{
		total += r.step(w, t.action).reward;
	}
	EXPECT_EQ(total, outcome.trajectory.header.episodic_reward);
	EXPECT_EQ(outcome.worlds.size(), outcome.trajectory.transitions.size() + 1);
}

TEST(Recorder, FailedWriteLeavesNoFile)
{
	const auto dir = fresh_dir("recorder-fail");
	numerics::write_text_atomically(dir / "blocker", "not a directory");
	env::RoundaboutEnv e{env::EnvConfig{}};
	EXPECT_ANY_THROW(record_episode(e, 1, scripted_controller(), DemoSource::scripted, dir / "blocker" / "x.jsonl"));
	std::size_t entries = 0;
	for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir))
	{
		++entries;
	}
	EXPECT_EQ(entries, 1u);
}

// ---------------------------------------------------------------------------------------
// behavior cloning

TEST(BehaviorCloning, MemorizesASingleRepeatedPair)
{
	replay::Transition t = synthetic(1.0).transitions[1];
	t.action = 0.6;
	std::vector<replay::Transition> data(256, t);
	BcConfig config;
	config.epochs = 300;
	config.learning_rate = 1e-3;
	config.hidden = {16, 16};
	const auto result = bc_train(data, {}, config);
	EXPECT_LT(result.history.back().train_loss, 1e-6);
	numerics::Vector s = Eigen::Map<const numerics::Vector>(t.state.data(), env::kObservationSize);
	EXPECT_NEAR(std::tanh(numerics::forward(result.policy, s)[0]), 0.6, 1e-3);
	EXPECT_TRUE(std::isnan(result.history.back().holdout_mse));
}

TEST(BehaviorCloning, HoldoutErrorFallsOverTheFirstEpochsOnScriptedDemos)
{
	DemoSet set;
	env::RoundaboutEnv e{env::EnvConfig{}};
	for (std::uint64_t seed = 0; seed < 50; ++seed)
	{
		set.episodes.push_back(run_episode(e, seed, scripted_controller(), DemoSource::scripted).trajectory);
	}
	BcConfig config;
	config.epochs = 5;
	const auto result = bc_train(set, config);
	ASSERT_EQ(result.history.size(), 5u);
	for (std::size_t k = 1; k < result.history.size(); ++k)
	{
		EXPECT_LE(result.history[k].holdout_mse, result.history[k - 1].holdout_mse) << "epoch " << k;
	}
}

// ---------------------------------------------------------------------------------------
// bridge protocol

TEST(BridgeProtocol, ClientMessagesRoundTrip)
{
	const ActionMessage a{12, -0.25};
	EXPECT_EQ(std::get<ActionMessage>(decode_client(encode(a))), a);
	for (auto cmd : {ControlCommand::reset, ControlCommand::save, ControlCommand::discard})
	{
		EXPECT_EQ(std::get<ControlMessage>(decode_client(encode(ControlMessage{cmd}))).cmd, cmd);
	}
	EXPECT_EQ(std::get<ActionMessage>(decode_client(R"({"seq":3,"a":0.5})")), (ActionMessage{3, 0.5}));
	EXPECT_EQ(std::get<ControlMessage>(decode_client(R"({"cmd":"save"})")).cmd, ControlCommand::save);
	EXPECT_THROW(decode_client(R"({"seq":3,"a":1.5})"), ConfigError);
	EXPECT_THROW(decode_client(R"({"cmd":"jump"})"), ConfigError);
	EXPECT_THROW(decode_client("not json"), ConfigError);
}

TEST(BridgeProtocol, ServerMessagesRoundTrip)
{
	env::Roundabout r{env::EnvConfig{}};
	auto w = r.spawn(4);
	const auto step = r.step(w, 0.5);
	const auto state = make_state(9, r, w, &step, 1.5);
	EXPECT_EQ(state.action, 0.5);
	EXPECT_EQ(std::get<StateMessage>(decode_server(encode(state))), state);
	const auto scene = make_scene(r, w, 4, 10);
	EXPECT_EQ(std::get<SceneMessage>(decode_server(encode(scene))), scene);
	const EpisodeEndMessage end{12.5, 30, "collision", std::string("demos/human-0000-4.jsonl")};
	EXPECT_EQ(std::get<EpisodeEndMessage>(decode_server(encode(end))), end);

	const auto j = nlohmann::json::parse(encode(state));
	EXPECT_EQ(j.at("type"), "state");
	for (const char* key : {"seq", "t", "ego", "traffic", "zones", "reward", "episodic_reward", "terminal", "cause"})
	{
		EXPECT_TRUE(j.contains(key)) << key;
	}
	EXPECT_TRUE(j.at("ego").contains("x") && j.at("ego").contains("v"));
	EXPECT_TRUE(j.at("zones").contains("d1") && j.at("zones").contains("d2"));
}

TEST(BridgeProtocol, MailboxDropsStaleMessages)
{
	ActionMailbox box;
	EXPECT_EQ(box.current(), 0.0);
	EXPECT_TRUE(box.offer({1, 0.4}));
	EXPECT_FALSE(box.offer({1, -0.9}));
	EXPECT_FALSE(box.offer({0, -0.9}));
	EXPECT_EQ(box.current(), 0.4);
	EXPECT_TRUE(box.offer({5, -0.2}));
	EXPECT_EQ(box.current(), -0.2);
	box.clear_action();
	EXPECT_EQ(box.current(), 0.0);
	EXPECT_FALSE(box.offer({4, 0.3}));
	box.reset();
	EXPECT_TRUE(box.offer({0, 0.3}));
}

// ---------------------------------------------------------------------------------------
// bridge session and server

TEST(BridgeSession, OneStateMessagePerTick)
{
	const auto dir = fresh_dir("session");
	BridgeSession session(env::EnvConfig{}, dir);
	const auto scene = decode_server(session.begin_episode());
	ASSERT_TRUE(std::holds_alternative<SceneMessage>(scene));
	int states = 0;
	for (int k = 0; k < 100 && session.phase() == BridgeSession::Phase::running; ++k)
	{
		const auto m = decode_server(session.tick(0.3));
		ASSERT_TRUE(std::holds_alternative<StateMessage>(m));
		++states;
	}
	EXPECT_EQ(states, 100);
	EXPECT_EQ(session.next_seq(), 101u);
}

TEST(BridgeSession, SaveWhileRunningIsAnErrorAndDiscardAborts)
{
	const auto dir = fresh_dir("session-control");
	BridgeSession session(env::EnvConfig{}, dir);
	session.begin_episode();
	session.tick(0.0);
	const auto err = session.control(ControlCommand::save);
	ASSERT_EQ(err.size(), 1u);
	EXPECT_EQ(nlohmann::json::parse(err[0]).at("type"), "error");
	const auto out = session.control(ControlCommand::discard);
	ASSERT_EQ(out.size(), 2u);
	const auto end = std::get<EpisodeEndMessage>(decode_server(out[0]));
	EXPECT_EQ(end.cause, "aborted");
	EXPECT_FALSE(end.saved_path);
	EXPECT_TRUE(std::holds_alternative<SceneMessage>(decode_server(out[1])));
	EXPECT_TRUE(fs::is_empty(dir));
}

TEST(BridgeServer, HeadlessClientWithoutActionsRecordsHeldZero)
{
	namespace beast = boost::beast;
	namespace websocket = beast::websocket;
	namespace net = boost::asio;

	const auto dir = fresh_dir("bridge");
	env::EnvConfig config;
	config.seed = 5;
	BridgeOptions options;
	options.port = 0;
	options.out_dir = dir;
	options.pacing_ms = 0;
	options.max_episodes = 1;
	DemoBridgeServer server(config, options);
	const auto port = server.port();
	ASSERT_NE(port, 0);
	std::vector<fs::path> saved;
	std::thread runner([&] { saved = server.run(); });

	net::io_context ioc;
	net::ip::tcp::resolver resolver(ioc);
	websocket::stream<net::ip::tcp::socket> ws(ioc);
	net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
	ws.handshake("127.0.0.1", "/");

	auto read = [&ws] {
		beast::flat_buffer buffer;
		ws.read(buffer);
		return decode_server(beast::buffers_to_string(buffer.data()));
	};
	const auto first = read();
	ASSERT_TRUE(std::holds_alternative<SceneMessage>(first));
	std::uint64_t last_seq = std::get<SceneMessage>(first).initial.seq;
	std::size_t states = 0;
	bool terminal = false;
	while (!terminal)
	{
		const auto m = read();
		ASSERT_TRUE(std::holds_alternative<StateMessage>(m));
		const auto& s = std::get<StateMessage>(m);
		ASSERT_GT(s.seq, last_seq);
		ASSERT_EQ(s.action, 0.0);
		last_seq = s.seq;
		++states;
		terminal = s.terminal;
	}
	ws.write(net::buffer(encode(ControlMessage{ControlCommand::save})));
	EpisodeEndMessage end;
	while (true)
	{
		const auto m = read();
		if (std::holds_alternative<EpisodeEndMessage>(m))
		{
			end = std::get<EpisodeEndMessage>(m);
			break;
		}
	}
	beast::error_code ec;
	ws.close(websocket::close_code::normal, ec);
	runner.join();

	EXPECT_EQ(end.steps, states);
	ASSERT_TRUE(end.saved_path);
	ASSERT_EQ(saved.size(), 1u);
	const auto file = read_trajectory(saved[0]);
	EXPECT_EQ(file.header.source, DemoSource::human);
	EXPECT_EQ(file.transitions.size(), states);
	for (const auto& t : file.transitions)
	{
		ASSERT_EQ(t.action, 0.0);
	}
	EXPECT_EQ(file.header.episodic_reward, end.episodic_reward);
	EXPECT_TRUE(replay_matches(config, file));
}
