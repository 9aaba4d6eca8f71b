#include "sacfd/cli/plot.hpp"
#include "sacfd/cli/rollout.hpp"
#include "sacfd/cli/train.hpp"
#include "sacfd/demos/demo_bridge.hpp"
#include "sacfd/demos/recorder.hpp"
#include "sacfd/error.hpp"
#include "sacfd/learner/checkpoint.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>

using namespace sacfd;

namespace {

demos::DemoBridgeServer* g_server = nullptr;

void on_signal(int)
{
	if (g_server != nullptr)
	{
		g_server->stop();
	}
}

env::EnvConfig load_env(const std::string& path)
{
	return path.empty() ? env::EnvConfig{} : env::load_env_config(path);
}

/// Config hash stored alongside a policy file, when there is one to compare against.
std::optional<std::string> checkpoint_hash(const std::filesystem::path& path)
{
	auto j = nlohmann::json::parse(numerics::read_text(path), nullptr, false);
	if (!j.is_discarded() && j.contains("config_hash"))
	{
		return j.at("config_hash").get<std::string>();
	}
	// A parameter file inside a run directory inherits the run's hash.
	for (auto dir = std::filesystem::absolute(path).parent_path(); !dir.empty() && dir != dir.root_path();
		 dir = dir.parent_path())
	{
		const auto meta = dir / "run.json";
		if (std::filesystem::exists(meta))
		{
			auto m = nlohmann::json::parse(numerics::read_text(meta), nullptr, false);
			if (!m.is_discarded() && m.contains("env_config_hash"))
			{
				return m.at("env_config_hash").get<std::string>();
			}
			break;
		}
	}
	return std::nullopt;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Soft actor-critic from demonstrations on a roundabout simulator"};
	app.require_subcommand(1);
	app.fallthrough();
	std::string log_level = "info";
	app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

	// shared options
	std::string config_path;
	std::vector<std::uint64_t> seeds;
	std::uint64_t seed = 0;
	std::string out;

	auto* train = app.add_subcommand("train", "train SAC-fD, plain SAC (--no-demos) or BC (--bc)");
	cli::RunConfig run;
	bool no_demos = false;
	double min_demo_reward = 0.0;
	std::int64_t steps = run.total_steps;
	std::string demo_dir = run.demo_dir.string();
	std::string train_out = run.out_dir.string();
	train->add_option("--config", config_path, "environment config file (key = value)");
	train->add_option("--seed", seeds, "seed(s); several run sequentially")->capture_default_str();
	train->add_option("--steps", steps, "environment steps")->capture_default_str();
	train->add_flag("--no-demos", no_demos, "plain SAC: rho pinned to 1, expert buffer unused");
	train->add_flag("--shield", run.shield, "enable the safety shield");
	train->add_flag("--bc", run.bc, "behavior cloning baseline instead of SAC");
	auto* min_reward_opt = train->add_option("--min-demo-reward", min_demo_reward, "skip demos below this episodic reward");
	train->add_option("--demos", demo_dir, "directory of demonstration .jsonl files")->capture_default_str();
	train->add_option("--out", train_out, "output root; one directory per seed")->capture_default_str();
	train->add_option("--eval-interval", run.eval_interval, "steps between evaluations")->capture_default_str();
	train->add_option("--eval-episodes", run.eval_episodes, "episodes per evaluation")->capture_default_str();
	train->add_option("--bc-epochs", run.bc_epochs, "behavior cloning epochs")->capture_default_str();

	auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (or the scripted expert) deterministically");
	std::string checkpoint;
	int episodes = 50;
	bool scripted = false;
	bool shield = false;
	eval->add_option("--checkpoint", checkpoint, "learner checkpoint or policy parameter file");
	eval->add_flag("--scripted", scripted, "evaluate the IDM expert instead");
	eval->add_option("--config", config_path, "environment config file");
	eval->add_option("--seed", seed, "first episode seed")->capture_default_str();
	eval->add_option("--episodes", episodes, "episode count")->capture_default_str();
	eval->add_flag("--shield", shield, "enable the safety shield");
	eval->add_option("--out", out, "write the report as JSON here");

	auto* record = app.add_subcommand("record", "record demonstration episodes");
	std::string controller = "scripted";
	std::string record_out = "demos";
	record->add_option("--controller", controller, "scripted|policy")->check(CLI::IsMember({"scripted", "policy"}))->capture_default_str();
	record->add_option("--checkpoint", checkpoint, "policy for --controller policy");
	record->add_option("--config", config_path, "environment config file");
	record->add_option("--seed", seed, "first episode seed")->capture_default_str();
	record->add_option("--episodes", episodes, "episode count")->capture_default_str();
	record->add_option("--out", record_out, "output directory")->capture_default_str();

	auto* serve = app.add_subcommand("serve", "live demo bridge for the cockpit UI");
	demos::BridgeOptions bridge;
	std::string serve_out = bridge.out_dir.string();
	serve->add_option("--config", config_path, "environment config file");
	serve->add_option("--seed", seed, "episode seed stream")->capture_default_str();
	serve->add_option("--address", bridge.address, "listen address")->capture_default_str();
	serve->add_option("--port", bridge.port, "port; 0 picks a free one")->capture_default_str();
	serve->add_option("--pacing-ms", bridge.pacing_ms, "wall-clock milliseconds per step")->capture_default_str();
	serve->add_option("--episodes", bridge.max_episodes, "stop after this many decided episodes (0 = never)")
		->capture_default_str();
	serve->add_option("--out", serve_out, "directory for saved episodes")->capture_default_str();

	auto* plot = app.add_subcommand("plot", "reward-vs-step SVG for one or more runs");
	std::vector<std::string> run_dirs;
	std::string plot_out = "reward.svg";
	plot->add_option("runs", run_dirs, "run directories")->required();
	plot->add_option("--out", plot_out, "SVG output path")->capture_default_str();

	CLI11_PARSE(app, argc, argv);
	spdlog::set_level(spdlog::level::from_str(log_level));

	try
	{
		if (*train)
		{
			if (!config_path.empty())
			{
				run.env_config_path = config_path;
			}
			run.env = load_env(config_path);
			run.demos = !no_demos;
			run.total_steps = steps;
			run.demo_dir = demo_dir;
			run.out_dir = train_out;
			if (!seeds.empty())
			{
				run.seeds = seeds;
			}
			if (*min_reward_opt)
			{
				run.min_demo_reward = min_demo_reward;
			}
			run.validate();
			for (auto s : run.seeds)
			{
				const auto summary = cli::train_run(run, s);
				fmt::print("{}\n", summary.run_dir.string());
			}
		}
		else if (*eval)
		{
			auto config = load_env(config_path);
			config.shield = shield;
			config.validate();
			demos::Controller ctl;
			if (scripted)
			{
				ctl = demos::scripted_controller();
			}
			else
			{
				if (checkpoint.empty())
				{
					throw ConfigError("eval needs --checkpoint or --scripted");
				}
				if (const auto hash = checkpoint_hash(checkpoint); hash && *hash != env::config_hash(config))
				{
					throw ConfigError(fmt::format("checkpoint was trained on env config {} but this config hashes to {}", *hash,
						env::config_hash(config)));
				}
				ctl = demos::policy_controller(learner::load_policy(checkpoint));
			}
			const auto report = cli::evaluate(config, ctl, episodes, seed);
			const auto j = cli::to_json(report);
			fmt::print("{}\n", j.dump(2));
			if (!out.empty())
			{
				numerics::write_text_atomically(out, j.dump(2) + "\n");
			}
		}
		else if (*record)
		{
			auto config = load_env(config_path);
			config.validate();
			demos::Controller ctl = demos::scripted_controller();
			auto source = demos::DemoSource::scripted;
			if (controller == "policy")
			{
				if (checkpoint.empty())
				{
					throw ConfigError("--controller policy needs --checkpoint");
				}
				ctl = demos::policy_controller(learner::load_policy(checkpoint));
				source = demos::DemoSource::policy;
			}
			std::filesystem::create_directories(record_out);
			env::RoundaboutEnv environment(config);
			int successes = 0;
			for (int e = 0; e < episodes; ++e)
			{
				const auto episode_seed = seed + static_cast<std::uint64_t>(e);
				const auto path = std::filesystem::path(record_out) / fmt::format("{}-{:04d}.jsonl", controller, e);
				const auto outcome = demos::run_episode(environment, episode_seed, ctl, source);
				demos::write_trajectory(path, outcome.trajectory);
				successes += outcome.cause == env::TerminalCause::destination;
				spdlog::info("{}: reward {:.2f}, {} steps, {}", path.string(), outcome.trajectory.header.episodic_reward,
					outcome.trajectory.transitions.size(), env::to_string(outcome.cause));
			}
			fmt::print("recorded {} episodes, {} reached the destination\n", episodes, successes);
		}
		else if (*serve)
		{
			auto config = load_env(config_path);
			config.seed = seed;
			config.validate();
			bridge.out_dir = serve_out;
			demos::DemoBridgeServer server(config, bridge);
			g_server = &server;
			std::signal(SIGINT, on_signal);
			std::signal(SIGTERM, on_signal);
			fmt::print("{}\n", server.port());
			std::fflush(stdout);
			const auto saved = server.run();
			g_server = nullptr;
			fmt::print("saved {} episodes\n", saved.size());
		}
		else if (*plot)
		{
			std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
			cli::plot_runs(dirs, plot_out);
			fmt::print("{}\n", plot_out);
		}
	}
	catch (const ConfigError& e)
	{
		spdlog::error("{}", e.what());
		return 2;
	}
	catch (const std::exception& e)
	{
		spdlog::error("{}", e.what());
		return 3;
	}
	return 0;
}
