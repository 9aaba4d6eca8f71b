#include "sacfd/cli/plot.hpp"
#include "sacfd/cli/rollout.hpp"
#include "sacfd/cli/run_config.hpp"
#include "sacfd/cli/train.hpp"
#include "sacfd/demos/demo_set.hpp"
#include "sacfd/demos/recorder.hpp"
#include "sacfd/demos/trajectory_file.hpp"
#include "sacfd/error.hpp"
#include "sacfd/learner/learner.hpp"
#include "sacfd/numerics/checkpoint.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace sacfd;
using namespace sacfd::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
	const auto dir = fs::temp_directory_path() / ("sacfd-cli-" + name);
	fs::remove_all(dir);
	fs::create_directories(dir);
	return dir;
}

fs::path scripted_demos(const std::string& name, int episodes)
{
	const auto dir = fresh_dir(name);
	env::RoundaboutEnv e{env::EnvConfig{}};
	for (int i = 0; i < episodes; ++i)
	{
		demos::record_episode(e, static_cast<std::uint64_t>(i), demos::scripted_controller(), demos::DemoSource::scripted,
			dir / ("scripted-" + std::to_string(i) + ".jsonl"));
	}
	return dir;
}

RunConfig short_run(const fs::path& out, const fs::path& demo_dir)
{
	RunConfig r;
	r.demo_dir = demo_dir;
	r.out_dir = out;
	r.total_steps = 1600;
	r.eval_interval = 800;
	r.eval_episodes = 2;
	r.metrics_interval = 50;
	r.learner.warmup_steps = 1000;
	return r;
}

std::vector<std::string> csv_column(const fs::path& path, const std::string& name)
{
	std::istringstream in(numerics::read_text(path));
	std::string line;
	std::getline(in, line); // schema line
	std::getline(in, line);
	std::vector<std::string> header;
	{
		std::istringstream h(line);
		std::string f;
		while (std::getline(h, f, ','))
		{
			header.push_back(f);
		}
	}
	const auto col = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
	std::vector<std::string> out;
	while (std::getline(in, line))
	{
		std::istringstream l(line);
		std::string f;
		for (std::size_t i = 0; std::getline(l, f, ','); ++i)
		{
			if (i == col)
			{
				out.push_back(f);
			}
		}
	}
	return out;
}

#ifdef SACFD_CLI_PATH
struct Command {
	int exit_code = -1;
	std::string output;
};

Command run_cli(const std::string& args)
{
	Command c;
	FILE* pipe = popen((std::string(SACFD_CLI_PATH) + " " + args + " 2>&1").c_str(), "r");
	if (!pipe)
	{
		return c;
	}
	char buf[4096];
	while (std::fgets(buf, sizeof buf, pipe))
	{
		c.output += buf;
	}
	const int status = pclose(pipe);
	c.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
	return c;
}
#endif

} // namespace

TEST(Evaluate, OutcomeRatesPartitionTheEpisodes)
{
	const auto r = evaluate(env::EnvConfig{}, demos::scripted_controller(), 20, 100);
	EXPECT_EQ(r.episodes, 20);
	EXPECT_DOUBLE_EQ(r.success_rate + r.collision_rate + r.timeout_rate, 1.0);
	EXPECT_GT(r.mean_length_s, 0.0);
	EXPECT_EQ(r, evaluate(env::EnvConfig{}, demos::scripted_controller(), 20, 100));
}

TEST(Evaluate, ScriptedExpertIsCompetent)
{
	const auto r = evaluate(env::EnvConfig{}, demos::scripted_controller(), 50, 0);
	EXPECT_GE(r.success_rate, 0.9);
}

TEST(Evaluate, ZeroStepPoliciesSucceedRarely)
{
	const auto out = fresh_dir("zero-step");
	RunConfig r;
	r.demos = false;
	r.out_dir = out;
	r.total_steps = 0;
	double total = 0.0;
	const int seeds = 20;
	for (int seed = 0; seed < seeds; ++seed)
	{
		const auto s = train_run(r, static_cast<std::uint64_t>(seed));
		ASSERT_EQ(s.evals.size(), 1u);
		ASSERT_EQ(s.evals[0].step, 0);
		total += s.evals[0].report.success_rate;
	}
	EXPECT_LE(total / seeds, 0.1);
}

TEST(RunConfig, ValidationAndNaming)
{
	RunConfig r;
	EXPECT_NO_THROW(r.validate());
	EXPECT_EQ(r.variant(), "sacfd");
	EXPECT_EQ(r.run_dir(4).filename(), "sacfd-seed4");
	r.demos = false;
	r.shield = true;
	EXPECT_EQ(r.run_dir(0).filename(), "sac-shield-seed0");
	r.total_steps = -1;
	EXPECT_THROW(r.validate(), ConfigError);
}

TEST(Train, SameSeedReproducesEveryCsvBitIdentically)
{
	const auto demo_dir = scripted_demos("det-demos", 4);
	const auto a = train_run(short_run(fresh_dir("det-a"), demo_dir), 2);
	const auto b = train_run(short_run(fresh_dir("det-b"), demo_dir), 2);
	for (const char* name : {"metrics.csv", "episodes.csv", "eval.csv"})
	{
		EXPECT_EQ(numerics::read_text(a.run_dir / name), numerics::read_text(b.run_dir / name)) << name;
	}
	EXPECT_TRUE(fs::exists(a.run_dir / "run.json"));
	EXPECT_TRUE(fs::exists(a.run_dir / "checkpoints" / "learner.json"));
	EXPECT_TRUE(fs::exists(a.run_dir / "best.json"));
	const auto meta = nlohmann::json::parse(numerics::read_text(a.run_dir / "run.json"));
	EXPECT_EQ(meta.at("seed"), 2);
	EXPECT_EQ(meta.at("demo_hashes").size(), 4u);
	EXPECT_TRUE(meta.contains("env_config_hash"));
	EXPECT_TRUE(meta.contains("code_version"));

	const auto rho = csv_column(a.run_dir / "metrics.csv", "rho");
	ASSERT_FALSE(rho.empty());
	for (std::size_t i = 1; i < rho.size(); ++i)
	{
		EXPECT_GE(std::stod(rho[i]), std::stod(rho[i - 1]));
	}
	EXPECT_EQ(numerics::read_text(a.run_dir / "metrics.csv").rfind("# sacfd-metrics v2\n", 0), 0u);
}

TEST(Train, NoDemosPinsRatioToOne)
{
	auto config = short_run(fresh_dir("nodemo"), fresh_dir("nodemo-empty"));
	config.demos = false;
	const auto s = train_run(config, 0);
	EXPECT_EQ(s.final_rho, 1.0);
	EXPECT_FALSE(s.expert_mean_reward);
	for (const auto& v : csv_column(s.run_dir / "metrics.csv", "rho"))
	{
		EXPECT_EQ(v, "1");
	}
	for (const auto& v : csv_column(s.run_dir / "metrics.csv", "expert_share"))
	{
		EXPECT_TRUE(v.empty() || std::stod(v) == 0.0) << v;
	}
}

TEST(Train, MissingDemosAbortWithConfigError)
{
	auto config = short_run(fresh_dir("missing"), fresh_dir("missing") / "nope");
	EXPECT_THROW(train_run(config, 0), ConfigError);
}

TEST(Plot, TwoRunsGiveTwoCurvesAndExpertLine)
{
	const auto demo_dir = scripted_demos("plot-demos", 2);
	const auto out = fresh_dir("plot");
	auto with = short_run(out, demo_dir);
	auto without = with;
	without.demos = false;
	const auto a = train_run(with, 0);
	const auto b = train_run(without, 0);
	plot_runs({a.run_dir, b.run_dir}, out / "fig.svg");
	const auto svg = numerics::read_text(out / "fig.svg");
	EXPECT_EQ(svg.rfind("<svg", 0), 0u);
	std::size_t polylines = 0;
	for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1))
	{
		++polylines;
	}
	EXPECT_EQ(polylines, 2u);
	EXPECT_NE(svg.find("sacfd-seed0"), std::string::npos);
	EXPECT_NE(svg.find("sac-seed0"), std::string::npos);
	EXPECT_NE(svg.find("expert demonstrations"), std::string::npos);
	EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

#ifdef SACFD_CLI_PATH
TEST(Cli, RecordWritesValidFiles)
{
	const auto out = fresh_dir("record");
	const auto c = run_cli("record --controller scripted --episodes 3 --out " + out.string());
	ASSERT_EQ(c.exit_code, 0) << c.output;
	const auto files = demos::load_demo_set({out / "scripted-0000.jsonl", out / "scripted-0001.jsonl", out / "scripted-0002.jsonl"});
	EXPECT_EQ(files.episodes.size(), 3u);
}

TEST(Cli, ScriptedEvalPrintsJsonReport)
{
	const auto out = fresh_dir("eval");
	const auto c = run_cli("eval --scripted --episodes 5 --out " + (out / "r.json").string());
	ASSERT_EQ(c.exit_code, 0) << c.output;
	const auto j = nlohmann::json::parse(numerics::read_text(out / "r.json"));
	EXPECT_EQ(j.at("episodes"), 5);
	EXPECT_TRUE(j.contains("success_rate") && j.contains("collision_rate") && j.contains("sd_reward"));
}

TEST(Cli, ConfigErrorsExitWithCode2)
{
	const auto dir = fresh_dir("badcfg");
	numerics::write_text_atomically(dir / "env.cfg", "ring_radius = -1\n");
	EXPECT_EQ(run_cli("eval --scripted --episodes 1 --config " + (dir / "env.cfg").string()).exit_code, 2);
	EXPECT_EQ(run_cli("eval --scripted --config " + (dir / "missing.cfg").string()).exit_code, 2);
	EXPECT_EQ(run_cli("train --steps 10 --demos " + (dir / "none").string() + " --out " + dir.string()).exit_code, 2);
}

TEST(Cli, ServeOnPortZeroPrintsTheChosenPort)
{
	const auto dir = fresh_dir("serve");
	const auto c = run_cli("--log-level warn serve --port 0 --out " + dir.string() + " & pid=$!; sleep 1; kill $pid; wait $pid");
	std::istringstream in(c.output);
	std::string first;
	std::getline(in, first);
	const int port = std::stoi(first);
	EXPECT_GT(port, 0);
	EXPECT_LT(port, 65536);
}
#endif
