#include "sacfd/cli/train.hpp"

#include "sacfd/demos/behavior_cloning.hpp"
#include "sacfd/demos/demo_set.hpp"
#include "sacfd/error.hpp"
#include "sacfd/learner/checkpoint.hpp"
#include "sacfd/numerics/checkpoint.hpp"
#include "sacfd/replay/mixing.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sacfd::cli {

namespace {

constexpr std::uint64_t kLearnerStream = 0x5ac0fd5eedULL;
constexpr std::uint64_t kProbeStream = 0x9e3779b97f4a7c15ULL;
constexpr std::size_t kProbeSize = 512;

/// Fixed expert transitions and policy noise for tracking the Q-filter on demonstrations
/// independently of how many expert samples the mini-batches currently hold.
struct FilterProbe {
	learner::BatchTensors batch;
	numerics::Vector noise;

	static FilterProbe draw(const replay::PrioritizedBuffer& expert, std::uint64_t seed)
	{
		std::mt19937_64 rng(seed ^ kProbeStream);
		std::uniform_int_distribution<std::size_t> pick(0, expert.size() - 1);
		replay::SampleBatch sample;
		const std::size_t n = std::min(kProbeSize, expert.size());
		for (std::size_t i = 0; i < n; ++i)
		{
			const std::size_t idx = pick(rng);
			sample.transitions.push_back(expert.at(idx));
			sample.indices.push_back(idx);
			sample.weights.push_back(1.0);
			sample.probabilities.push_back(1.0 / static_cast<double>(expert.size()));
			sample.sources.push_back(replay::Source::expert);
		}
		FilterProbe probe;
		probe.batch = learner::BatchTensors::from(sample);
		probe.noise.resize(static_cast<Eigen::Index>(n));
		std::normal_distribution<double> normal(0.0, 1.0);
		for (Eigen::Index i = 0; i < probe.noise.size(); ++i)
		{
			probe.noise[i] = normal(rng);
		}
		return probe;
	}

	double pass_fraction(const learner::LearnerState& state) const
	{
		const auto pb = learner::evaluate_policy(state.policy, batch.states, noise);
		const auto mask = learner::q_filter_mask(state.q1, state.q2, batch, pb.action);
		const auto passed = std::count(mask.begin(), mask.end(), true);
		return static_cast<double>(passed) / static_cast<double>(mask.size());
	}
};

class CsvWriter {
public:
	CsvWriter(const std::filesystem::path& path, std::string_view schema, std::string_view header)
		: out_(path)
	{
		if (!out_)
		{
			throw RuntimeFailure(fmt::format("cannot write {}", path.string()));
		}
		out_ << "# " << schema << " v" << kMetricsSchemaVersion << '\n' << header << '\n';
	}

	void row(const std::string& line)
	{
		out_ << line << '\n';
		if (!out_)
		{
			throw RuntimeFailure("metrics write failed");
		}
	}

	void flush() { out_.flush(); }

private:
	std::ofstream out_;
};

std::string num(double x)
{
	return std::isfinite(x) ? fmt::format("{:.17g}", x) : std::string();
}

struct IntervalStats {
	int updates = 0;
	int with_expert = 0;
	double q1 = 0.0, q2 = 0.0, v = 0.0, rl = 0.0, il = 0.0, alpha_loss = 0.0, pass = 0.0, expert_share = 0.0;
	int skipped = 0;
	int floored = 0;

	void add(const learner::LossReport& r)
	{
		if (r.warming_up)
		{
			return;
		}
		++updates;
		q1 += r.q_loss1;
		q2 += r.q_loss2;
		v += r.value_loss;
		rl += r.rl_policy_loss;
		il += r.il_policy_loss;
		alpha_loss += r.alpha_loss;
		const double n = static_cast<double>(r.agent_samples + r.expert_samples);
		expert_share += static_cast<double>(r.expert_samples) / n;
		if (r.expert_samples > 0)
		{
			++with_expert;
			pass += r.filter_pass_fraction;
		}
		skipped += r.skipped_updates;
		floored += r.floored_priorities;
	}

	double mean(double x) const { return updates > 0 ? x / updates : std::nan(""); }
};

void write_eval_row(CsvWriter& csv, std::int64_t step, const EvalReport& r)
{
	csv.row(fmt::format("{},{},{},{},{},{},{},{}", step, num(r.success_rate), num(r.collision_rate), num(r.timeout_rate),
		num(r.mean_reward), num(r.sd_reward), num(r.mean_length_s), num(r.sd_length_s)));
	csv.flush();
}

void point_symlink(const std::filesystem::path& link, const std::filesystem::path& target)
{
	std::error_code ec;
	std::filesystem::remove(link, ec);
	std::filesystem::create_symlink(target, link, ec);
	if (ec)
	{
		// Filesystems without symlinks get a copy.
		std::filesystem::copy_file(link.parent_path() / target, link, std::filesystem::copy_options::overwrite_existing);
	}
}

demos::DemoSet load_demos(const RunConfig& config, const env::EnvConfig& env_config)
{
	std::vector<std::filesystem::path> paths;
	try
	{
		paths = demos::list_trajectories(config.demo_dir);
	}
	catch (const ConfigError&)
	{
		throw ConfigError(fmt::format("demonstrations enabled but demo directory {} is missing (record some with "
									  "`sacfd record`, or pass --no-demos)",
			config.demo_dir.string()));
	}
	if (paths.empty())
	{
		throw ConfigError(fmt::format("demonstrations enabled but {} holds no .jsonl files", config.demo_dir.string()));
	}
	demos::DemoSetOptions options;
	options.config_hash = env::config_hash(env_config);
	options.observation_version = env::kObservationVersion;
	options.min_demo_reward = config.min_demo_reward;
	return demos::load_demo_set(paths, options);
}

} // namespace

env::EnvConfig run_env_config(const RunConfig& config, std::uint64_t seed)
{
	auto c = config.env;
	c.seed = seed;
	c.shield = config.shield;
	return c;
}

TrainSummary train_run(const RunConfig& config, std::uint64_t seed)
{
	config.validate();
	if (config.bc)
	{
		return train_bc(config, seed);
	}
	const auto env_config = run_env_config(config, seed);
	TrainSummary summary;
	summary.run_dir = config.run_dir(seed);
	const auto& dir = summary.run_dir;
	std::filesystem::create_directories(dir / "checkpoints");

	std::optional<demos::DemoSet> demo_set;
	std::optional<replay::PrioritizedBuffer> expert;
	replay::RatioState ratio;
	ratio.batch_size = config.learner.batch_size;
	if (config.demos)
	{
		demo_set = load_demos(config, env_config);
		expert.emplace(demos::make_expert_buffer(*demo_set, config.per));
		ratio.expert_mean_reward = demo_set->mean_reward;
		summary.expert_mean_reward = demo_set->mean_reward;
		spdlog::info("loaded {} demo episodes ({} transitions, mean reward {:.2f})", demo_set->episodes.size(),
			demo_set->transition_count(), demo_set->mean_reward);
	}
	else
	{
		ratio.rho = 1.0;
	}

	numerics::write_text_atomically(dir / "run.json",
		run_metadata(config, seed, demo_set ? demo_set->file_hashes : std::vector<std::string>{}, summary.expert_mean_reward)
				.dump(2) +
			"\n");
	numerics::write_text_atomically(dir / "config.txt", env::to_text(env_config));

	CsvWriter metrics(dir / "metrics.csv", "sacfd-metrics",
		"step,episode,rho,alpha,q_loss1,q_loss2,value_loss,rl_policy_loss,il_policy_loss,alpha_loss,"
		"filter_pass_fraction,demo_filter_pass,expert_share,updates,skipped_updates,floored_priorities");
	CsvWriter episodes_csv(dir / "episodes.csv", "sacfd-episodes", "episode,end_step,reward,length,cause,rho");
	CsvWriter eval_csv(dir / "eval.csv", "sacfd-eval",
		"step,success_rate,collision_rate,timeout_rate,mean_reward,sd_reward,mean_length_s,sd_length_s");

	std::mt19937_64 rng(seed ^ kLearnerStream);
	auto state = learner::LearnerState::initialize(config.learner, rng);
	replay::PrioritizedBuffer agent(config.agent_capacity, replay::Source::agent, config.per);
	env::RoundaboutEnv environment(env_config);

	auto run_eval = [&](std::int64_t step) {
		const auto report = evaluate(env_config, demos::policy_controller(state.policy), config.eval_episodes, config.eval_seed);
		summary.evals.push_back({step, report});
		write_eval_row(eval_csv, step, report);
		spdlog::info("[{} seed {}] step {:>6}: eval success {:.2f} collision {:.2f} reward {:.1f}", config.variant(), seed,
			step, report.success_rate, report.collision_rate, report.mean_reward);
	};
	auto save_learner = [&](const std::filesystem::path& path) {
		learner::LearnerCheckpoint c{state, ratio, summary.steps, summary.episodes, env::config_hash(env_config),
			env::kObservationVersion};
		learner::save_checkpoint(path, c);
	};

	std::optional<FilterProbe> probe;
	if (expert && !expert->empty())
	{
		probe = FilterProbe::draw(*expert, seed);
	}

	run_eval(0);
	env::Observation obs = environment.reset();
	double episode_reward = 0.0;
	std::int64_t episode_length = 0;
	IntervalStats stats;
	std::optional<double> best_eval;
	for (std::int64_t step = 1; step <= config.total_steps; ++step)
	{
		const double action =
			learner::sample_action(state.policy, Eigen::Map<const numerics::Vector>(obs.data(), env::kObservationSize), rng);
		const auto result = environment.step(action);
		replay::Transition tr;
		tr.state = obs;
		tr.action = result.applied_action;
		tr.reward = result.reward;
		tr.next_state = result.observation;
		tr.done = result.terminal && result.cause != env::TerminalCause::timeout;
		tr.source = replay::Source::agent;
		agent.push(tr);
		episode_reward += result.reward;
		++episode_length;
		obs = result.observation;
		summary.steps = step;

		stats.add(learner::train_step(state, config.learner, agent, expert ? &*expert : nullptr, ratio, rng));

		if (result.terminal)
		{
			++summary.episodes;
			if (config.demos)
			{
				ratio.rho = replay::update_ratio(ratio, episode_reward);
			}
			episodes_csv.row(fmt::format("{},{},{},{},{},{}", summary.episodes, step, num(episode_reward), episode_length,
				env::to_string(result.cause), num(ratio.rho)));
			save_learner(dir / "checkpoints" / "learner.json");
			if (summary.best_episode < 0 || episode_reward > summary.best_episode_reward)
			{
				summary.best_episode = summary.episodes;
				summary.best_episode_reward = episode_reward;
				numerics::save_parameters(dir / "checkpoints" / "best-policy.json", state.policy);
				point_symlink(dir / "best.json", std::filesystem::path("checkpoints") / "best-policy.json");
			}
			obs = environment.reset();
			episode_reward = 0.0;
			episode_length = 0;
		}

		if (step % config.metrics_interval == 0)
		{
			const double pass = stats.with_expert > 0 ? stats.pass / stats.with_expert : std::nan("");
			const double probe_pass = probe ? probe->pass_fraction(state) : std::nan("");
			metrics.row(fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", step, summary.episodes,
				num(ratio.rho), num(state.alpha()), num(stats.mean(stats.q1)), num(stats.mean(stats.q2)),
				num(stats.mean(stats.v)), num(stats.mean(stats.rl)), num(stats.mean(stats.il)),
				num(stats.mean(stats.alpha_loss)), num(pass), num(probe_pass), num(stats.mean(stats.expert_share)),
				stats.updates, stats.skipped, stats.floored));
			stats = {};
		}
		if (step % config.eval_interval == 0 || step == config.total_steps)
		{
			run_eval(step);
			const double success = summary.evals.back().report.success_rate;
			if (!best_eval || success > *best_eval)
			{
				best_eval = success;
				numerics::save_parameters(dir / "checkpoints" / "eval-best-policy.json", state.policy);
			}
			metrics.flush();
			episodes_csv.flush();
		}
	}
	summary.final_rho = ratio.rho;
	save_learner(dir / "learner-final.json");
	numerics::save_parameters(dir / "policy-final.json", state.policy);
	if (summary.best_episode < 0)
	{
		numerics::save_parameters(dir / "checkpoints" / "best-policy.json", state.policy);
		point_symlink(dir / "best.json", std::filesystem::path("checkpoints") / "best-policy.json");
	}
	return summary;
}

TrainSummary train_bc(const RunConfig& config, std::uint64_t seed)
{
	config.validate();
	const auto env_config = run_env_config(config, seed);
	TrainSummary summary;
	summary.run_dir = config.run_dir(seed);
	const auto& dir = summary.run_dir;
	std::filesystem::create_directories(dir);
	const auto set = load_demos(config, env_config);
	summary.expert_mean_reward = set.mean_reward;
	numerics::write_text_atomically(dir / "run.json", run_metadata(config, seed, set.file_hashes, set.mean_reward).dump(2) + "\n");
	numerics::write_text_atomically(dir / "config.txt", env::to_text(env_config));

	demos::BcConfig bc;
	bc.epochs = config.bc_epochs;
	bc.batch_size = config.learner.batch_size;
	bc.learning_rate = config.learner.learning_rate;
	bc.hidden = config.learner.hidden;
	bc.output_scale = config.learner.policy_output_scale;
	bc.seed = seed ^ kLearnerStream;
	const auto result = demos::bc_train(set, bc);

	CsvWriter history(dir / "bc.csv", "sacfd-bc", "epoch,train_loss,holdout_mse");
	for (const auto& e : result.history)
	{
		history.row(fmt::format("{},{},{}", e.epoch, num(e.train_loss), num(e.holdout_mse)));
	}
	numerics::save_parameters(dir / "policy.json", result.policy);
	point_symlink(dir / "best.json", "policy.json");

	const auto report = evaluate(env_config, demos::policy_controller(result.policy), config.eval_episodes, config.eval_seed);
	summary.evals.push_back({0, report});
	numerics::write_text_atomically(dir / "eval.json", to_json(report).dump(2) + "\n");
	spdlog::info("[bc seed {}] eval success {:.2f} collision {:.2f} reward {:.1f}", seed, report.success_rate,
		report.collision_rate, report.mean_reward);
	return summary;
}

} // namespace sacfd::cli
