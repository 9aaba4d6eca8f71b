#include "sacfd/env/roundabout.hpp"
#include "sacfd/learner/learner.hpp"
#include "sacfd/numerics/mlp.hpp"
#include "sacfd/replay/prioritized_buffer.hpp"
#include "sacfd/replay/sum_tree.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace sacfd;

namespace {

replay::PrioritizedBuffer random_buffer(std::size_t n, replay::Source source, std::mt19937_64& rng)
{
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	replay::PrioritizedBuffer b(n, source);
	for (std::size_t i = 0; i < n; ++i)
	{
		replay::Transition t;
		for (double& x : t.state)
		{
			x = u(rng);
		}
		for (double& x : t.next_state)
		{
			x = u(rng);
		}
		t.action = u(rng);
		t.reward = u(rng);
		t.source = source;
		b.push(t);
	}
	return b;
}

void BM_MlpForward(benchmark::State& state)
{
	std::mt19937_64 rng(1);
	const std::vector<int> sizes{8, 256, 256, 1};
	const auto net = numerics::Mlp::initialized(sizes, rng);
	const numerics::Matrix x = numerics::Matrix::Random(8, state.range(0));
	for (auto _ : state)
	{
		benchmark::DoNotOptimize(numerics::forward(net, x));
	}
	state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(64)->Arg(512);

void BM_MlpForwardBackward(benchmark::State& state)
{
	std::mt19937_64 rng(2);
	const std::vector<int> sizes{8, 256, 256, 1};
	const auto net = numerics::Mlp::initialized(sizes, rng);
	const numerics::Matrix x = numerics::Matrix::Random(8, state.range(0));
	const numerics::Matrix upstream = numerics::Matrix::Ones(1, state.range(0));
	for (auto _ : state)
	{
		numerics::ForwardCache cache;
		numerics::forward(net, x, &cache);
		benchmark::DoNotOptimize(numerics::backward(net, cache, upstream));
	}
	state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(512);

void BM_TrainStep(benchmark::State& state)
{
	std::mt19937_64 rng(3);
	learner::LearnerConfig config;
	config.warmup_steps = 0;
	auto learner_state = learner::LearnerState::initialize(config, rng);
	auto agent = random_buffer(10'000, replay::Source::agent, rng);
	auto expert = random_buffer(10'000, replay::Source::expert, rng);
	replay::RatioState ratio;
	ratio.batch_size = config.batch_size;
	for (auto _ : state)
	{
		benchmark::DoNotOptimize(learner::train_step(learner_state, config, agent, &expert, ratio, rng));
	}
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_EnvStep(benchmark::State& state)
{
	env::RoundaboutEnv env{env::EnvConfig{}};
	std::uint64_t seed = 0;
	env.reset(seed);
	for (auto _ : state)
	{
		const auto r = env.step(0.3);
		if (r.terminal)
		{
			env.reset(++seed);
		}
		benchmark::DoNotOptimize(r);
	}
}
BENCHMARK(BM_EnvStep);

void BM_SumTreeSetAndFind(benchmark::State& state)
{
	const auto n = static_cast<std::size_t>(state.range(0));
	replay::SumTree tree(n);
	std::mt19937_64 rng(4);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	std::uniform_int_distribution<std::size_t> idx(0, n - 1);
	for (std::size_t i = 0; i < n; ++i)
	{
		tree.set(i, u(rng));
	}
	for (auto _ : state)
	{
		tree.set(idx(rng), u(rng));
		benchmark::DoNotOptimize(tree.find(u(rng) * tree.total()));
	}
}
BENCHMARK(BM_SumTreeSetAndFind)->Arg(1 << 10)->Arg(100'000);

void BM_PrioritizedSample(benchmark::State& state)
{
	std::mt19937_64 rng(5);
	auto buffer = random_buffer(100'000, replay::Source::agent, rng);
	for (auto _ : state)
	{
		benchmark::DoNotOptimize(buffer.sample(64, rng));
	}
}
BENCHMARK(BM_PrioritizedSample);

} // namespace

BENCHMARK_MAIN();
