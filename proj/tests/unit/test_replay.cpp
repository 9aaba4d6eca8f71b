#include "sacfd/error.hpp"
#include "sacfd/replay/mixing.hpp"
#include "sacfd/replay/prioritized_buffer.hpp"
#include "sacfd/replay/sum_tree.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace sacfd;
using namespace sacfd::replay;

namespace {

Transition make_transition(double tag, Source source = Source::agent)
{
	Transition t;
	t.state[0] = tag;
	t.action = 0.0;
	t.reward = tag;
	t.source = source;
	return t;
}

PrioritizedBuffer filled(std::size_t n, std::size_t capacity, PerParams params = {}, Source source = Source::agent)
{
	PrioritizedBuffer b(capacity, source, params);
	for (std::size_t i = 0; i < n; ++i)
	{
		b.push(make_transition(static_cast<double>(i), source));
	}
	return b;
}

double relative(double a, double b)
{
	return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace

TEST(SumTree, RootMatchesNaiveSumAfter10kRandomOperations)
{
	SumTree tree(1000);
	std::vector<double> mirror(1000, 0.0);
	std::mt19937_64 rng(21);
	std::uniform_int_distribution<std::size_t> idx(0, 999);
	std::uniform_real_distribution<double> val(0.0, 100.0);
	for (int op = 0; op < 10000; ++op)
	{
		const std::size_t i = idx(rng);
		const double v = val(rng);
		tree.set(i, v);
		mirror[i] = v;
	}
	double naive = 0.0;
	for (double v : mirror)
	{
		naive += v;
	}
	EXPECT_LT(relative(tree.total(), naive), 1e-9);
	EXPECT_LT(relative(tree.total(), tree.naive_sum()), 1e-9);
}

TEST(SumTree, FindNeverReturnsZeroMassLeaf)
{
	SumTree tree(7);
	tree.set(2, 1.0);
	tree.set(5, 2.0);
	for (double u = 0.0; u < 3.0; u += 0.01)
	{
		const auto i = tree.find(u);
		EXPECT_TRUE(i == 2 || i == 5);
	}
	EXPECT_EQ(tree.find(3.0), 5u);
	EXPECT_THROW(tree.set(8, 1.0), ContractError);
}

TEST(PrioritizedBuffer, PushStartsAtUnitPriorityAndWraps)
{
	PrioritizedBuffer b(4, Source::agent);
	EXPECT_EQ(b.push(make_transition(0)), 0u);
	EXPECT_EQ(b.priority(0), 1.0);
	for (int i = 1; i < 4; ++i)
	{
		b.push(make_transition(i));
	}
	EXPECT_EQ(b.push(make_transition(4)), 0u);
	EXPECT_EQ(b.at(0).reward, 4.0);
	EXPECT_EQ(b.size(), 4u);
}

TEST(PrioritizedBuffer, NewItemsEnterAtMaxPriority)
{
	auto b = filled(3, 10);
	b.update_priority(1, 2.5, 0.5);
	const auto i = b.push(make_transition(9));
	EXPECT_DOUBLE_EQ(b.priority(i), 3.000001);
	EXPECT_LT(relative(b.tree().total(), b.tree().naive_sum()), 1e-9);
}

TEST(PrioritizedBuffer, PriorityUpdateExamples)
{
	auto b = filled(2, 4);
	const auto up = b.update_priority(0, 0.5, 0.3);
	EXPECT_DOUBLE_EQ(up.priority, 0.800001);
	EXPECT_FALSE(up.floored);
	EXPECT_EQ(b.update_priority(1, 0.0, 0.0).priority, 1e-6);
	const auto neg = b.update_priority(1, -3.0, 0.1);
	EXPECT_EQ(neg.priority, 1e-6);
	EXPECT_TRUE(neg.floored);
	EXPECT_THROW(b.update_priority(7, 0.1, 0.1), ContractError);
}

TEST(PrioritizedBuffer, RandomPushesAndUpdatesKeepTreeConsistent)
{
	PrioritizedBuffer b(500, Source::agent);
	std::mt19937_64 rng(22);
	std::uniform_real_distribution<double> u(0.0, 5.0);
	for (int op = 0; op < 10000; ++op)
	{
		if (op % 3 == 0 || b.empty())
		{
			b.push(make_transition(op));
		}
		else
		{
			std::uniform_int_distribution<std::size_t> idx(0, b.size() - 1);
			b.update_priority(idx(rng), u(rng), u(rng));
		}
	}
	double naive = 0.0;
	for (std::size_t i = 0; i < b.size(); ++i)
	{
		ASSERT_GT(b.priority(i), 0.0);
		naive += std::pow(b.priority(i), 0.6);
	}
	EXPECT_LT(relative(b.tree().total(), naive), 1e-9);
}

TEST(PrioritizedBuffer, EqualPrioritiesGiveUnitWeights)
{
	auto b = filled(50, 64);
	std::mt19937_64 rng(23);
	const auto s = b.sample(32, rng);
	ASSERT_EQ(s.size(), 32u);
	for (double w : s.weights)
	{
		EXPECT_EQ(w, 1.0);
	}
}

TEST(PrioritizedBuffer, WeightsAreMaxNormalizedImportanceRatios)
{
	auto b = filled(10, 10);
	std::mt19937_64 rng(24);
	for (std::size_t i = 0; i < 10; ++i)
	{
		b.set_priority(i, 0.1 + static_cast<double>(i));
	}
	const auto s = b.sample(10, rng);
	double total = 0.0;
	for (std::size_t i = 0; i < 10; ++i)
	{
		total += std::pow(0.1 + static_cast<double>(i), 0.6);
	}
	std::vector<double> raw;
	for (std::size_t k = 0; k < s.size(); ++k)
	{
		ASSERT_LT(s.indices[k], 10u);
		const double p = std::pow(b.priority(s.indices[k]), 0.6) / total;
		EXPECT_NEAR(s.probabilities[k], p, 1e-12);
		raw.push_back(std::pow(1.0 / (10.0 * p), 0.4));
	}
	const double mx = *std::max_element(raw.begin(), raw.end());
	for (std::size_t k = 0; k < s.size(); ++k)
	{
		EXPECT_NEAR(s.weights[k], raw[k] / mx, 1e-12);
		EXPECT_GT(s.weights[k], 0.0);
		EXPECT_LE(s.weights[k], 1.0);
	}
}

TEST(PrioritizedBuffer, ThreeToOneFrequenciesWithinBinomialBand)
{
	PerParams params;
	params.omega = 1.0;
	auto b = filled(2, 2, params);
	b.set_priority(0, 3.0);
	b.set_priority(1, 1.0);
	std::mt19937_64 rng(25);
	std::size_t hits0 = 0;
	const std::size_t draws = 100000;
	for (std::size_t n = 0; n < draws; ++n)
	{
		hits0 += b.sample(1, rng).indices[0] == 0;
	}
	const double sigma = std::sqrt(draws * 0.75 * 0.25);
	EXPECT_LT(std::abs(static_cast<double>(hits0) - 0.75 * draws), 3.0 * sigma);
}

TEST(PrioritizedBuffer, SamplingFrequenciesPassChiSquared)
{
	const std::size_t n = 20;
	auto b = filled(n, n);
	std::mt19937_64 rng(26);
	std::uniform_real_distribution<double> u(0.05, 4.0);
	std::vector<double> mass(n);
	for (std::size_t i = 0; i < n; ++i)
	{
		const double p = u(rng);
		b.set_priority(i, p);
		mass[i] = std::pow(p, 0.6);
	}
	const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
	std::vector<double> counts(n, 0.0);
	const std::size_t draws = 100000;
	for (std::size_t d = 0; d < draws; ++d)
	{
		counts[b.sample(1, rng).indices[0]] += 1.0;
	}
	double chi2 = 0.0;
	for (std::size_t i = 0; i < n; ++i)
	{
		const double expected = draws * mass[i] / total;
		chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
	}
	const boost::math::chi_squared dist(static_cast<double>(n - 1));
	const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
	EXPECT_GT(p_value, 0.01) << "chi2 = " << chi2;
}

TEST(PrioritizedBuffer, StratifiedBatchCoversRangeAndRejectsEmpty)
{
	auto b = filled(16, 16);
	std::mt19937_64 rng(27);
	const auto s = b.sample(16, rng);
	for (auto i : s.indices)
	{
		EXPECT_LT(i, 16u);
	}
	PrioritizedBuffer empty(4, Source::agent);
	EXPECT_THROW(empty.sample(1, rng), ContractError);
}

TEST(PrioritizedBuffer, SealedBufferRejectsPushes)
{
	auto b = filled(3, 3, {}, Source::expert);
	b.seal();
	EXPECT_THROW(b.push(make_transition(1, Source::expert)), ContractError);
	b.update_priority(0, 0.2, 0.2);
	EXPECT_EQ(b.at(0).reward, 0.0);
}

TEST(Mixing, RoundHalfEven)
{
	EXPECT_EQ(round_half_even(19.2), 19);
	EXPECT_EQ(round_half_even(2.5), 2);
	EXPECT_EQ(round_half_even(3.5), 4);
	EXPECT_EQ(round_half_even(3.4999), 3);
}

TEST(Mixing, MinibatchSplitExamples)
{
	auto agent = filled(100, 100, {}, Source::agent);
	auto expert = filled(100, 100, {}, Source::expert);
	std::mt19937_64 rng(28);
	RatioState r;
	auto m = compose_minibatch(r, agent, expert, rng);
	EXPECT_EQ(m.agent_count, 19u);
	EXPECT_EQ(m.expert_count, 45u);
	ASSERT_EQ(m.batch.size(), 64u);
	for (std::size_t k = 0; k < 64; ++k)
	{
		EXPECT_EQ(m.batch.sources[k], k < 19 ? Source::agent : Source::expert);
		EXPECT_EQ(m.batch.transitions[k].source, m.batch.sources[k]);
	}
	r.rho = 1.0;
	m = compose_minibatch(r, agent, PrioritizedBuffer(1, Source::expert), rng);
	EXPECT_EQ(m.agent_count, 64u);
	r.rho = 0.0;
	m = compose_minibatch(r, PrioritizedBuffer(1, Source::agent), expert, rng);
	EXPECT_EQ(m.expert_count, 64u);
}

TEST(Mixing, ShortfallIsFilledFromExpertSide)
{
	auto agent = filled(5, 100, {}, Source::agent);
	auto expert = filled(100, 100, {}, Source::expert);
	std::mt19937_64 rng(29);
	RatioState r;
	const auto m = compose_minibatch(r, agent, expert, rng);
	EXPECT_EQ(m.agent_count, 5u);
	EXPECT_EQ(m.expert_count, 59u);
	EXPECT_EQ(m.shortfall, 14u);
	EXPECT_EQ(m.batch.size(), 64u);
}

TEST(Mixing, SourceCountsAlwaysSumToBatchSize)
{
	auto agent = filled(100, 100, {}, Source::agent);
	auto expert = filled(100, 100, {}, Source::expert);
	std::mt19937_64 rng(30);
	for (int k = 0; k <= 64; ++k)
	{
		RatioState r;
		r.rho = k / 64.0;
		const auto m = compose_minibatch(r, agent, expert, rng);
		EXPECT_EQ(m.agent_count + m.expert_count, 64u);
		EXPECT_EQ(m.agent_count, static_cast<std::size_t>(k));
	}
}

TEST(Mixing, RatioUpdateExamples)
{
	RatioState r;
	r.expert_mean_reward = 1060.4;
	EXPECT_EQ(update_ratio(r, 1100.0), 0.315625);
	EXPECT_EQ(update_ratio(r, 1000.0), 0.3);
	EXPECT_EQ(update_ratio(r, 1060.4), 0.315625);
	r.rho = 0.999;
	EXPECT_EQ(update_ratio(r, 2000.0), 1.0);
}

TEST(Mixing, RatioIsNonDecreasingAndBounded)
{
	RatioState r;
	r.expert_mean_reward = 500.0;
	std::mt19937_64 rng(31);
	std::uniform_real_distribution<double> reward(0.0, 1000.0);
	for (int e = 0; e < 500; ++e)
	{
		const double next = update_ratio(r, reward(rng));
		ASSERT_GE(next, r.rho);
		ASSERT_LE(next, 1.0);
		r.rho = next;
	}
	EXPECT_EQ(r.rho, 1.0);
}
