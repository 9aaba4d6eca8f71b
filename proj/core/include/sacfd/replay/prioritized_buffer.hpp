#pragma once

#include "sacfd/replay/sum_tree.hpp"
#include "sacfd/replay/transition.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace sacfd::replay {

struct PerParams {
	double omega = 0.6; // prioritization exponent
	double beta = 0.4;  // importance-sampling exponent
	double eps = 1e-6;
};

struct SampleBatch {
	std::vector<Transition> transitions;
	std::vector<std::size_t> indices;
	std::vector<double> weights;       // max-normalized within the batch, in (0, 1]
	std::vector<double> probabilities; // P(i) at sampling time
	std::vector<Source> sources;

	std::size_t size() const { return transitions.size(); }
	void append(const SampleBatch& other);
};

struct PriorityUpdate {
	double priority = 0.0;
	bool floored = false; // the raw sum was below eps
};

/// Ring-buffer replay memory with proportional prioritized sampling.
///
/// The tree stores p_i^omega; priority(i) returns the raw p_i. New items enter at the
/// largest priority seen so far (1.0 for a fresh buffer).
class PrioritizedBuffer {
public:
	PrioritizedBuffer(std::size_t capacity, Source source, PerParams params = {});

	std::size_t push(const Transition& transition);

	/// Stratified proportional sample of k items with IS weights (1 / (N P(i)))^beta.
	SampleBatch sample(std::size_t k, std::mt19937_64& rng) const;
	SampleBatch sample(std::size_t k, double beta, std::mt19937_64& rng) const;

	/// p = policy_term + critic_term + eps, floored at eps.
	PriorityUpdate update_priority(std::size_t index, double policy_term, double critic_term);
	void set_priority(std::size_t index, double priority);

	/// Forbid further pushes; stored transitions become read-only.
	void seal() { sealed_ = true; }
	bool sealed() const { return sealed_; }

	std::size_t size() const { return size_; }
	std::size_t capacity() const { return capacity_; }
	bool empty() const { return size_ == 0; }
	Source source() const { return source_; }
	const PerParams& params() const { return params_; }
	double max_priority() const { return max_priority_; }
	double priority(std::size_t index) const { return priorities_.at(index); }
	const Transition& at(std::size_t index) const { return storage_.at(index); }
	const SumTree& tree() const { return tree_; }

private:
	std::size_t capacity_;
	Source source_;
	PerParams params_;
	std::vector<Transition> storage_;
	std::vector<double> priorities_;
	SumTree tree_;
	std::size_t next_ = 0;
	std::size_t size_ = 0;
	double max_priority_ = 1.0;
	bool sealed_ = false;
};

} // namespace sacfd::replay
