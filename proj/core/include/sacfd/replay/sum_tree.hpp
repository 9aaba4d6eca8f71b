#pragma once

#include <cstddef>
#include <vector>

namespace sacfd::replay {

/// Binary tree whose internal nodes hold the sum of their children; leaves hold
/// sampling masses. Capacity is rounded up to a power of two internally.
class SumTree {
public:
	explicit SumTree(std::size_t capacity);

	std::size_t capacity() const { return capacity_; }
	void set(std::size_t index, double value);
	double get(std::size_t index) const { return nodes_[leaf_base_ + index]; }
	double total() const { return nodes_[1]; }

	/// Leaf whose cumulative range contains `prefix`; never returns a zero-mass leaf
	/// while total() > 0.
	std::size_t find(double prefix) const;

	/// Sum of leaves recomputed left to right, independent of the tree.
	double naive_sum() const;

private:
	std::size_t capacity_;
	std::size_t leaf_base_;
	std::vector<double> nodes_;
};

} // namespace sacfd::replay
