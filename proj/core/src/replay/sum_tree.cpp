#include "sacfd/replay/sum_tree.hpp"

#include "sacfd/error.hpp"

#include <bit>

namespace sacfd::replay {

SumTree::SumTree(std::size_t capacity)
	: capacity_(capacity), leaf_base_(std::bit_ceil(capacity == 0 ? std::size_t{1} : capacity)), nodes_(2 * leaf_base_, 0.0)
{
	if (capacity == 0)
	{
		throw ContractError("sum tree capacity must be positive");
	}
}

void SumTree::set(std::size_t index, double value)
{
	if (index >= capacity_)
	{
		throw ContractError("sum tree index out of range");
	}
	std::size_t node = leaf_base_ + index;
	nodes_[node] = value;
	for (node /= 2; node >= 1; node /= 2)
	{
		nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
	}
}

std::size_t SumTree::find(double prefix) const
{
	std::size_t node = 1;
	while (node < leaf_base_)
	{
		const std::size_t left = 2 * node;
		if (prefix < nodes_[left] || nodes_[left + 1] <= 0.0)
		{
			node = left;
		}
		else
		{
			prefix -= nodes_[left];
			node = left + 1;
		}
	}
	return node - leaf_base_;
}

double SumTree::naive_sum() const
{
	double sum = 0.0;
	for (std::size_t i = 0; i < capacity_; ++i)
	{
		sum += nodes_[leaf_base_ + i];
	}
	return sum;
}

} // namespace sacfd::replay
