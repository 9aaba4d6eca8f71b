#include "sacfd/replay/prioritized_buffer.hpp"

#include "sacfd/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace sacfd::replay {

std::string_view to_string(Source source)
{
	return source == Source::agent ? "agent" : "expert";
}

void SampleBatch::append(const SampleBatch& other)
{
	transitions.insert(transitions.end(), other.transitions.begin(), other.transitions.end());
	indices.insert(indices.end(), other.indices.begin(), other.indices.end());
	weights.insert(weights.end(), other.weights.begin(), other.weights.end());
	probabilities.insert(probabilities.end(), other.probabilities.begin(), other.probabilities.end());
	sources.insert(sources.end(), other.sources.begin(), other.sources.end());
}

PrioritizedBuffer::PrioritizedBuffer(std::size_t capacity, Source source, PerParams params)
	: capacity_(capacity), source_(source), params_(params), tree_(capacity)
{
	storage_.reserve(std::min<std::size_t>(capacity, 1u << 16));
	priorities_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

std::size_t PrioritizedBuffer::push(const Transition& transition)
{
	if (sealed_)
	{
		throw ContractError("push into a sealed buffer");
	}
	if (transition.action < -1.0 || transition.action > 1.0 || !std::isfinite(transition.action))
	{
		throw ContractError(fmt::format("transition action {} outside [-1, 1]", transition.action));
	}
	const std::size_t index = next_;
	Transition stored = transition;
	stored.source = source_;
	if (index < storage_.size())
	{
		storage_[index] = stored;
		priorities_[index] = max_priority_;
	}
	else
	{
		storage_.push_back(stored);
		priorities_.push_back(max_priority_);
	}
	tree_.set(index, std::pow(max_priority_, params_.omega));
	next_ = (next_ + 1) % capacity_;
	size_ = std::min(size_ + 1, capacity_);
	return index;
}

SampleBatch PrioritizedBuffer::sample(std::size_t k, std::mt19937_64& rng) const
{
	return sample(k, params_.beta, rng);
}

SampleBatch PrioritizedBuffer::sample(std::size_t k, double beta, std::mt19937_64& rng) const
{
	if (size_ == 0)
	{
		throw ContractError(fmt::format("sample from an empty {} buffer", to_string(source_)));
	}
	SampleBatch batch;
	if (k == 0)
	{
		return batch;
	}
	const double total = tree_.total();
	const double segment = total / static_cast<double>(k);
	std::uniform_real_distribution<double> unit(0.0, 1.0);
	const double n = static_cast<double>(size_);
	double max_weight = 0.0;
	for (std::size_t i = 0; i < k; ++i)
	{
		const double prefix = std::min((static_cast<double>(i) + unit(rng)) * segment, std::nextafter(total, 0.0));
		const std::size_t index = tree_.find(prefix);
		const double p = tree_.get(index) / total;
		const double w = std::pow(1.0 / (n * p), beta);
		max_weight = std::max(max_weight, w);
		batch.transitions.push_back(storage_[index]);
		batch.indices.push_back(index);
		batch.probabilities.push_back(p);
		batch.weights.push_back(w);
		batch.sources.push_back(source_);
	}
	for (auto& w : batch.weights)
	{
		w /= max_weight;
	}
	return batch;
}

void PrioritizedBuffer::set_priority(std::size_t index, double priority)
{
	if (index >= size_)
	{
		throw ContractError(fmt::format("priority index {} outside buffer of size {}", index, size_));
	}
	if (!(priority > 0.0) || !std::isfinite(priority))
	{
		throw ContractError("priorities must be finite and positive");
	}
	priorities_[index] = priority;
	tree_.set(index, std::pow(priority, params_.omega));
	max_priority_ = std::max(max_priority_, priority);
}

PriorityUpdate PrioritizedBuffer::update_priority(std::size_t index, double policy_term, double critic_term)
{
	PriorityUpdate update;
	update.priority = policy_term + critic_term + params_.eps;
	if (!(update.priority >= params_.eps) || !std::isfinite(update.priority))
	{
		update.priority = params_.eps;
		update.floored = true;
	}
	set_priority(index, update.priority);
	return update;
}

} // namespace sacfd::replay
