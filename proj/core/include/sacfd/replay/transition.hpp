#pragma once

#include "sacfd/env/roundabout.hpp"

#include <string_view>

namespace sacfd::replay {

enum class Source { agent, expert };

std::string_view to_string(Source source);

struct Transition {
	env::Observation state{};
	double action = 0.0; // longitudinal command in [-1, 1]
	double reward = 0.0;
	env::Observation next_state{};
	bool done = false; // true terminal: the target does not bootstrap from next_state
	Source source = Source::agent;

	bool operator==(const Transition&) const = default;
};

} // namespace sacfd::replay
