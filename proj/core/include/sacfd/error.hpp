#pragma once

#include <stdexcept>
#include <string>

namespace sacfd {

/// Invalid configuration, mismatched shapes, or unreadable inputs. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (sampling an empty buffer, bad index).
class ContractError : public std::logic_error {
public:
	using std::logic_error::logic_error;
};

/// Failure while executing a run (I/O, network). Maps to CLI exit code 3.
class RuntimeFailure : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

} // namespace sacfd
