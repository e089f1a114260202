#pragma once

#include <stdexcept>
#include <string>

namespace petersson {

// Bad input: maps to CLI exit code 1.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An enumeration or memory budget would be exceeded: exit code 2.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input is well formed but outside what the library handles
// (class number > 1, no totally positive generator, ...).
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

}  // namespace petersson
