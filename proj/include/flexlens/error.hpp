#pragma once

#include <stdexcept>
#include <string>

namespace flexlens {

/// Bad or inconsistent user input (files, manifest, flags). Maps to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computed result broke one of the library's own invariants. Maps to exit code 2.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void require_invariant(bool ok, const std::string& what) {
    if (!ok) throw InvariantError("invariant violated: " + what);
}

}  // namespace flexlens
