#ifndef BHMM_ERRORS_HPP
#define BHMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bhmm {

// No path has positive probability under the given scores (e.g. a
// structural-zero transition is forced, or a site has no feasible state).
struct InfeasiblePathError : std::runtime_error {
    explicit InfeasiblePathError(const std::string& what)
        : std::runtime_error(what) {}
};

// A posterior-mode or mode-style update is requested where the mode
// formula is invalid (some alpha_lj + n_lj <= 1).
struct ModeInfeasibleError : std::runtime_error {
    explicit ModeInfeasibleError(const std::string& what)
        : std::runtime_error(what) {}
};

// A tempered parameter beta*(alpha+n)+1-beta came out non-positive.
struct InfeasibleTemperatureError : std::runtime_error {
    explicit InfeasibleTemperatureError(const std::string& what)
        : std::runtime_error(what) {}
};

// Brute-force enumeration refused: K^n above the guard.
struct InstanceTooLargeError : std::runtime_error {
    explicit InstanceTooLargeError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace bhmm

#endif
