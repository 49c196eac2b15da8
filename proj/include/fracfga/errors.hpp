#pragma once

#include <stdexcept>
#include <string>

namespace fracfga {

/// Base class for all solver-suite errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

/// Input field too coarse to resolve the eps-oscillations it claims to carry.
class ResolutionError : public Error {
public:
    explicit ResolutionError(const std::string& msg) : Error("resolution: " + msg) {}
};

/// Two fields were combined that do not live on the same grid.
class GridMismatchError : public Error {
public:
    explicit GridMismatchError(const std::string& msg) : Error("grid mismatch: " + msg) {}
};

/// Numerically non-invertible Z matrix during trajectory propagation.
class SingularZError : public Error {
public:
    explicit SingularZError(const std::string& msg) : Error("singular Z: " + msg) {}
};

/// Initial phase-space decomposition produced no active nodes.
class EmptyActiveSetError : public Error {
public:
    explicit EmptyActiveSetError(const std::string& msg)
        : Error("empty active set: " + msg) {}
};

} // namespace fracfga
