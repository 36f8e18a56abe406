#pragma once

#include <stdexcept>
#include <string>

namespace hedgebench {

/// Invalid configuration or dimension mismatch supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// An API precondition was violated (wrong step index, non-scalar root, ...).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

class NonStationaryError : public std::domain_error {
public:
    explicit NonStationaryError(const std::string& what) : std::domain_error(what) {}
};

/// Input data cannot support the requested estimate (e.g. zero-variance returns).
class DegenerateDataError : public std::runtime_error {
public:
    explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hedgebench
