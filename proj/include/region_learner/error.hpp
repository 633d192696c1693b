#pragma once

#include <stdexcept>
#include <string>

namespace region_learner {

/* Invalid parameters or configuration (CLI exit code 2) */
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) { }
};

/* Malformed or inconsistent input data (CLI exit code 3) */
class DataError : public std::runtime_error
{
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) { }
};

/* Internal invariant violated (CLI exit code 4) */
class InvariantError : public std::logic_error
{
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) { }
};

} // namespace region_learner
