#pragma once

#include <stdexcept>
#include <string>

namespace varbandit {

// Every library error derives from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

// Statistic requested with too few samples.
class UndefinedStatistic : public Error {
public:
    using Error::Error;
};

// Variance at or below the Sharpe floor.
class DegenerateSharpe : public Error {
public:
    using Error::Error;
};

class InfeasibleBudget : public Error {
public:
    using Error::Error;
};

class EnvironmentMismatch : public Error {
public:
    using Error::Error;
};

// Regret bound undefined because a suboptimal gap is zero.
class UnboundedBound : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace varbandit
