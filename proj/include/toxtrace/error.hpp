#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toxtrace {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input record; line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Invalid configuration value (bad flag, infeasible parameter combination).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// An operation needed a toxicity score that is not present yet.
class MissingScoreError : public Error {
public:
    using Error::Error;
};

// A statistic is undefined for the given input (e.g. empty token list).
class UndefinedStatError : public Error {
public:
    using Error::Error;
};

// Out-of-bounds index or invalid interval.
class IndexError : public Error {
public:
    using Error::Error;
};

// Signal too short for the requested detection.
class SignalTooShortError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was invoked before its upstream artifact exists.
class StageOrderError : public Error {
public:
    using Error::Error;
};

// Failure while scoring text.
class ScorerError : public Error {
public:
    enum class Kind {
        permanent,   // non-retryable rejection (4xx other than rate limit)
        transient,   // retries exhausted (rate limit, 5xx, connection)
        must_split,  // text exceeds the scorer's declared limit
    };
    ScorerError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace toxtrace
