#pragma once

#include <stdexcept>
#include <string>

namespace adapedit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch or empty operand.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside an operation's documented domain.
class ContractError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Operation called in the wrong lifecycle phase.
class StateError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

// Transport-level failure talking to a remote host (connect, read, write).
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

// Failure reported by a backend while running a step; carries the step index.
class BackendError : public Error {
public:
    BackendError(int step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace adapedit
