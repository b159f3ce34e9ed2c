#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mechemu {

/// Bad input to a library call (precondition violated).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Requested feature outside what the library supports (e.g. more than eight Halton dimensions).
class Unsupported : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A linear-algebra step failed (non-PD covariance, loss of PSD in the filter, ...).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Auxiliary parameter fit did not converge; carries the best values seen.
class EstimationFailed : public std::runtime_error {
public:
    EstimationFailed(const std::string& what, std::vector<double> best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const std::vector<double>& best() const noexcept { return best_; }

private:
    std::vector<double> best_;
};

/// A simulator run failed: non-finite state, non-zero exit or timeout.
class SimulatorFailure : public std::runtime_error {
public:
    enum class Reason { Instability, ExitCode, Timeout, Launch };

    SimulatorFailure(Reason reason, const std::string& what, std::string captured = {})
        : std::runtime_error(what), reason_(reason), captured_(std::move(captured)) {}
    Reason reason() const noexcept { return reason_; }
    const std::string& captured_output() const noexcept { return captured_; }

private:
    Reason reason_;
    std::string captured_;
};

/// External simulator produced output that does not follow the file protocol.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent run configuration, unreadable input file, missing artifact.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mechemu
