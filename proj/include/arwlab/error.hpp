#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arwlab {

enum class ErrorKind {
    invalid_parameter,
    degenerate_network,
    unknown_vertex,
    distribution,
    configuration,
    precondition,
    solver,
    unsupported,
    enlarge_window,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::degenerate_network: return "degenerate-network";
    case ErrorKind::unknown_vertex: return "unknown-vertex";
    case ErrorKind::distribution: return "distribution";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::solver: return "solver";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::enlarge_window: return "enlarge-window";
    }
    return "error";
}

} // namespace arwlab
