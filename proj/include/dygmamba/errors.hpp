#pragma once

#include <stdexcept>
#include <string>

namespace dygmamba {

// Every failure the library raises carries one of these kinds so callers
// (CLI, tests) can map failures to exit codes without string matching.
enum class ErrorKind {
    parse,             // malformed input file
    validation,        // data violates a documented invariant
    dimension,         // shape/width mismatch
    config,            // bad configuration or usage
    id,                // unknown node/edge id
    state,             // API called in the wrong order
    numeric,           // non-finite value where finite is required
    metric,            // metric undefined for the given inputs
    sampling,          // negative sampling cannot proceed
    order,             // out-of-order chronological feed
    degenerate_split,  // no valid chronological boundary
    batch,             // empty or inconsistent batch
    io,                // filesystem failure
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::config: return "config";
        case ErrorKind::id: return "id";
        case ErrorKind::state: return "state";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::metric: return "metric";
        case ErrorKind::sampling: return "sampling";
        case ErrorKind::order: return "order";
        case ErrorKind::degenerate_split: return "degenerate_split";
        case ErrorKind::batch: return "batch";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    const char* kind_name() const { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) raise(kind, msg);
}

}  // namespace dygmamba
