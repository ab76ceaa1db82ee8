#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbc {

// Bad arguments: sizes, ranges, malformed bit strings.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A bit prefix with zero probability mass under the current distribution.
struct DegeneratePrefix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Code construction produced an unusable parity-check matrix; retry with a new seed.
struct ConstructionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientLength : std::invalid_argument {
    InsufficientLength(std::size_t have, std::size_t minimum)
        : std::invalid_argument("token sequence too short: have " + std::to_string(have) +
                                ", need at least " + std::to_string(minimum)),
          have(have), minimum(minimum) {}
    std::size_t have;
    std::size_t minimum;
};

struct EndpointUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExternalAttackFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedOperation : std::logic_error {
    using std::logic_error::logic_error;
};

// Failure inside a language model, tagged with the generation position.
struct ModelError : std::runtime_error {
    ModelError(std::size_t position, const std::string& what)
        : std::runtime_error("model failure at token position " + std::to_string(position) + ": " +
                             what),
          position(position) {}
    std::size_t position;
};

}  // namespace rbc
