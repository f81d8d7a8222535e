// Error types shared by every cul module.
//
// All failures are reported by exception. Each class carries the extra
// context a caller needs to produce a useful message (iteration index,
// epsilon index, byte offset) and the CLI maps them onto exit codes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cul {

/// Precondition or configuration violated by the caller.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument is well formed but lies outside the domain of the operation.
class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A non-finite value appeared during an evaluation or an update.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, std::int64_t iteration = -1)
        : std::runtime_error(what), iteration_(iteration) {}

    /// Iteration at which the failure was detected, or -1 when not applicable.
    [[nodiscard]] std::int64_t iteration() const noexcept { return iteration_; }

private:
    std::int64_t iteration_;
};

/// An epsilon-constrained run finished outside its feasible set.
class ConstraintViolation : public std::runtime_error {
public:
    ConstraintViolation(const std::string& what, std::size_t epsilon_index)
        : std::runtime_error(what), epsilon_index_(epsilon_index) {}

    [[nodiscard]] std::size_t epsilon_index() const noexcept { return epsilon_index_; }

private:
    std::size_t epsilon_index_;
};

/// Checkpoint or result file does not follow the expected layout.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// A series has no usable positive values for log-log fitting.
class DegenerateSeries : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cul
