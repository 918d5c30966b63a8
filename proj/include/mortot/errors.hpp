#pragma once

#include <stdexcept>
#include <string>

namespace mortot {

/// Error categories double as CLI exit codes.
enum class ErrorCategory : int {
    domain = 3,
    format = 4,
    not_found = 5,
    completeness = 6,
    capacity = 7,
    setup = 8,
    io = 9,
};

const char *category_name(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string &message)
        : std::runtime_error{message}, category_{category} {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string &message) : Error{ErrorCategory::domain, message} {}
};

class FormatError : public Error {
public:
    FormatError(const std::string &message, int line)
        : Error{ErrorCategory::format, message}, line_{line} {}

    /// 1-based line number in the source text, 0 when not tied to a line.
    int line() const noexcept { return line_; }

private:
    int line_;
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string &message) : Error{ErrorCategory::not_found, message} {}
};

class CompletenessError : public Error {
public:
    CompletenessError(const std::string &message, std::string columns)
        : Error{ErrorCategory::completeness, message}, columns_{std::move(columns)} {}

    /// Comma-separated names of the incomplete columns.
    const std::string &columns() const noexcept { return columns_; }

private:
    std::string columns_;
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string &message) : Error{ErrorCategory::capacity, message} {}
};

class SetupError : public Error {
public:
    explicit SetupError(const std::string &message) : Error{ErrorCategory::setup, message} {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string &message) : Error{ErrorCategory::io, message} {}
};

} // namespace mortot
