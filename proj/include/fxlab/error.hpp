#pragma once

#include <stdexcept>
#include <string>

namespace fxlab {

enum class ErrorKind {
    InvalidSettings,
    Domain,
    Shape,
    Arity,
    CannotNormalize,
    TooShort,
    State,
    Conditioning,
    ChecksumMismatch,
    EmptyInput,
    Io,
    Numerical,
    Usage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fxlab
