#pragma once

#include <stdexcept>
#include <string>

namespace symbio {

// Bad input data or configuration. CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / stream failures. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed text or binary input; carries the offending line when known.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& what) : ValidationError(what) {}
    ParseError(size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    size_t line() const { return line_; }

private:
    size_t line_ = 0;
};

}  // namespace symbio
