#pragma once

#include <stdexcept>
#include <string>

namespace cellmorph {

// Bad user input: malformed configs, manifests, files, CLI arguments.
// The CLI maps this to exit code 1; everything else unexpected is 2.
class UserError : public std::runtime_error {
public:
    explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/model shape contract violations.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid domain values (label out of range, bad policy bounds, ...).
class ValidationError : public UserError {
public:
    explicit ValidationError(const std::string& msg) : UserError(msg) {}
};

}  // namespace cellmorph
