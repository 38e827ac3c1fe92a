#pragma once

#include <stdexcept>
#include <string>

namespace netmig {

// Any violation of an input contract: malformed files, inconsistent flow
// data, arguments outside their documented range.  The CLI maps this to
// exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A system with zero migrants has no defined effectiveness.
class UndefinedIndexError : public ValidationError {
public:
    explicit UndefinedIndexError(const std::string& msg) : ValidationError(msg) {}
};

// All observations identical where spread is required (z-scores).
class DegenerateSpreadError : public ValidationError {
public:
    explicit DegenerateSpreadError(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace netmig
