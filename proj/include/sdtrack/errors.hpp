#pragma once

#include <stdexcept>
#include <string>

namespace sdt {

/// Invalid arguments, configuration values or violated preconditions.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable/unwritable paths and malformed or corrupted files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sdt
