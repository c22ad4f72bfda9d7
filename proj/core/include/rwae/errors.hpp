#pragma once

#include <stdexcept>
#include <string>

namespace rwae {

// I/O failure (missing file, unreadable path).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt, truncated, or wrong-version on-disk data.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite math was required.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent or unusable configuration (bad preset, failed metric gate).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace rwae
