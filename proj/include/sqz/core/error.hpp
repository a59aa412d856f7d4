#pragma once

#include <stdexcept>
#include <string>

namespace sqz {

/// Bad dimensions, out-of-range arguments, violated call contracts.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values where finite ones are required, diverged training.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed on-disk artifacts: bad magic, version, CRC, truncation.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Artifact fingerprints do not match what the caller expects.
class ProvenanceError : public std::runtime_error {
public:
    explicit ProvenanceError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sqz
