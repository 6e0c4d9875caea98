#pragma once

#include <stdexcept>
#include <string>

namespace extsort {

// Error taxonomy, mapped to CLI exit codes: UsageError -> 1, IoError -> 2,
// CorruptionError -> 3.

// Caller misuse or invalid configuration.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / spill failures. Fatal for the sort in progress.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// On-disk data that does not decode (truncated run, bad trailer, bad CSV row
// under strict mode).
class CorruptionError : public std::runtime_error {
public:
    explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A single record that cannot fit in the sort's memory budget.
class UnsortableRecordError : public UsageError {
public:
    explicit UnsortableRecordError(const std::string& msg) : UsageError(msg) {}
};

} // namespace extsort
