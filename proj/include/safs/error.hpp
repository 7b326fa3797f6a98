#pragma once

#include <stdexcept>
#include <string>

namespace safs {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments: out-of-range indices, invalid K, malformed flags.
class usage_error : public error {
public:
    using error::error;
};

/// The input table cannot be used: missing file, unparseable outcome, degenerate outcome.
class data_error : public error {
public:
    using error::error;
};

/// Exhaustive enumeration refused because the search space is too large.
class guard_error : public error {
public:
    using error::error;
};

} // namespace safs
