#pragma once

#include <stdexcept>
#include <string>

namespace mfc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. The message names the offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// CFL violation, Newton failure, non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File or format problems.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mfc
