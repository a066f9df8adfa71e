#pragma once

#include <stdexcept>
#include <string>

namespace flarekit {

/// Raised when two images in different intensity domains meet in arithmetic,
/// or when an operation receives an image in the wrong domain.
class DomainError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// File-system or codec failure (unreadable file, short write, corrupt data).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file whose container is recognised but whose variant is not supported.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

} // namespace flarekit
