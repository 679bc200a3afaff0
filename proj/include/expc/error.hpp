#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace expc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor extents or layer dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation's precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed file header (bad magic, unsupported version, bad PPM header).
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    explicit FormatError(const std::string& what) : Error(what), offset_(0) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Truncated or damaged file body.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// A file name does not follow the `<cls>.<number>` convention.
class LabelError : public Error {
public:
    using Error::Error;
};

/// Training diverged.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::size_t batch_index)
        : Error(what + " at batch " + std::to_string(batch_index)), batch_index_(batch_index) {}

    std::size_t batch_index() const noexcept { return batch_index_; }

private:
    std::size_t batch_index_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace expc
