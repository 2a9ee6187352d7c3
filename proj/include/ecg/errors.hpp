#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecg {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    /// 1-based line number for text inputs, 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class TruncatedSignal : public Error {
public:
    TruncatedSignal(std::size_t expected, std::size_t actual)
        : Error("signal file truncated: expected " + std::to_string(expected) + " bytes, got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class SelectionError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

/// A beat window would cross the start or end of its record.
class BoundarySkip : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

class LabelError : public Error {
public:
    using Error::Error;
};

/// Non-finite value met during training. `epoch` and `batch` are 1-based, 0 if unknown.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::size_t epoch = 0, std::size_t batch = 0)
        : Error(epoch ? what + " (epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch) + ")"
                      : what),
          epoch_(epoch), batch_(batch) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ecg
