#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hrgc {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument value was violated (non-positive spacing, empty input, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A station or position lies outside the domain of a profile.
class RangeError : public Error {
public:
  using Error::Error;
};

/// Matrix or sequence dimensions are inconsistent.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A named entity (vehicle type, crossing id) is unknown.
class LookupError : public Error {
public:
  using Error::Error;
};

/// Results reference crossings that are not in the inventory.
class ReferenceError : public Error {
public:
  using Error::Error;
};

/// Malformed input text. Row numbers are 1-based and count physical lines of the source
/// (the header is line 1); column is the header name, or empty when the whole row is at fault.
class ParseError : public Error {
public:
  ParseError(std::string source, std::size_t row, std::string column, const std::string& what)
      : Error(format(source, row, column, what)), source_(std::move(source)), row_(row),
        column_(std::move(column)) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

private:
  static std::string format(const std::string& source, std::size_t row, const std::string& column,
                            const std::string& what) {
    std::string msg = source.empty() ? std::string("<input>") : source;
    if (row > 0) msg += ": row " + std::to_string(row);
    if (!column.empty()) msg += ", column '" + column + "'";
    return msg + ": " + what;
  }

  std::string source_;
  std::size_t row_;
  std::string column_;
};

/// Training produced a non-finite loss.
class TrainingDivergedError : public Error {
public:
  explicit TrainingDivergedError(int epoch)
      : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

} // namespace hrgc
