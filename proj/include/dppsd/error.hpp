#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dppsd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Channel matrix is (numerically) not of full column rank.
class RankDeficient : public Error {
public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the desk-scale guard.
class TooLarge : public Error {
public:
  using Error::Error;
};

class NotAConstellationPoint : public Error {
public:
  using Error::Error;
};

/// No lambda schedule exists for the requested antenna count.
class NoSchedule : public Error {
public:
  using Error::Error;
};

class InvalidConfig : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed model, dataset or result file. `field()` names the offending entry.
class FormatError : public Error {
public:
  FormatError(std::string field, const std::string& what)
      : Error("format error in '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Training loss became NaN or infinite.
class DivergedToNonFinite : public Error {
public:
  explicit DivergedToNonFinite(std::size_t epoch)
      : Error("training diverged to a non-finite loss at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

}  // namespace dppsd
