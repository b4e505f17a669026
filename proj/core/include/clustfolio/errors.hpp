#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clustfolio {

/// Base class for every error raised by the library. Callers that only need
/// to report a failure can catch this; tests match on the concrete type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// data
class MissingData : public Error {
 public:
  MissingData(std::size_t row, std::size_t col);
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};
class InvalidPrice : public Error {
 public:
  using Error::Error;
};
class DuplicateDate : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class InsufficientData : public Error {
 public:
  using Error::Error;
};
class NoTestData : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

// tsne
class InvalidInput : public Error {
 public:
  using Error::Error;
};
class InvalidPerplexity : public Error {
 public:
  using Error::Error;
};
class InvalidConfig : public Error {
 public:
  using Error::Error;
};
class DivergedError : public Error {
 public:
  using Error::Error;
};

// spectral
class InvalidScale : public Error {
 public:
  using Error::Error;
};
class IsolatedVertex : public Error {
 public:
  explicit IsolatedVertex(std::size_t vertex);
  std::size_t vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};
class InvalidK : public Error {
 public:
  using Error::Error;
};

// portfolio
class GroupingMismatch : public Error {
 public:
  using Error::Error;
};
class DegenerateTangency : public Error {
 public:
  using Error::Error;
};
class SingularCovariance : public Error {
 public:
  using Error::Error;
};
class BasisMismatch : public Error {
 public:
  using Error::Error;
};
class ZeroVariance : public Error {
 public:
  using Error::Error;
};
class BootstrapDegenerate : public Error {
 public:
  using Error::Error;
};

// engine
class NoViableCandidate : public Error {
 public:
  using Error::Error;
};
class MetadataMissing : public Error {
 public:
  explicit MetadataMissing(std::string ticker);
  const std::string& ticker() const noexcept { return ticker_; }

 private:
  std::string ticker_;
};
class SizeMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace clustfolio
