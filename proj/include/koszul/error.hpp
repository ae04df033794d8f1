#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace koszul {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular elementary function (log/sqrt of non-positive, division by zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A covector that should annihilate the radical does not. Carries the chart
// point when known; this is how a failed radical-stationarity hypothesis
// surfaces.
class NotAnnihilator : public Error {
 public:
  explicit NotAnnihilator(const std::string& what,
                          std::optional<std::vector<double>> point = std::nullopt)
      : Error(what), point_(std::move(point)) {}

  const std::optional<std::vector<double>>& point() const { return point_; }
  void set_point(std::vector<double> p) { point_ = std::move(p); }

 private:
  std::optional<std::vector<double>> point_;
};

class SingularBaseMetric : public Error {
 public:
  using Error::Error;
};

class UnsupportedCase : public Error {
 public:
  using Error::Error;
};

class UnknownFixture : public Error {
 public:
  using Error::Error;
};

class UnknownClause : public Error {
 public:
  using Error::Error;
};

}  // namespace koszul
