#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace cfdev {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where the quantity is defined (e.g. theta <= 1/2).
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// Interval refinement could not separate a digit boundary.
class PrecisionExhausted : public Error {
 public:
  PrecisionExhausted(const std::string& what, std::size_t certified_digits)
      : Error(what), certified_digits_(certified_digits) {}

  std::size_t certified_digits() const noexcept { return certified_digits_; }

 private:
  std::size_t certified_digits_;
};

/// A node budget ran out. Carries the exact mass decided so far and the mass
/// that was never visited, so callers can still use the bracket
/// [accounted, accounted + unexplored].
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, mpq_class accounted, mpq_class unexplored,
                 std::uint64_t nodes)
      : Error(what),
        accounted_(std::move(accounted)),
        unexplored_(std::move(unexplored)),
        nodes_(nodes) {}

  const mpq_class& accounted() const noexcept { return accounted_; }
  const mpq_class& unexplored() const noexcept { return unexplored_; }
  std::uint64_t nodes() const noexcept { return nodes_; }

 private:
  mpq_class accounted_;
  mpq_class unexplored_;
  std::uint64_t nodes_;
};

/// A one-dimensional minimisation ended on the edge of its search interval.
class BoundaryHit : public Error {
 public:
  BoundaryHit(const std::string& what, double location) : Error(what), location_(location) {}
  double location() const noexcept { return location_; }

 private:
  double location_;
};

}  // namespace cfdev
