#pragma once

#include <stdexcept>
#include <string>

namespace bwhtsim {

// Dimension or length mismatch, or a size outside what an operation supports.
class SizeError : public std::invalid_argument {
 public:
  explicit SizeError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

class IndexError : public std::out_of_range {
 public:
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

// Operation applied to an object in the wrong state (e.g. a bitplane consumed twice).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace bwhtsim
