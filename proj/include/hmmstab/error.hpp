#ifndef HMMSTAB_ERROR_HPP_
#define HMMSTAB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hmmstab {

// Bad arguments, malformed configuration, mismatched grids. The CLI maps
// these to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failures of the numerical pipeline on otherwise valid input. The CLI maps
// these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every filter weight underflowed to zero.
class DegenerateFilter : public DomainError {
 public:
  using DomainError::DomainError;
};

// The candidate set has a nonpositive lower Doeblin constant.
class NotCertifiable : public DomainError {
 public:
  using DomainError::DomainError;
};

// No interval up to the maximal radius satisfies the eta ratio condition.
class H2Unverified : public DomainError {
 public:
  using DomainError::DomainError;
};

// The quadrature window misses more than the tolerated kernel mass.
class CoverageError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Exact enumeration refused because the state space or horizon is too large.
class ComplexityGuard : public DomainError {
 public:
  using DomainError::DomainError;
};

// A precondition of a verification check does not hold.
class PreconditionFailed : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace hmmstab

#endif  // HMMSTAB_ERROR_HPP_
