#pragma once

#include <stdexcept>
#include <string>

namespace qqgof {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Argument outside the range a table or fitted formula covers.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A numerical procedure failed to converge or hit a singular system.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sample or input data violates a precondition (zero variance, bad CSV, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qqgof
