#pragma once

#include <stdexcept>
#include <string>

namespace mumle {

// Every failure raised by the library derives from Error. The CLI maps the
// concrete subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter or observation outside the model's domain/support.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Wrong layout, too few observations, non-finite values.
class DataShapeError : public Error {
 public:
  using Error::Error;
};

// Data for which the updated statistic vanishes (all observations equal).
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

class BracketingError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ExperimentIntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace mumle
