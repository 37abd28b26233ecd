#pragma once

#include <stdexcept>
#include <string>

namespace wasmfp {

// Bad input data: wrong dimensions, negative timings, empty classes,
// non-positive-definite covariance. The CLI maps this to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A query needs a model component (covariance, PCA basis, database) that was
// never loaded or fitted.
class MissingModelError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace wasmfp
