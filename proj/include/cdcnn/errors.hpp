#ifndef CDCNN_ERRORS_HPP_
#define CDCNN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cdcnn {

// Base of every error raised by the library. The CLI maps subclasses of
// ValidationError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidConfig : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Box lies completely outside the frame.
class OutOfView : public Error {
 public:
  using Error::Error;
};

class SamplerExhausted : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class TrackingFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdcnn

#endif  // CDCNN_ERRORS_HPP_
