#pragma once

#include <stdexcept>
#include <string>

namespace deua {

// All library failures throw one of the categories below. The category string
// is what the CLI prints as the one-line machine-parsable error class.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape", w) {}
};
struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error("state", w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error("data", w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("numeric", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};
struct TrainingDivergenceError : Error {
  explicit TrainingDivergenceError(const std::string& w)
      : Error("training-divergence", w) {}
};

}  // namespace deua
