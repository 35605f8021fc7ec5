#pragma once

#include <stdexcept>
#include <string>

namespace wmmd {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A NaN or Inf was produced or supplied.
class NumericError : public Error {
public:
    using Error::Error;
};

// A class index is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

// A configuration value is outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Not enough (or malformed) data to carry out the operation.
class DataError : public Error {
public:
    using Error::Error;
};

// Auxiliary class weights are all zero where a normalizer is needed.
class DegenerateWeightsError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace wmmd
