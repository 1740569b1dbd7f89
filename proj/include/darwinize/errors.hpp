#pragma once

#include <stdexcept>
#include <string>

namespace darwinize {

// Two failure families: bad input (config, parameters) and numeric-domain
// problems hit while evaluating a valid configuration. The CLI maps them to
// exit codes 2 and 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class InvalidParameter : public InputError {
public:
    using InputError::InputError;
};

class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

// Closed-form amplitude with a vanishing resonance denominator; perturb Δ_k.
class DegenerateParameter : public NumericError {
public:
    using NumericError::NumericError;
};

class StabilityError : public NumericError {
public:
    using NumericError::NumericError;
};

class NotAState : public NumericError {
public:
    using NumericError::NumericError;
};

class MeasurementDegenerate : public NumericError {
public:
    using NumericError::NumericError;
};

class UndefinedRedundancy : public NumericError {
public:
    using NumericError::NumericError;
};

class UndefinedWitness : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace darwinize
