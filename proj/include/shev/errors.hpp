#pragma once

#include <stdexcept>
#include <string>

namespace shev {

// Requested battery power lies outside the real domain of the current equation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Engine power outside the admissible operating envelope.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class DegenerateData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A user-supplied objective/constraint callback produced a non-finite value.
class CallbackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The closed loop cannot continue (e.g. an applied control leaves the battery domain).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shev
