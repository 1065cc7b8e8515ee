#pragma once

#include <stdexcept>
#include <string>

namespace invar {

// Base class for every recoverable error raised by the library. Callers that
// drive a closed loop catch these and turn them into logged events; nothing
// in the library aborts the process.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Evidence (or priors) contradict the data: an interval intersection came out
// empty. Carries enough context to point at the offending datapoint/cell.
class EmptyIntersectionError : public Error {
public:
    EmptyIntersectionError(const std::string& msg, int datapoint = -1, int row = -1, int col = -1)
        : Error(msg), datapoint_index(datapoint), row_index(row), col_index(col) {}
    int datapoint_index;
    int row_index;
    int col_index;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// The one-step enclosure precondition failed; reports the largest step that
// would have been admissible for the given input set.
class StepTooLargeError : public Error {
public:
    StepTooLargeError(const std::string& msg, double max_dt_admissible)
        : Error(msg), max_dt(max_dt_admissible) {}
    double max_dt;
};

// A barrier was evaluated at or past its zero level set; the reciprocal
// function is undefined there. Signals a safety violation upstream.
class NonPositiveBarrierError : public Error {
public:
    NonPositiveBarrierError(const std::string& msg, double barrier_value)
        : Error(msg), value(barrier_value) {}
    double value;
};

// The estimated control direction vanished while the safety term was active.
class ControllabilityLossError : public Error {
public:
    ControllabilityLossError(const std::string& msg, double norm_value)
        : Error(msg), norm(norm_value) {}
    double norm;
};

class NotPositiveDefiniteError : public Error {
public:
    using Error::Error;
};

// Replacement-barrier search exhausted its candidate budget.
class BarrierSynthesisError : public Error {
public:
    BarrierSynthesisError(const std::string& msg, double best_score, int failed_condition)
        : Error(msg), best(best_score), condition(failed_condition) {}
    double best;      // best score among candidates that failed
    int condition;    // 1 = containment, 2 = positivity, 3 = gradient norm
};

// The adaptation iterator would exceed its theoretical cap. Diagnostic only.
class AdaptationOverflowError : public Error {
public:
    using Error::Error;
};

// Fixpoint sweep did not settle within the sweep budget.
class NonTerminationError : public Error {
public:
    NonTerminationError(const std::string& msg, double residual_value)
        : Error(msg), residual(residual_value) {}
    double residual;
};

class NonFiniteStateError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line = -1) : Error(msg), line_number(line) {}
    int line_number;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace invar
