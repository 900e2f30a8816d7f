#pragma once

#include <stdexcept>
#include <string>

namespace outbreak {

/// Out-of-range model or strategy parameter (probabilities outside [0,1],
/// non-positive rates, malformed breakpoint lists, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An operation was called outside of its documented precondition.
class precondition_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A state left the admissible simplex beyond round-off tolerance.
class invariant_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integration failure: step-size underflow, conservation drift, horizon
/// exhausted while an answer was still pending.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, double t_reached)
        : std::runtime_error(what), t_reached_(t_reached) {}

    double t_reached() const noexcept { return t_reached_; }

private:
    double t_reached_;
};

/// Configuration text could not be parsed or validated.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace outbreak
