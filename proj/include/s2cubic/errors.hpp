#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace s2c {

enum class Errc {
    invalid_argument,
    singular_derivative,
    step_size_underflow,
    non_positive_x,
    singular_q,
    manifold_escape,
    poor_convergence,
    inconclusive,
    bracket_failure,
    singular_denominator,
    degenerate_derivative,
    degenerate_denominator,
    degenerate_metric,
    non_positive_lambda,
    unbounded_diagnostic,
    chart_mismatch,
    quadrature_failure,
    no_overlap,
    no_stationary_point,
    io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    // `where` is the independent-variable value at which the failure occurred
    Error(Errc code, const std::string& what, double where) : Error(code, what) { where_ = where; }

    Errc code() const noexcept { return code_; }
    double where() const noexcept { return where_; }

private:
    Errc code_;
    double where_ = NAN;
};

}  // namespace s2c
