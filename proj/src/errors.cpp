#include "s2cubic/errors.hpp"

namespace s2c {

const char* errc_name(Errc code)
{
    switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::singular_derivative: return "SingularDerivative";
    case Errc::step_size_underflow: return "StepSizeUnderflow";
    case Errc::non_positive_x: return "NonPositiveX";
    case Errc::singular_q: return "SingularQ";
    case Errc::manifold_escape: return "ManifoldEscape";
    case Errc::poor_convergence: return "PoorConvergence";
    case Errc::inconclusive: return "Inconclusive";
    case Errc::bracket_failure: return "BracketFailure";
    case Errc::singular_denominator: return "SingularDenominator";
    case Errc::degenerate_derivative: return "DegenerateDerivative";
    case Errc::degenerate_denominator: return "DegenerateDenominator";
    case Errc::degenerate_metric: return "DegenerateMetric";
    case Errc::non_positive_lambda: return "NonPositiveLambda";
    case Errc::unbounded_diagnostic: return "UnboundedDiagnostic";
    case Errc::chart_mismatch: return "ChartMismatch";
    case Errc::quadrature_failure: return "QuadratureFailure";
    case Errc::no_overlap: return "NoOverlap";
    case Errc::no_stationary_point: return "NoStationaryPoint";
    case Errc::io_error: return "IOError";
    }
    return "Unknown";
}

}  // namespace s2c
