#include "ibstress/valuation.hpp"

#include <algorithm>
#include <cmath>

#include "ibstress/errors.hpp"

namespace ibstress {

void ValuationSpec::check() const {
    if (kind == ValuationKind::furfine && !(recovery >= 0.0 && recovery < 1.0))
        throw ValidationError("recovery rate must lie in [0,1)");
    if (kind == ValuationKind::nonlinear_dr && !(alpha >= 0.0))
        throw ValidationError("alpha must be non-negative");
}

std::string ValuationSpec::label() const {
    switch (kind) {
        case ValuationKind::furfine: return "furfine";
        case ValuationKind::linear_dr: return "dr";
        case ValuationKind::nonlinear_dr: return "nldr";
    }
    return "?";
}

ValuationKind valuation_kind_from_label(const std::string& label) {
    if (label == "furfine") return ValuationKind::furfine;
    if (label == "dr") return ValuationKind::linear_dr;
    if (label == "nldr") return ValuationKind::nonlinear_dr;
    throw UsageError("unknown valuation '" + label + "' (expected furfine|dr|nldr)");
}

double furfine_value(double equity_t, bool defaulted, double recovery) {
    return (defaulted || equity_t < 0.0) ? recovery : 1.0;
}

double linear_dr_value(double equity_t, double equity0) {
    return std::min(std::max(equity_t / equity0, 0.0), 1.0);
}

double nonlinear_dr_value(double equity_t, double equity0, double alpha,
                          NldrExponent exponent) {
    const double v = linear_dr_value(equity_t, equity0);
    const double arg = exponent == NldrExponent::by_value ? v : v - 1.0;
    return (v - 1.0) * std::exp(-alpha * arg) + 1.0;
}

}  // namespace ibstress
