#pragma once

#include <string>

namespace ibstress {

enum class ValuationKind { furfine, linear_dr, nonlinear_dr };

// Exponent variant for the non-linear claim-damping factor 1 - (1-v)*exp(.):
//   by_value: exp(-alpha*v). Stays in [0,1], reduces to the linear factor at
//             alpha=0 and to the default-only step as alpha grows.
//   by_loss:  exp(-alpha*(v-1)). Kept for side-by-side comparison only; it
//             drops below 0 at full equity loss for alpha>0, so the engine
//             never uses it by default.
enum class NldrExponent { by_value, by_loss };

struct ValuationSpec {
    ValuationKind kind = ValuationKind::linear_dr;
    double recovery = 0.0;  // R in [0,1); furfine only
    double alpha = 0.0;     // >= 0; nonlinear_dr only
    NldrExponent exponent = NldrExponent::by_value;

    void check() const;  // throws ValidationError on out-of-range parameters

    std::string label() const;  // "furfine" | "dr" | "nldr"
};

ValuationKind valuation_kind_from_label(const std::string& label);

// Default-only factor: 1 while the bank is solvent and not flagged as
// defaulted, R afterwards. The flag exists so a bank defaulted by fiat
// (E = 0) is not misread as solvent, and it is absorbing (default is
// permanent once equity has gone negative).
double furfine_value(double equity_t, bool defaulted, double recovery);

// min(max(E_t/E_0, 0), 1).
double linear_dr_value(double equity_t, double equity0);

// 1 - (1-v) * exp(-alpha*v) with v the linear factor. Equals v at alpha=0;
// approaches the default-only step (with R=0) as alpha -> infinity.
double nonlinear_dr_value(double equity_t, double equity0, double alpha,
                          NldrExponent exponent = NldrExponent::by_value);

}  // namespace ibstress
