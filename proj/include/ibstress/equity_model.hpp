#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ibstress/network.hpp"

namespace ibstress {

// Ordinary least squares of log(equity) on log(average interbank position),
// used to impute equity where only exposures are known.
struct RegressionFit {
    double intercept = 0.0;  // a, in log space (natural logs)
    double slope = 0.0;      // b
    double pearson_r = 0.0;
    double r_squared = 0.0;
    int samples = 0;
};

// pairs are (average position, equity), both strictly positive; needs >= 3
// points and non-degenerate position variance.
RegressionFit fit_log_regression(std::span<const std::pair<double, double>> pairs);

// E = exp(a + b * log((s_in + s_out)/2)). Throws for banks with zero
// interbank position (no basis for imputation).
double impute_equity_one(const RegressionFit& fit, double avg_position);
std::vector<double> impute_equity(const RegressionFit& fit, const NodeMargins& margins);

}  // namespace ibstress
