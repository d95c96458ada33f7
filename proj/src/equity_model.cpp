#include "ibstress/equity_model.hpp"

#include <cmath>

#include "ibstress/csv.hpp"
#include "ibstress/errors.hpp"

namespace ibstress {

RegressionFit fit_log_regression(std::span<const std::pair<double, double>> pairs) {
    const int n = static_cast<int>(pairs.size());
    if (n < 3) throw ValidationError("regression needs at least 3 calibration points");
    std::vector<double> lx(pairs.size());
    std::vector<double> ly(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [x, y] = pairs[i];
        if (!(x > 0.0) || !(y > 0.0))
            throw ValidationError("calibration pairs must be strictly positive (point " +
                                  std::to_string(i + 1) + ": " + format_double(x) + ", " +
                                  format_double(y) + ")");
        lx[i] = std::log(x);
        ly[i] = std::log(y);
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) throw ValidationError("degenerate calibration: positions have no variance");

    RegressionFit fit;
    fit.samples = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.pearson_r = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    fit.r_squared = fit.pearson_r * fit.pearson_r;
    return fit;
}

double impute_equity_one(const RegressionFit& fit, double avg_position) {
    if (!(avg_position > 0.0))
        throw ValidationError("cannot impute equity from zero interbank position");
    return std::exp(fit.intercept + fit.slope * std::log(avg_position));
}

std::vector<double> impute_equity(const RegressionFit& fit, const NodeMargins& margins) {
    std::vector<double> equity(static_cast<std::size_t>(margins.n()));
    for (int i = 0; i < margins.n(); ++i) {
        const double pos = (margins.s_in[static_cast<std::size_t>(i)] +
                            margins.s_out[static_cast<std::size_t>(i)]) /
                           2.0;
        equity[static_cast<std::size_t>(i)] = impute_equity_one(fit, pos);
    }
    return equity;
}

}  // namespace ibstress
