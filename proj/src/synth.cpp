#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "ibstress/errors.hpp"
#include "ibstress/io.hpp"
#include "ibstress/rng.hpp"

namespace ibstress {

void SyntheticSpec::check() const {
    if (n < 2) throw ValidationError("synthetic spec needs n >= 2");
    if (!(strength_median > 0.0)) throw ValidationError("strength median must be positive");
    if (!(strength_sigma >= 0.0)) throw ValidationError("strength sigma must be non-negative");
    if (!(coupling > 0.0)) throw ValidationError("coupling exponent must be positive");
    if (!(density > 0.0 && density < 1.0)) throw ValidationError("density must lie in (0,1)");
    if (!(equity_noise_sigma >= 0.0)) throw ValidationError("equity noise must be non-negative");
}

namespace {

std::string bank_label(int index, int n) {
    int width = 1;
    for (int v = n - 1; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index);
    return "B" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

}  // namespace

SynthResult synth_snapshot(const SyntheticSpec& spec) {
    spec.check();
    const int n = spec.n;
    Rng rng(spec.seed);

    // Per-bank lending/borrowing propensities, heavy-tailed.
    const double log_median = std::log(spec.strength_median);
    std::vector<double> f_out(static_cast<std::size_t>(n));
    std::vector<double> f_in(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        f_out[static_cast<std::size_t>(i)] = rng.lognormal(log_median, spec.strength_sigma);
        f_in[static_cast<std::size_t>(i)] = rng.lognormal(log_median, spec.strength_sigma);
    }

    // Link kernel g_i g_j with g = f^coupling, scaled by a constant c chosen
    // so the expected number of links matches the density target. The cap
    // keeps probabilities valid for the largest banks; c is found by
    // bisection because the cap makes the sum nonlinear in c.
    constexpr double kMaxLinkProb = 0.95;
    std::vector<double> g_out(static_cast<std::size_t>(n));
    std::vector<double> g_in(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        g_out[static_cast<std::size_t>(i)] =
            std::pow(f_out[static_cast<std::size_t>(i)], spec.coupling);
        g_in[static_cast<std::size_t>(i)] = std::pow(f_in[static_cast<std::size_t>(i)], spec.coupling);
    }
    const double target_links = spec.density * static_cast<double>(n) * static_cast<double>(n - 1);
    auto expected_links_for = [&](double c) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                sum += std::min(kMaxLinkProb, c * g_out[static_cast<std::size_t>(i)] *
                                                  g_in[static_cast<std::size_t>(j)]);
            }
        return sum;
    };
    double c_lo = 0.0;
    double c_hi = 1.0;
    while (expected_links_for(c_hi) < target_links) {
        c_hi *= 2.0;
        if (c_hi > 1e30)
            throw ValidationError("density target unreachable under the probability cap");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (c_lo + c_hi);
        if (expected_links_for(mid) < target_links)
            c_lo = mid;
        else
            c_hi = mid;
    }
    const double c = 0.5 * (c_lo + c_hi);

    double expected_links = 0.0;
    double link_variance = 0.0;
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double p = std::min(kMaxLinkProb, c * g_out[static_cast<std::size_t>(i)] *
                                                        g_in[static_cast<std::size_t>(j)]);
            expected_links += p;
            link_variance += p * (1.0 - p);
            const double u = rng.uniform();
            if (u < p) {
                const double mean_w = std::sqrt(f_out[static_cast<std::size_t>(i)] *
                                                f_in[static_cast<std::size_t>(j)]);
                edges.emplace_back(i, j, rng.exponential(1.0 / mean_w));
            }
        }
    }

    std::vector<BankId> banks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) banks[static_cast<std::size_t>(i)] = bank_label(i, n);
    InterbankNetwork net(banks, std::move(edges));

    // Equity follows a noisy power law of the average interbank position;
    // isolated banks draw from the same law at the median propensity scale.
    const auto& margins = net.margins();
    std::vector<double> equity(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        double pos = (margins.s_in[idx] + margins.s_out[idx]) / 2.0;
        if (!(pos > 0.0)) pos = spec.strength_median;
        const double noise = spec.equity_noise_sigma > 0.0
                                 ? rng.normal(0.0, spec.equity_noise_sigma)
                                 : 0.0;
        equity[idx] = std::exp(spec.equity_intercept + spec.equity_slope * std::log(pos) + noise);
    }

    std::unordered_map<BankId, double> equity_map;
    for (int i = 0; i < n; ++i)
        equity_map[banks[static_cast<std::size_t>(i)]] = equity[static_cast<std::size_t>(i)];
    auto sheets = derive_balance_sheets(net, equity_map);
    return SynthResult{std::move(net), std::move(sheets), expected_links, link_variance};
}

SynthResult synth_to_files(const SyntheticSpec& spec, const std::string& edges_path,
                           const std::string& balance_path) {
    auto result = synth_snapshot(spec);
    write_edge_csv(edges_path, result.net);
    std::vector<double> equity;
    equity.reserve(result.sheets.size());
    for (const auto& s : result.sheets) equity.push_back(s.equity0);
    write_balance_csv(balance_path, result.net.banks(), equity);
    return result;
}

}  // namespace ibstress
