#include "ibstress/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ibstress/errors.hpp"
#include "ibstress/parallel.hpp"
#include "ibstress/rng.hpp"

namespace ibstress {

MeanStd mean_std(std::span<const double> samples) {
    MeanStd out;
    const std::size_t m = samples.size();
    if (m == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.stddev = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double sum = 0.0;
    for (const double v : samples) sum += v;
    out.mean = sum / static_cast<double>(m);
    if (m < 2) {
        out.stddev = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double ss = 0.0;
    for (const double v : samples) {
        const double d = v - out.mean;
        ss += d * d;
    }
    out.stddev = std::sqrt(ss / static_cast<double>(m - 1));
    return out;
}

EnsembleStats compare(std::string metric, std::string subject, std::string round,
                      double observed, std::span<const double> samples) {
    EnsembleStats s;
    s.metric = std::move(metric);
    s.subject = std::move(subject);
    s.round = std::move(round);
    s.observed = observed;
    s.sample_count = static_cast<int>(samples.size());
    const auto ms = mean_std(samples);
    s.mean = ms.mean;
    s.stddev = ms.stddev;
    if (std::isfinite(ms.stddev) && ms.stddev > 0.0) s.z = (observed - ms.mean) / ms.stddev;
    if (std::isfinite(ms.mean) && ms.mean != 0.0) s.rel_dev = (observed - ms.mean) / ms.mean;
    return s;
}

EnsembleScenario EnsembleScenario::proportional(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ValidationError("ensemble shock fraction must lie in (0,1)");
    EnsembleScenario s;
    s.kind = Kind::proportional;
    s.lambda = lambda;
    return s;
}

EnsembleScenario EnsembleScenario::single_defaults() {
    EnsembleScenario s;
    s.kind = Kind::single_defaults;
    return s;
}

BalanceSheets sheets_with_fixed_equity(const InterbankNetwork& net,
                                       const std::vector<double>& equity) {
    if (equity.size() != static_cast<std::size_t>(net.n()))
        throw ValidationError("equity vector does not match network size");
    const auto& m = net.margins();
    BalanceSheets sheets(equity.size());
    for (std::size_t i = 0; i < equity.size(); ++i) {
        if (!(equity[i] > 0.0))
            throw ValidationError("non-positive equity for bank " +
                                  net.bank(static_cast<int>(i)));
        sheets[i].equity0 = equity[i];
        sheets[i].s_in = m.s_in[i];
        sheets[i].s_out = m.s_out[i];
        sheets[i].net_external = sheets[i].s_in + sheets[i].equity0 - sheets[i].s_out;
    }
    return sheets;
}

EnsembleRunResult run_ensemble(const SdecmParams& params,
                               const std::vector<double>& empirical_equity,
                               const EnsembleScenario& scenario, const ValuationSpec& valuation,
                               const RunConfig& cfg, int samples, std::uint64_t master_seed,
                               int threads) {
    if (samples < 1) throw ValidationError("ensemble needs at least one sample");
    const int n = params.n();
    if (static_cast<int>(empirical_equity.size()) != n)
        throw ValidationError("equity vector does not match fitted model");

    EnsembleRunResult result;
    result.samples = samples;
    result.recorded_rounds = cfg.record_steps;

    const bool proportional = scenario.kind == EnsembleScenario::Kind::proportional;
    if (proportional) {
        result.h_at_round.assign(result.recorded_rounds.size(),
                                 std::vector<double>(static_cast<std::size_t>(samples), 0.0));
        result.h_terminal.assign(static_cast<std::size_t>(samples), 0.0);
    } else {
        result.impact_samples.assign(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(samples), 0.0));
        result.vulnerability_samples.assign(
            static_cast<std::size_t>(n),
            std::vector<double>(static_cast<std::size_t>(samples), 0.0));
    }

    std::vector<int> nonconverged(static_cast<std::size_t>(samples), 0);
    parallel_for(samples, threads, [&](int m) {
        const auto seed = derive_stream_seed(master_seed, static_cast<std::uint64_t>(m));
        const auto net = sample_network(params, seed);
        const auto sheets = sheets_with_fixed_equity(net, empirical_equity);
        if (proportional) {
            const auto traj = run_shocked(net, sheets, ShockSpec::proportional(scenario.lambda),
                                          valuation, cfg);
            if (!traj.converged) nonconverged[static_cast<std::size_t>(m)] = 1;
            for (std::size_t r = 0; r < result.recorded_rounds.size(); ++r)
                result.h_at_round[r][static_cast<std::size_t>(m)] =
                    aggregate_loss_h_at(traj, result.recorded_rounds[r]);
            result.h_terminal[static_cast<std::size_t>(m)] = aggregate_loss_h(traj);
        } else {
            const auto study = single_default_study(net, sheets, valuation, cfg, 1);
            if (!study.all_converged()) nonconverged[static_cast<std::size_t>(m)] = 1;
            const auto impacts = impacts_from(study, sheets);
            const auto vulns = vulnerabilities_from(study, sheets);
            for (int b = 0; b < n; ++b) {
                result.impact_samples[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)] =
                    impacts[static_cast<std::size_t>(b)];
                result.vulnerability_samples[static_cast<std::size_t>(b)]
                                            [static_cast<std::size_t>(m)] =
                    vulns[static_cast<std::size_t>(b)];
            }
        }
    });
    result.nonconverged_runs = std::accumulate(nonconverged.begin(), nonconverged.end(), 0);
    return result;
}

std::vector<std::vector<int>> equity_decile_groups(std::span<const double> equity0, int groups) {
    const int n = static_cast<int>(equity0.size());
    if (n == 0) return {};
    groups = std::min(std::max(groups, 1), n);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return equity0[static_cast<std::size_t>(a)] < equity0[static_cast<std::size_t>(b)];
    });
    std::vector<std::vector<int>> out(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        const int begin = static_cast<int>(static_cast<long long>(g) * n / groups);
        const int end = static_cast<int>(static_cast<long long>(g + 1) * n / groups);
        out[static_cast<std::size_t>(g)].assign(order.begin() + begin, order.begin() + end);
    }
    return out;
}

DecileProfile decile_aggregate(std::span<const double> observed_metric,
                               std::span<const double> expected_metric,
                               std::span<const double> equity0, int groups) {
    if (observed_metric.size() != equity0.size() || expected_metric.size() != equity0.size())
        throw ValidationError("metric vectors must match the bank count");
    const auto grouping = equity_decile_groups(equity0, groups);
    DecileProfile profile;
    for (const auto& members : grouping) {
        double obs = 0.0;
        double exp = 0.0;
        for (const int b : members) {
            obs += observed_metric[static_cast<std::size_t>(b)];
            exp += expected_metric[static_cast<std::size_t>(b)];
        }
        const double size = static_cast<double>(members.size());
        profile.observed.push_back(obs / size);
        profile.expected.push_back(exp / size);
        profile.group_size.push_back(static_cast<int>(members.size()));
    }
    return profile;
}

}  // namespace ibstress
