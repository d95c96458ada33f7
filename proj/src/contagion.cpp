#include "ibstress/contagion.hpp"

#include <algorithm>
#include <cmath>

#include "ibstress/errors.hpp"
#include "ibstress/parallel.hpp"

namespace ibstress {

ShockSpec ShockSpec::proportional(double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw ValidationError("shock fraction must lie in [0,1)");
    ShockSpec s;
    s.kind = Kind::proportional_all;
    s.lambda = lambda;
    return s;
}

ShockSpec ShockSpec::default_of(int bank_index) {
    ShockSpec s;
    s.kind = Kind::default_one;
    s.bank = bank_index;
    return s;
}

ShockedState apply_shock(const BalanceSheets& sheets, const ShockSpec& shock) {
    const int n = static_cast<int>(sheets.size());
    ShockedState out;
    out.sheets = sheets;
    out.equity1.resize(sheets.size());
    out.defaulted.assign(sheets.size(), false);
    switch (shock.kind) {
        case ShockSpec::Kind::proportional_all:
            for (int i = 0; i < n; ++i) {
                auto& s = out.sheets[static_cast<std::size_t>(i)];
                s.net_external -= shock.lambda * s.equity0;
                out.equity1[static_cast<std::size_t>(i)] = (1.0 - shock.lambda) * s.equity0;
            }
            break;
        case ShockSpec::Kind::default_one: {
            if (shock.bank < 0 || shock.bank >= n)
                throw ValidationError("unknown bank index in shock: " +
                                      std::to_string(shock.bank));
            for (int i = 0; i < n; ++i)
                out.equity1[static_cast<std::size_t>(i)] =
                    sheets[static_cast<std::size_t>(i)].equity0;
            auto& s = out.sheets[static_cast<std::size_t>(shock.bank)];
            s.net_external -= s.equity0;
            out.equity1[static_cast<std::size_t>(shock.bank)] = 0.0;
            out.defaulted[static_cast<std::size_t>(shock.bank)] = true;
            break;
        }
    }
    return out;
}

const std::vector<double>& EquityTrajectory::at_round(int round) const {
    const int idx = std::min(std::max(round, 0) + 1, static_cast<int>(equity.size()) - 1);
    return equity[static_cast<std::size_t>(idx)];
}

namespace {

// Claim factor per borrower for the current round.
void valuation_factors(const ValuationSpec& spec, const std::vector<double>& equity_t,
                       const std::vector<double>& equity0, const std::vector<bool>& defaulted,
                       std::vector<double>& out) {
    const std::size_t n = equity_t.size();
    switch (spec.kind) {
        case ValuationKind::furfine:
            for (std::size_t j = 0; j < n; ++j)
                out[j] = furfine_value(equity_t[j], defaulted[j], spec.recovery);
            break;
        case ValuationKind::linear_dr:
            for (std::size_t j = 0; j < n; ++j)
                out[j] = linear_dr_value(equity_t[j], equity0[j]);
            break;
        case ValuationKind::nonlinear_dr:
            for (std::size_t j = 0; j < n; ++j)
                out[j] = nonlinear_dr_value(equity_t[j], equity0[j], spec.alpha, spec.exponent);
            break;
    }
}

}  // namespace

EquityTrajectory run(const InterbankNetwork& net, const ShockedState& shocked,
                     const ValuationSpec& valuation, const RunConfig& cfg) {
    valuation.check();
    if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    if (cfg.max_rounds < 1) throw ValidationError("max_rounds must be >= 1");
    const int n = net.n();
    if (static_cast<int>(shocked.sheets.size()) != n)
        throw ValidationError("sheet count does not match network");

    std::vector<double> equity0(static_cast<std::size_t>(n));
    double equity0_mean = 0.0;
    for (int i = 0; i < n; ++i) {
        equity0[static_cast<std::size_t>(i)] = shocked.sheets[static_cast<std::size_t>(i)].equity0;
        equity0_mean += equity0[static_cast<std::size_t>(i)];
    }
    equity0_mean = n > 0 ? equity0_mean / n : 0.0;
    // Guards the relative-change denominator for banks with tiny E(0).
    const double eps = 1e-12 * equity0_mean;

    EquityTrajectory traj;
    traj.equity.push_back(equity0);
    traj.equity.push_back(shocked.equity1);

    std::vector<bool> defaulted = shocked.defaulted;
    const std::vector<bool> pinned = shocked.defaulted;  // defaulted by fiat: equity stays 0
    std::vector<double> factors(static_cast<std::size_t>(n));
    std::vector<double> current = shocked.equity1;
    std::vector<double> next(static_cast<std::size_t>(n));

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        valuation_factors(valuation, current, equity0, defaulted, factors);
        for (int i = 0; i < n; ++i) {
            if (pinned[static_cast<std::size_t>(i)]) {
                next[static_cast<std::size_t>(i)] = 0.0;
                continue;
            }
            // E_i(1) - sum_j w_ij (1 - V_j): exact fixed point when V == 1.
            double loss = 0.0;
            const auto cols = net.borrowers(i);
            const auto w = net.amounts(i);
            for (std::size_t k = 0; k < cols.size(); ++k)
                loss += w[k] * (1.0 - factors[static_cast<std::size_t>(cols[k])]);
            next[static_cast<std::size_t>(i)] = shocked.equity1[static_cast<std::size_t>(i)] - loss;
        }
        double max_rel_change = 0.0;
        for (int i = 0; i < n; ++i) {
            const double denom = std::max(equity0[static_cast<std::size_t>(i)], eps);
            const double change =
                std::abs(next[static_cast<std::size_t>(i)] - current[static_cast<std::size_t>(i)]);
            max_rel_change = std::max(max_rel_change, change / denom);
        }
        if (valuation.kind == ValuationKind::furfine) {
            for (int i = 0; i < n; ++i)
                if (next[static_cast<std::size_t>(i)] < 0.0)
                    defaulted[static_cast<std::size_t>(i)] = true;  // absorbing
        }
        traj.equity.push_back(next);
        traj.rounds = round;
        current = next;
        if (max_rel_change < cfg.tolerance) {
            traj.converged = true;
            break;
        }
    }
    return traj;
}

EquityTrajectory run_shocked(const InterbankNetwork& net, const BalanceSheets& sheets,
                             const ShockSpec& shock, const ValuationSpec& valuation,
                             const RunConfig& cfg) {
    return run(net, apply_shock(sheets, shock), valuation, cfg);
}

namespace {

double loss_fraction(const std::vector<double>& shocked, const std::vector<double>& at,
                     const std::vector<double>& initial) {
    double lost = 0.0;
    double base = 0.0;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        lost += shocked[i] - at[i];
        base += initial[i];
    }
    return base > 0.0 ? lost / base : 0.0;
}

}  // namespace

double aggregate_loss_h(const EquityTrajectory& traj) {
    return loss_fraction(traj.shocked(), traj.terminal(), traj.initial());
}

double aggregate_loss_h_at(const EquityTrajectory& traj, int round) {
    return loss_fraction(traj.shocked(), traj.at_round(round), traj.initial());
}

bool SingleDefaultStudy::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

SingleDefaultStudy single_default_study(const InterbankNetwork& net, const BalanceSheets& sheets,
                                        const ValuationSpec& valuation, const RunConfig& cfg,
                                        int threads) {
    const int n = net.n();
    SingleDefaultStudy study;
    study.terminal.resize(static_cast<std::size_t>(n));
    study.converged.assign(static_cast<std::size_t>(n), false);
    study.rounds.assign(static_cast<std::size_t>(n), 0);
    parallel_for(n, threads, [&](int j) {
        auto traj = run_shocked(net, sheets, ShockSpec::default_of(j), valuation, cfg);
        study.terminal[static_cast<std::size_t>(j)] = traj.terminal();
        study.converged[static_cast<std::size_t>(j)] = traj.converged;
        study.rounds[static_cast<std::size_t>(j)] = traj.rounds;
    });
    return study;
}

std::vector<double> impacts_from(const SingleDefaultStudy& study, const BalanceSheets& sheets) {
    const int n = static_cast<int>(sheets.size());
    if (n < 2) throw ValidationError("impact is undefined for n < 2");
    std::vector<double> impacts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double terminal_sum = 0.0;
        double initial_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            terminal_sum += study.terminal[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            initial_sum += sheets[static_cast<std::size_t>(j)].equity0;
        }
        impacts[static_cast<std::size_t>(i)] = 1.0 - terminal_sum / initial_sum;
    }
    return impacts;
}

std::vector<double> vulnerabilities_from(const SingleDefaultStudy& study,
                                         const BalanceSheets& sheets) {
    const int n = static_cast<int>(sheets.size());
    if (n < 2) throw ValidationError("vulnerability is undefined for n < 2");
    std::vector<double> vuln(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double e_term =
                study.terminal[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            sum += 1.0 - e_term / sheets[static_cast<std::size_t>(i)].equity0;
        }
        vuln[static_cast<std::size_t>(i)] = sum / (n - 1);
    }
    return vuln;
}

double impact(const InterbankNetwork& net, const BalanceSheets& sheets, int bank,
              const ValuationSpec& valuation, const RunConfig& cfg) {
    const int n = net.n();
    if (n < 2) throw ValidationError("impact is undefined for n < 2");
    if (bank < 0 || bank >= n) throw ValidationError("unknown bank index");
    const auto traj = run_shocked(net, sheets, ShockSpec::default_of(bank), valuation, cfg);
    double terminal_sum = 0.0;
    double initial_sum = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j == bank) continue;
        terminal_sum += traj.terminal()[static_cast<std::size_t>(j)];
        initial_sum += sheets[static_cast<std::size_t>(j)].equity0;
    }
    return 1.0 - terminal_sum / initial_sum;
}

double vulnerability(const InterbankNetwork& net, const BalanceSheets& sheets, int bank,
                     const ValuationSpec& valuation, const RunConfig& cfg) {
    const int n = net.n();
    if (n < 2) throw ValidationError("vulnerability is undefined for n < 2");
    if (bank < 0 || bank >= n) throw ValidationError("unknown bank index");
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j == bank) continue;
        const auto traj = run_shocked(net, sheets, ShockSpec::default_of(j), valuation, cfg);
        sum += 1.0 - traj.terminal()[static_cast<std::size_t>(bank)] /
                         sheets[static_cast<std::size_t>(bank)].equity0;
    }
    return sum / (n - 1);
}

}  // namespace ibstress
