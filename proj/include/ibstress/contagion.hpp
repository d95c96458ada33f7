#pragma once

#include <vector>

#include "ibstress/network.hpp"
#include "ibstress/valuation.hpp"

namespace ibstress {

// Initial shock: either a proportional equity haircut on every bank or the
// outright default of a single bank.
struct ShockSpec {
    enum class Kind { proportional_all, default_one };
    Kind kind = Kind::proportional_all;
    double lambda = 0.0;  // proportional_all; (0,1) for real shocks, 0 allowed in tests
    int bank = -1;        // default_one, index into the network's bank list

    static ShockSpec proportional(double lambda);
    static ShockSpec default_of(int bank_index);
};

struct RunConfig {
    double tolerance = 1e-10;  // max componentwise relative equity change
    int max_rounds = 5000;
    std::vector<int> record_steps;  // rounds of interest for H snapshots (presentation only)
};

// Sheets with the shock absorbed into net_external, the round-1 equity, and
// the banks defaulted by fiat.
struct ShockedState {
    BalanceSheets sheets;
    std::vector<double> equity1;
    std::vector<bool> defaulted;
};

// Proportional: N^E -= lambda*E(0) per bank, so E(1) = (1-lambda)E(0).
// DefaultOne(b): N^E_b -= E_b(0), so E_b(1) = 0 and b is flagged defaulted.
ShockedState apply_shock(const BalanceSheets& sheets, const ShockSpec& shock);

// Equity path of the claim-revaluation fixed-point iteration.
// equity[0] = E(0), equity[1] = E(1) (post-shock), then one entry per round.
struct EquityTrajectory {
    std::vector<std::vector<double>> equity;
    bool converged = false;
    int rounds = 0;  // revaluation rounds performed (map applications past E(1))

    const std::vector<double>& initial() const { return equity.front(); }
    const std::vector<double>& shocked() const { return equity[1]; }
    const std::vector<double>& terminal() const { return equity.back(); }
    // E after `round` revaluation rounds, saturating past convergence.
    const std::vector<double>& at_round(int round) const;
};

// Iterates E_i(t+1) = N_i^E + sum_j w_ij * V(E_j(t)) - s_i^in until the
// largest relative equity change falls below cfg.tolerance or max_rounds is
// hit (reported via converged=false, not fatal). The update is evaluated in
// the algebraically equivalent form E_i(1) - sum_j w_ij * (1 - V(E_j(t))),
// which keeps the zero-shock fixed point and the componentwise monotone
// decrease exact in floating point. The initially defaulted bank, if any, is
// pinned at zero; under the default-only valuation a bank whose equity has
// gone negative stays flagged for the rest of the run.
EquityTrajectory run(const InterbankNetwork& net, const ShockedState& shocked,
                     const ValuationSpec& valuation, const RunConfig& cfg);

// apply_shock + run.
EquityTrajectory run_shocked(const InterbankNetwork& net, const BalanceSheets& sheets,
                             const ShockSpec& shock, const ValuationSpec& valuation,
                             const RunConfig& cfg);

// Mean relative equity loss accumulated after the initial shock:
//   H = sum_i [E_i(1) - E_i(t)] / sum_j E_j(0),  >= 0, non-decreasing in t.
double aggregate_loss_h(const EquityTrajectory& traj);
double aggregate_loss_h_at(const EquityTrajectory& traj, int round);

// Terminal equities of the n single-default scenarios; the backbone shared
// by impact and vulnerability so the n runs are done once, not n^2 times.
struct SingleDefaultStudy {
    // terminal[j] = full terminal equity vector given the default of bank j
    std::vector<std::vector<double>> terminal;
    std::vector<bool> converged;
    std::vector<int> rounds;

    bool all_converged() const;
};

SingleDefaultStudy single_default_study(const InterbankNetwork& net, const BalanceSheets& sheets,
                                        const ValuationSpec& valuation, const RunConfig& cfg,
                                        int threads = 1);

// I_i = 1 - sum_{j != i} E_j(t*|E_i(1)=0) / sum_{j != i} E_j(0). Negative
// terminal equities are kept in the sum (no flooring). Requires n >= 2.
double impact(const InterbankNetwork& net, const BalanceSheets& sheets, int bank,
              const ValuationSpec& valuation, const RunConfig& cfg);

// V_i = mean over j != i of [1 - E_i(t*|E_j(1)=0)/E_i(0)]. Requires n >= 2.
double vulnerability(const InterbankNetwork& net, const BalanceSheets& sheets, int bank,
                     const ValuationSpec& valuation, const RunConfig& cfg);

std::vector<double> impacts_from(const SingleDefaultStudy& study, const BalanceSheets& sheets);
std::vector<double> vulnerabilities_from(const SingleDefaultStudy& study,
                                         const BalanceSheets& sheets);

}  // namespace ibstress
