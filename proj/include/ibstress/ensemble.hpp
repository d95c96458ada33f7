#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibstress/contagion.hpp"
#include "ibstress/sdecm.hpp"

namespace ibstress {

// Observed-vs-expected summary for one metric.
struct EnsembleStats {
    std::string metric;
    std::string subject;  // "aggregate" or a bank id
    std::string round;    // recorded round label ("3", ..., "terminal") or ""
    double observed = 0.0;
    double mean = 0.0;
    double stddev = 0.0;              // unbiased; NaN when M < 2
    std::optional<double> z;          // (observed - mean)/std; absent when std == 0
    std::optional<double> rel_dev;    // (observed - mean)/mean; absent when mean == 0
    int sample_count = 0;
};

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

// Two-pass mean and unbiased standard deviation in index order; the reduction
// is identical for any worker count because samples are stored by index.
MeanStd mean_std(std::span<const double> samples);

EnsembleStats compare(std::string metric, std::string subject, std::string round,
                      double observed, std::span<const double> samples);

// Scenario run over the ensemble: the system-wide shock or the family of all
// single-bank defaults.
struct EnsembleScenario {
    enum class Kind { proportional, single_defaults };
    Kind kind = Kind::proportional;
    double lambda = 0.01;

    static EnsembleScenario proportional(double lambda);
    static EnsembleScenario single_defaults();
};

struct EnsembleRunResult {
    std::vector<int> recorded_rounds;
    // proportional scenario: h_at_round[r][m] for recorded round r, terminal in h_terminal
    std::vector<std::vector<double>> h_at_round;
    std::vector<double> h_terminal;
    // single-default scenario: per-bank metric samples [bank][m]
    std::vector<std::vector<double>> impact_samples;
    std::vector<std::vector<double>> vulnerability_samples;
    int samples = 0;
    int nonconverged_runs = 0;
};

// Draws M networks from the fitted model and runs the scenario on each.
// Balance sheets are rebuilt per sample: equity stays at its empirical value
// and net external assets absorb the sampled interbank margins, so the
// accounting identity holds exactly with the empirical E(0).
EnsembleRunResult run_ensemble(const SdecmParams& params,
                               const std::vector<double>& empirical_equity,
                               const EnsembleScenario& scenario, const ValuationSpec& valuation,
                               const RunConfig& cfg, int samples, std::uint64_t master_seed,
                               int threads = 1);

// Balance sheets for one sampled network under the fixed-equity policy.
BalanceSheets sheets_with_fixed_equity(const InterbankNetwork& net,
                                       const std::vector<double>& equity);

// Equal-count groups of banks ranked by initial equity (ascending). Group
// sizes differ by at most one; fewer than `groups` banks means fewer groups.
std::vector<std::vector<int>> equity_decile_groups(std::span<const double> equity0, int groups = 10);

struct DecileProfile {
    std::vector<double> observed;  // group means, ascending equity
    std::vector<double> expected;
    std::vector<int> group_size;
};

DecileProfile decile_aggregate(std::span<const double> observed_metric,
                               std::span<const double> expected_metric,
                               std::span<const double> equity0, int groups = 10);

}  // namespace ibstress
