#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibstress/network.hpp"

namespace ibstress {

// Empirical constraint values the null ensemble must reproduce on average.
struct FitTargets {
    std::vector<BankId> banks;
    std::vector<double> k_out;
    std::vector<double> k_in;
    std::vector<double> s_out;
    std::vector<double> s_in;

    int n() const { return static_cast<int>(banks.size()); }

    static FitTargets from_margins(std::vector<BankId> banks, const NodeMargins& margins);
    static FitTargets from_network(const InterbankNetwork& net);

    // Throws ValidationError on infeasible targets: degrees outside [0, n-1],
    // mismatched degree/strength totals, or k/s inconsistencies (a bank with
    // links but zero volume, or volume but no links).
    void validate() const;
};

struct FitDiagnostics {
    double residual = 0.0;  // max abs (degrees) / max relative (strengths)
    long iterations = 0;
    bool converged = false;
    bool newton_fallback = false;
};

struct FitOptions {
    double tolerance = 1e-8;
    long max_iterations = 100000;
    double damping = 0.5;
};

// Fitted null model. The binary layer is stored in the transformed variables
// x = exp(-alpha), for which link probabilities read p_ij = x_i y_j/(1+x_i y_j);
// the weight layer keeps the rate multipliers beta directly. Only p_ij and the
// pair rates are gauge-invariant; raw multipliers are never compared.
//
// Degree constraints that sit on the boundary of the feasible region (a bank
// lending to nobody or to everybody, or a saturated block of pairs) would
// push multipliers to +/- infinity. Those pairs are pinned to probability
// 0 or 1 symbolically instead and excluded from the solve; see fit_binary.
struct SdecmParams {
    std::vector<BankId> banks;
    std::vector<double> x_out;
    std::vector<double> x_in;
    std::vector<std::int8_t> pin;  // n*n row-major: -1 pinned zero, +1 pinned one, 0 free
    std::vector<double> beta_out;
    std::vector<double> beta_in;
    FitDiagnostics binary_fit;
    FitDiagnostics weight_fit;
    std::uint32_t seed_scheme = 1;

    int n() const { return static_cast<int>(banks.size()); }

    std::int8_t pin_at(int i, int j) const {
        return pin[static_cast<std::size_t>(i) * static_cast<std::size_t>(n()) +
                   static_cast<std::size_t>(j)];
    }

    // Bernoulli parameter of the directed link i -> j. Throws on i == j.
    double link_probability(int i, int j) const;

    // Exponential rate of the conditional weight on (i, j); positive for
    // every admissible pair. Throws if queried on a pair with rate <= 0.
    double pair_rate(int i, int j) const;

    // Conditional mean weight given the link exists: 1 / rate.
    double expected_weight(int i, int j) const;

    nlohmann::ordered_json to_json() const;
    static SdecmParams from_json(const nlohmann::json& j);
};

// Ensemble expectations of all four margins; degrees are real-valued here.
struct ExpectedMargins {
    std::vector<double> k_out;
    std::vector<double> k_in;
    std::vector<double> s_out;
    std::vector<double> s_in;
};

// Closed-form expected margins under the fitted model; after a successful
// fit these reproduce the targets within the fit tolerance.
ExpectedMargins analytic_margins(const SdecmParams& params);

// Solves the degree layer: sum_{j!=i} p_ij = k_out*_i and transposed.
// Integer targets are first screened by a max-flow realizability check that
// also identifies every pair forced to 0 or 1 in all realizations (tight
// Gale-Ryser cuts); forced pairs are pinned and the remaining strictly
// interior system is solved by damped fixed point on x with a safeguarded
// per-coordinate Newton fallback once the iteration stalls. Residual target:
// max abs deviation <= opts.tolerance.
void fit_binary(SdecmParams& params, const FitTargets& targets, const FitOptions& opts = {});

// Solves the strength layer: sum_{j!=i} p_ij/(beta_out_i + beta_in_j) = s_out*_i
// and transposed, same solver scheme. Residual target: max relative.
// Requires fit_binary to have populated the binary layer.
void fit_weights(SdecmParams& params, const FitTargets& targets, const FitOptions& opts = {});

SdecmParams fit_sdecm(const FitTargets& targets, const FitOptions& opts = {});

// Draws one network: each ordered pair independently with probability p_ij,
// weight exponential with the pair rate. Deterministic given the seed; use
// derive_stream_seed(master, sample_index) for ensemble streams.
InterbankNetwork sample_network(const SdecmParams& params, std::uint64_t seed);

}  // namespace ibstress
