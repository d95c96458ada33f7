#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibstress/equity_model.hpp"
#include "ibstress/network.hpp"

namespace ibstress {

// File formats (UTF-8 CSV):
//   edge list:      lender,borrower,amount
//   balance sheets: bank,equity
//   calibration:    position,equity

InterbankNetwork read_edge_csv(const std::string& path);
void write_edge_csv(const std::string& path, const InterbankNetwork& net);

std::map<BankId, double> read_balance_csv(const std::string& path);
void write_balance_csv(const std::string& path, const std::vector<BankId>& banks,
                       const std::vector<double>& equity);

RegressionFit read_calibration_csv(const std::string& path);

struct IngestOptions {
    std::string edges_path;
    std::string balance_path;                   // optional: "" means absent
    std::optional<RegressionFit> imputation;    // fallback equity model
};

struct Snapshot {
    InterbankNetwork net;
    BalanceSheets sheets;
    std::vector<std::string> input_paths;  // files the snapshot was built from
};

// Builds a validated snapshot. Parallel edge rows are summed; banks listed in
// the balance file but absent from the edge list are retained as isolated
// nodes. Equity comes from the balance file where present, otherwise from the
// imputation model; a bank with exposures and neither source is an error.
Snapshot ingest(const IngestOptions& opts);

// Synthetic snapshot generator standing in for confidential market data:
// log-normal strength propensities, degree-strength coupled link
// probabilities, exponential weights, and power-law equity with noise.
struct SyntheticSpec {
    int n = 100;
    double strength_median = 100.0;  // median of the log-normal propensity
    double strength_sigma = 1.0;     // sigma of log propensity
    double coupling = 0.5;           // exponent tying link odds to propensities
    double density = 0.05;           // target link density over ordered pairs
    double equity_slope = 0.83;     // equity ~ exp(intercept) * position^slope
    double equity_intercept = 0.8;  // natural-log intercept
    double equity_noise_sigma = 0.35;
    std::uint64_t seed = 1;

    void check() const;
};

struct SynthResult {
    InterbankNetwork net;
    BalanceSheets sheets;
    // Link-law bookkeeping for statistical checks on the generator itself.
    double expected_links = 0.0;
    double link_variance = 0.0;
};

SynthResult synth_snapshot(const SyntheticSpec& spec);

// Generates and writes the pair of files; byte-identical for a fixed spec.
SynthResult synth_to_files(const SyntheticSpec& spec, const std::string& edges_path,
                           const std::string& balance_path);

// Reproducibility record written next to every command's outputs.
struct Manifest {
    std::string command;
    nlohmann::ordered_json config;  // resolved options, sufficient to re-run
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    std::string created_utc;

    nlohmann::ordered_json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
    void write(const std::string& path) const;
    static Manifest load(const std::string& path);
};

// FNV-1a 64-bit content digest (hex). Integrity bookkeeping, not crypto.
std::string file_digest_hex(const std::string& path);

std::string utc_timestamp_now();

}  // namespace ibstress
