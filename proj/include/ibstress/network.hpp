#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace ibstress {

// Anonymized bank label. Unique within a snapshot; bank identity is stable
// across ensemble samples drawn for the same snapshot.
using BankId = std::string;

// Degree/strength margins, indexed like the owning network's bank list.
struct NodeMargins {
    std::vector<int> k_out;
    std::vector<int> k_in;
    std::vector<double> s_out;
    std::vector<double> s_in;

    int n() const { return static_cast<int>(k_out.size()); }
};

// Per-bank balance sheet around the interbank book:
//   s_out + net_external = s_in + equity0.
struct BalanceSheet {
    double equity0 = 0.0;       // E(0), strictly positive for live banks
    double net_external = 0.0;  // residual closing the identity; may be negative
    double s_in = 0.0;
    double s_out = 0.0;
};

using BalanceSheets = std::vector<BalanceSheet>;

// Immutable directed weighted exposure snapshot. Weights are strictly
// positive; zero exposures are absent, and the adjacency is implied by
// presence. Safe to share read-only across parallel workers.
class InterbankNetwork {
public:
    // `edges` are (lender, borrower, amount) in index space over `banks`.
    // Duplicate ordered pairs are summed; self-loops and non-positive
    // amounts are rejected. Bank order is preserved as given.
    InterbankNetwork(std::vector<BankId> banks,
                     std::vector<std::tuple<int, int, double>> edges);

    int n() const { return static_cast<int>(banks_.size()); }
    const std::vector<BankId>& banks() const { return banks_; }
    const BankId& bank(int i) const { return banks_[static_cast<std::size_t>(i)]; }
    std::optional<int> bank_index(const BankId& id) const;

    long long edge_count() const { return static_cast<long long>(weights_.size()); }
    double total_volume() const { return total_volume_; }

    // Out-row of lender i: borrowers and matching amounts, sorted by borrower.
    std::span<const int> borrowers(int i) const;
    std::span<const double> amounts(int i) const;

    double exposure(int lender, int borrower) const;  // 0 when absent

    const NodeMargins& margins() const { return margins_; }

    template <typename Fn>  // fn(lender, borrower, amount), row-major order
    void for_each_edge(Fn&& fn) const {
        for (int i = 0; i < n(); ++i) {
            const auto cols = borrowers(i);
            const auto w = amounts(i);
            for (std::size_t k = 0; k < cols.size(); ++k) fn(i, cols[k], w[k]);
        }
    }

private:
    std::vector<BankId> banks_;
    std::unordered_map<BankId, int> index_;
    std::vector<std::size_t> row_begin_;  // size n+1
    std::vector<int> columns_;
    std::vector<double> weights_;
    NodeMargins margins_;
    double total_volume_ = 0.0;
};

// Incremental construction from id-space records (file ingestion, tests).
// build() canonicalizes bank order lexicographically, so inserting the same
// edge set in any order yields an identical network.
class NetworkBuilder {
public:
    void add_bank(const BankId& id);
    // Sums repeated (lender, borrower) pairs. Throws ValidationError on
    // self-loops or non-positive amounts.
    void add_exposure(const BankId& lender, const BankId& borrower, double amount);
    InterbankNetwork build() const;

private:
    std::map<BankId, int> banks_;
    std::map<std::pair<BankId, BankId>, double> exposures_;
};

// Row/column aggregation of the exposure map (identical to the margins the
// network caches at construction).
NodeMargins compute_margins(const InterbankNetwork& net);

// N^E = s_in + E - s_out per bank. Throws ValidationError when a bank has no
// equity entry or a non-positive one.
BalanceSheets derive_balance_sheets(const InterbankNetwork& net,
                                    const std::unordered_map<BankId, double>& equity);

enum class ViolationKind {
    self_loop,
    nonpositive_weight,
    identity_mismatch,
    nonpositive_equity,
};

struct Violation {
    ViolationKind kind;
    std::string detail;
};

// Diagnostic sweep over a snapshot; empty result means valid. Identity checks
// use an absolute tolerance of 1e-9 x the largest participating term.
std::vector<Violation> validate(const InterbankNetwork& net, const BalanceSheets& sheets);

// Structural screen over raw exposure records (self-loops, non-positive
// weights). The network type itself cannot represent these states, so bad
// input has to be caught before construction; ingestion reports them as
// errors rather than dropping rows.
std::vector<Violation> validate_records(
    const std::vector<std::tuple<BankId, BankId, double>>& records);

}  // namespace ibstress
