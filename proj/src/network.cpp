#include "ibstress/network.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ibstress/csv.hpp"
#include "ibstress/errors.hpp"

namespace ibstress {

InterbankNetwork::InterbankNetwork(std::vector<BankId> banks,
                                   std::vector<std::tuple<int, int, double>> edges)
    : banks_(std::move(banks)) {
    const int nb = n();
    index_.reserve(banks_.size());
    for (int i = 0; i < nb; ++i) {
        if (!index_.emplace(banks_[static_cast<std::size_t>(i)], i).second)
            throw ValidationError("duplicate bank id: " + banks_[static_cast<std::size_t>(i)]);
    }

    std::sort(edges.begin(), edges.end());
    // Merge duplicate ordered pairs by summing their amounts.
    std::vector<std::tuple<int, int, double>> merged;
    merged.reserve(edges.size());
    for (const auto& [i, j, w] : edges) {
        if (i < 0 || i >= nb || j < 0 || j >= nb)
            throw ValidationError("edge endpoint out of range");
        if (i == j)
            throw ValidationError("self-loop on bank " + banks_[static_cast<std::size_t>(i)]);
        if (!(w > 0.0))
            throw ValidationError("non-positive exposure " + format_double(w) + " on (" +
                                  banks_[static_cast<std::size_t>(i)] + "," +
                                  banks_[static_cast<std::size_t>(j)] + ")");
        if (!merged.empty() && std::get<0>(merged.back()) == i && std::get<1>(merged.back()) == j)
            std::get<2>(merged.back()) += w;
        else
            merged.emplace_back(i, j, w);
    }

    row_begin_.assign(static_cast<std::size_t>(nb) + 1, 0);
    columns_.reserve(merged.size());
    weights_.reserve(merged.size());
    margins_.k_out.assign(static_cast<std::size_t>(nb), 0);
    margins_.k_in.assign(static_cast<std::size_t>(nb), 0);
    margins_.s_out.assign(static_cast<std::size_t>(nb), 0.0);
    margins_.s_in.assign(static_cast<std::size_t>(nb), 0.0);

    int row = 0;
    for (const auto& [i, j, w] : merged) {
        while (row < i) row_begin_[static_cast<std::size_t>(++row)] = columns_.size();
        columns_.push_back(j);
        weights_.push_back(w);
        margins_.k_out[static_cast<std::size_t>(i)] += 1;
        margins_.k_in[static_cast<std::size_t>(j)] += 1;
        margins_.s_out[static_cast<std::size_t>(i)] += w;
        margins_.s_in[static_cast<std::size_t>(j)] += w;
        total_volume_ += w;
    }
    while (row < nb) row_begin_[static_cast<std::size_t>(++row)] = columns_.size();
}

std::optional<int> InterbankNetwork::bank_index(const BankId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::span<const int> InterbankNetwork::borrowers(int i) const {
    const auto b = row_begin_[static_cast<std::size_t>(i)];
    const auto e = row_begin_[static_cast<std::size_t>(i) + 1];
    return {columns_.data() + b, e - b};
}

std::span<const double> InterbankNetwork::amounts(int i) const {
    const auto b = row_begin_[static_cast<std::size_t>(i)];
    const auto e = row_begin_[static_cast<std::size_t>(i) + 1];
    return {weights_.data() + b, e - b};
}

double InterbankNetwork::exposure(int lender, int borrower) const {
    const auto cols = borrowers(lender);
    const auto it = std::lower_bound(cols.begin(), cols.end(), borrower);
    if (it == cols.end() || *it != borrower) return 0.0;
    return amounts(lender)[static_cast<std::size_t>(it - cols.begin())];
}

void NetworkBuilder::add_bank(const BankId& id) {
    banks_.emplace(id, 0);
}

void NetworkBuilder::add_exposure(const BankId& lender, const BankId& borrower, double amount) {
    if (lender == borrower)
        throw ValidationError("self-loop on bank " + lender);
    if (!(amount > 0.0))
        throw ValidationError("non-positive exposure " + format_double(amount) + " on (" +
                              lender + "," + borrower + ")");
    banks_.emplace(lender, 0);
    banks_.emplace(borrower, 0);
    exposures_[{lender, borrower}] += amount;
}

InterbankNetwork NetworkBuilder::build() const {
    std::vector<BankId> banks;
    banks.reserve(banks_.size());
    for (const auto& [id, _] : banks_) banks.push_back(id);  // std::map: sorted

    std::unordered_map<BankId, int> index;
    index.reserve(banks.size());
    for (std::size_t i = 0; i < banks.size(); ++i) index[banks[i]] = static_cast<int>(i);

    std::vector<std::tuple<int, int, double>> edges;
    edges.reserve(exposures_.size());
    for (const auto& [pair, w] : exposures_)
        edges.emplace_back(index.at(pair.first), index.at(pair.second), w);
    return InterbankNetwork(std::move(banks), std::move(edges));
}

NodeMargins compute_margins(const InterbankNetwork& net) {
    return net.margins();
}

BalanceSheets derive_balance_sheets(const InterbankNetwork& net,
                                    const std::unordered_map<BankId, double>& equity) {
    const auto& m = net.margins();
    BalanceSheets sheets(static_cast<std::size_t>(net.n()));
    for (int i = 0; i < net.n(); ++i) {
        const auto it = equity.find(net.bank(i));
        if (it == equity.end())
            throw ValidationError("no equity for bank " + net.bank(i));
        if (!(it->second > 0.0))
            throw ValidationError("non-positive equity for bank " + net.bank(i) + ": " +
                                  format_double(it->second));
        auto& s = sheets[static_cast<std::size_t>(i)];
        s.equity0 = it->second;
        s.s_in = m.s_in[static_cast<std::size_t>(i)];
        s.s_out = m.s_out[static_cast<std::size_t>(i)];
        s.net_external = s.s_in + s.equity0 - s.s_out;
    }
    return sheets;
}

std::vector<Violation> validate_records(
    const std::vector<std::tuple<BankId, BankId, double>>& records) {
    std::vector<Violation> out;
    for (const auto& [lender, borrower, amount] : records) {
        if (lender == borrower)
            out.push_back({ViolationKind::self_loop, "self-loop on " + lender});
        if (!(amount > 0.0))
            out.push_back({ViolationKind::nonpositive_weight,
                           "exposure (" + lender + "," + borrower + ") = " +
                               format_double(amount)});
    }
    return out;
}

std::vector<Violation> validate(const InterbankNetwork& net, const BalanceSheets& sheets) {
    std::vector<Violation> out;
    net.for_each_edge([&](int i, int j, double w) {
        if (i == j)
            out.push_back({ViolationKind::self_loop, "self-loop on " + net.bank(i)});
        if (!(w > 0.0))
            out.push_back({ViolationKind::nonpositive_weight,
                           "exposure (" + net.bank(i) + "," + net.bank(j) + ") = " +
                               format_double(w)});
    });
    if (static_cast<int>(sheets.size()) != net.n()) {
        out.push_back({ViolationKind::identity_mismatch,
                       "balance sheet count does not match bank count"});
        return out;
    }
    for (int i = 0; i < net.n(); ++i) {
        const auto& s = sheets[static_cast<std::size_t>(i)];
        if (!(s.equity0 > 0.0))
            out.push_back({ViolationKind::nonpositive_equity,
                           net.bank(i) + ": equity " + format_double(s.equity0)});
        const double lhs = s.s_out + s.net_external;
        const double rhs = s.s_in + s.equity0;
        const double scale = std::max({std::abs(s.s_out), std::abs(s.net_external),
                                       std::abs(s.s_in), std::abs(s.equity0), 1.0});
        if (std::abs(lhs - rhs) > 1e-9 * scale)
            out.push_back({ViolationKind::identity_mismatch,
                           net.bank(i) + ": s_out + N^E - s_in - E = " +
                               format_double(lhs - rhs)});
    }
    return out;
}

}  // namespace ibstress
