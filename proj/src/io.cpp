#include "ibstress/io.hpp"

#include <utility>

#include "ibstress/csv.hpp"
#include "ibstress/errors.hpp"

namespace ibstress {

InterbankNetwork read_edge_csv(const std::string& path) {
    const auto table = read_csv(path);
    const int lender_col = table.column("lender");
    const int borrower_col = table.column("borrower");
    const int amount_col = table.column("amount");
    if (lender_col < 0 || borrower_col < 0 || amount_col < 0)
        throw IoError(path + ": expected header lender,borrower,amount");
    NetworkBuilder builder;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        const auto& lender = row[static_cast<std::size_t>(lender_col)];
        const auto& borrower = row[static_cast<std::size_t>(borrower_col)];
        if (lender.empty() || borrower.empty())
            throw IoError(path + ":" + std::to_string(line) + ": empty bank id");
        const double amount = parse_double_field(row[static_cast<std::size_t>(amount_col)], path,
                                                 line, "amount");
        try {
            builder.add_exposure(lender, borrower, amount);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return builder.build();
}

void write_edge_csv(const std::string& path, const InterbankNetwork& net) {
    CsvWriter out(path);
    out.row({"lender", "borrower", "amount"});
    net.for_each_edge([&](int i, int j, double w) {
        out.row({net.bank(i), net.bank(j), format_double(w)});
    });
    out.close();
}

std::map<BankId, double> read_balance_csv(const std::string& path) {
    const auto table = read_csv(path);
    const int bank_col = table.column("bank");
    const int equity_col = table.column("equity");
    if (bank_col < 0 || equity_col < 0)
        throw IoError(path + ": expected header bank,equity");
    std::map<BankId, double> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        const auto& bank = row[static_cast<std::size_t>(bank_col)];
        if (bank.empty()) throw IoError(path + ":" + std::to_string(line) + ": empty bank id");
        const double equity = parse_double_field(row[static_cast<std::size_t>(equity_col)], path,
                                                 line, "equity");
        if (!(equity > 0.0))
            throw ValidationError(path + ":" + std::to_string(line) + ": non-positive equity for " +
                                  bank);
        if (!out.emplace(bank, equity).second)
            throw ValidationError(path + ":" + std::to_string(line) + ": duplicate bank " + bank);
    }
    return out;
}

void write_balance_csv(const std::string& path, const std::vector<BankId>& banks,
                       const std::vector<double>& equity) {
    if (banks.size() != equity.size()) throw ValidationError("bank/equity size mismatch");
    CsvWriter out(path);
    out.row({"bank", "equity"});
    for (std::size_t i = 0; i < banks.size(); ++i)
        out.row({banks[i], format_double(equity[i])});
    out.close();
}

RegressionFit read_calibration_csv(const std::string& path) {
    const auto table = read_csv(path);
    const int pos_col = table.column("position");
    const int equity_col = table.column("equity");
    if (pos_col < 0 || equity_col < 0)
        throw IoError(path + ": expected header position,equity");
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto line = table.line_numbers[r];
        pairs.emplace_back(
            parse_double_field(table.rows[r][static_cast<std::size_t>(pos_col)], path, line,
                               "position"),
            parse_double_field(table.rows[r][static_cast<std::size_t>(equity_col)], path, line,
                               "equity"));
    }
    return fit_log_regression(pairs);
}

Snapshot ingest(const IngestOptions& opts) {
    auto net = read_edge_csv(opts.edges_path);
    std::map<BankId, double> balance;
    std::vector<std::string> inputs{opts.edges_path};
    if (!opts.balance_path.empty()) {
        balance = read_balance_csv(opts.balance_path);
        inputs.push_back(opts.balance_path);
        // Banks known only from the balance file stay in the snapshot as
        // isolated nodes: they still count in system-wide denominators.
        bool extra = false;
        for (const auto& [bank, _] : balance)
            if (!net.bank_index(bank)) extra = true;
        if (extra) {
            NetworkBuilder builder;
            for (const auto& [bank, _] : balance) builder.add_bank(bank);
            for (int i = 0; i < net.n(); ++i) builder.add_bank(net.bank(i));
            net.for_each_edge([&](int i, int j, double w) {
                builder.add_exposure(net.bank(i), net.bank(j), w);
            });
            net = builder.build();
        }
    }

    const auto& margins = net.margins();
    std::unordered_map<BankId, double> equity;
    for (int i = 0; i < net.n(); ++i) {
        const auto it = balance.find(net.bank(i));
        if (it != balance.end()) {
            equity[net.bank(i)] = it->second;
            continue;
        }
        if (!opts.imputation)
            throw ValidationError("bank " + net.bank(i) +
                                  " has exposures but no equity source (balance sheet entry or "
                                  "imputation model)");
        const double pos = (margins.s_in[static_cast<std::size_t>(i)] +
                            margins.s_out[static_cast<std::size_t>(i)]) /
                           2.0;
        equity[net.bank(i)] = impute_equity_one(*opts.imputation, pos);
    }

    Snapshot snap{std::move(net), {}, std::move(inputs)};
    snap.sheets = derive_balance_sheets(snap.net, equity);
    const auto violations = validate(snap.net, snap.sheets);
    if (!violations.empty()) {
        std::string msg = "snapshot failed validation:";
        for (const auto& v : violations) msg += "\n  " + v.detail;
        throw ValidationError(msg);
    }
    return snap;
}

}  // namespace ibstress
