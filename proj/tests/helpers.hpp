#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ibstress/contagion.hpp"
#include "ibstress/network.hpp"

namespace test_helpers {

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("ibstress_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Two banks, the second lending 5 to the first. E(0) = (50, 10).
inline ibstress::InterbankNetwork two_bank_net() {
    return ibstress::InterbankNetwork({"A", "B"}, {{1, 0, 5.0}});
}

inline ibstress::BalanceSheets two_bank_sheets(const ibstress::InterbankNetwork& net) {
    return ibstress::derive_balance_sheets(net, {{"A", 50.0}, {"B", 10.0}});
}

// Directed ring of claims: 2 lends 2.0 to 1, 3 lends 1.0 to 2, 1 lends 1.0
// to 3. Equities (1.0, 1.5, 2.0): under default-only contagion with R=0 the
// default of bank 1 wipes bank 2 (2.0 > 1.5) but not bank 3 (1.0 < 2.0).
inline ibstress::InterbankNetwork ring_net() {
    return ibstress::InterbankNetwork({"A", "B", "C"},
                                      {{1, 0, 2.0}, {2, 1, 1.0}, {0, 2, 1.0}});
}

inline ibstress::BalanceSheets ring_sheets(const ibstress::InterbankNetwork& net) {
    return ibstress::derive_balance_sheets(net, {{"A", 1.0}, {"B", 1.5}, {"C", 2.0}});
}

// Random sparse directed network in index space, weights in (0, scale].
inline std::vector<std::tuple<int, int, double>> random_edges(int n, double density,
                                                              double scale, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (unif(gen) < density) edges.emplace_back(i, j, (unif(gen) + 0.01) * scale);
        }
    return edges;
}

inline std::vector<ibstress::BankId> index_banks(int n) {
    std::vector<ibstress::BankId> banks;
    banks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) banks.push_back("N" + std::to_string(i));
    return banks;
}

}  // namespace test_helpers
