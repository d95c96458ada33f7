#include <doctest.h>

#include <algorithm>
#include <random>

#include "ibstress/errors.hpp"
#include "ibstress/network.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ibstress;

TEST_CASE("margins: single link") {
    InterbankNetwork net({"A", "B"}, {{0, 1, 5.0}});
    const auto& m = compute_margins(net);
    CHECK(m.k_out[0] == 1);
    CHECK(m.k_in[0] == 0);
    CHECK(m.s_out[0] == doctest::Approx(5.0));
    CHECK(m.s_in[1] == doctest::Approx(5.0));
    CHECK(m.k_in[1] == 1);
    CHECK(m.k_out[1] == 0);
}

TEST_CASE("margins: empty network") {
    InterbankNetwork net({"A", "B", "C"}, {});
    const auto& m = net.margins();
    for (int i = 0; i < 3; ++i) {
        CHECK(m.k_out[static_cast<std::size_t>(i)] == 0);
        CHECK(m.k_in[static_cast<std::size_t>(i)] == 0);
        CHECK(m.s_out[static_cast<std::size_t>(i)] == 0.0);
        CHECK(m.s_in[static_cast<std::size_t>(i)] == 0.0);
    }
}

TEST_CASE("margins: three-bank ring is symmetric") {
    InterbankNetwork net({"A", "B", "C"}, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
    const auto& m = net.margins();
    for (int i = 0; i < 3; ++i) {
        CHECK(m.k_out[static_cast<std::size_t>(i)] == 1);
        CHECK(m.k_in[static_cast<std::size_t>(i)] == 1);
        CHECK(m.s_out[static_cast<std::size_t>(i)] == doctest::Approx(1.0));
        CHECK(m.s_in[static_cast<std::size_t>(i)] == doctest::Approx(1.0));
    }
}

TEST_CASE("margins match a dense-matrix brute force on random networks") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const int n = 17;
        const auto edges = test_helpers::random_edges(n, 0.2, 10.0, seed);
        const auto oracle = test_oracles::dense_margins(n, edges);
        InterbankNetwork net(test_helpers::index_banks(n), edges);
        const auto& m = net.margins();
        for (int i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            CHECK(m.k_out[idx] == oracle.k_out[idx]);
            CHECK(m.k_in[idx] == oracle.k_in[idx]);
            CHECK(m.s_out[idx] == doctest::Approx(oracle.s_out[idx]).epsilon(1e-12));
            CHECK(m.s_in[idx] == doctest::Approx(oracle.s_in[idx]).epsilon(1e-12));
        }
    }
}

TEST_CASE("construction is order-independent and sums duplicate pairs") {
    auto edges = test_helpers::random_edges(11, 0.3, 4.0, 7);
    edges.emplace_back(2, 3, 1.25);  // duplicate of a possible pair
    edges.emplace_back(2, 3, 0.75);

    NetworkBuilder fwd;
    for (const auto& [i, j, w] : edges)
        fwd.add_exposure("N" + std::to_string(i), "N" + std::to_string(j), w);
    auto shuffled = edges;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(99));
    NetworkBuilder rev;
    for (const auto& [i, j, w] : shuffled)
        rev.add_exposure("N" + std::to_string(i), "N" + std::to_string(j), w);

    const auto a = fwd.build();
    const auto b = rev.build();
    REQUIRE(a.n() == b.n());
    CHECK(a.edge_count() == b.edge_count());
    for (int i = 0; i < a.n(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        CHECK(a.bank(i) == b.bank(i));
        CHECK(a.margins().k_out[idx] == b.margins().k_out[idx]);
        CHECK(a.margins().s_out[idx] == doctest::Approx(b.margins().s_out[idx]).epsilon(1e-15));
        CHECK(a.margins().s_in[idx] == doctest::Approx(b.margins().s_in[idx]).epsilon(1e-15));
    }
}

TEST_CASE("self-loops and non-positive weights are rejected at construction") {
    CHECK_THROWS_AS(InterbankNetwork({"A", "B"}, {{0, 0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(InterbankNetwork({"A", "B"}, {{0, 1, 0.0}}), ValidationError);
    CHECK_THROWS_AS(InterbankNetwork({"A", "B"}, {{0, 1, -2.0}}), ValidationError);
    NetworkBuilder builder;
    CHECK_THROWS_AS(builder.add_exposure("A", "A", 1.0), ValidationError);
}

TEST_CASE("derive_balance_sheets: residual net external assets") {
    // bank X: s_in=10, s_out=4, E=3 -> N^E = 9
    InterbankNetwork simple({"X", "Y", "Z"}, {{1, 0, 10.0}, {0, 2, 4.0}});
    // bank X: s_in = 10 (Y lends 10 to X), s_out = 4 (X lends 4 to Z)
    const auto sheets = derive_balance_sheets(simple, {{"X", 3.0}, {"Y", 1.0}, {"Z", 1.0}});
    CHECK(sheets[0].net_external == doctest::Approx(9.0).epsilon(1e-15));

    SUBCASE("identity holds for every bank") {
        const auto violations = validate(simple, sheets);
        CHECK(violations.empty());
    }
}

TEST_CASE("derive_balance_sheets: isolated bank keeps its equity as external") {
    InterbankNetwork net({"A", "B", "C"}, {{0, 1, 2.0}});
    const auto sheets = derive_balance_sheets(net, {{"A", 5.0}, {"B", 5.0}, {"C", 1.0}});
    CHECK(sheets[2].net_external == doctest::Approx(1.0));
    CHECK(sheets[2].s_in == 0.0);
    CHECK(sheets[2].s_out == 0.0);
}

TEST_CASE("derive_balance_sheets: negative net external assets allowed") {
    // s_in=0, s_out=8, E=2 -> N^E = -6
    InterbankNetwork net({"A", "B"}, {{0, 1, 8.0}});
    const auto sheets = derive_balance_sheets(net, {{"A", 2.0}, {"B", 20.0}});
    CHECK(sheets[0].net_external == doctest::Approx(-6.0));
    CHECK(validate(net, sheets).empty());
}

TEST_CASE("derive_balance_sheets: errors") {
    InterbankNetwork net({"A", "B"}, {{0, 1, 1.0}});
    CHECK_THROWS_AS(derive_balance_sheets(net, {{"A", 1.0}}), ValidationError);
    CHECK_THROWS_AS(derive_balance_sheets(net, {{"A", 1.0}, {"B", 0.0}}), ValidationError);
    CHECK_THROWS_AS(derive_balance_sheets(net, {{"A", 1.0}, {"B", -3.0}}), ValidationError);
}

TEST_CASE("validate: clean snapshot and injected defects") {
    const auto net = test_helpers::two_bank_net();
    auto sheets = test_helpers::two_bank_sheets(net);
    CHECK(validate(net, sheets).empty());

    SUBCASE("zero equity flagged") {
        sheets[0].equity0 = 0.0;
        const auto v = validate(net, sheets);
        REQUIRE(v.size() >= 1);
        CHECK(std::count_if(v.begin(), v.end(), [](const Violation& x) {
                  return x.kind == ViolationKind::nonpositive_equity;
              }) == 1);
    }
    SUBCASE("broken identity flagged") {
        sheets[1].net_external += 1.0;
        const auto v = validate(net, sheets);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == ViolationKind::identity_mismatch);
    }
}

TEST_CASE("validate_records: injected self-loop reported") {
    const auto v = validate_records({{"A", "A", 1.0}});
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::self_loop);

    const auto w = validate_records({{"A", "B", -1.0}, {"B", "C", 2.0}});
    REQUIRE(w.size() == 1);
    CHECK(w[0].kind == ViolationKind::nonpositive_weight);

    CHECK(validate_records({{"A", "B", 1.0}}).empty());
}
